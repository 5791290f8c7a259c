"""Closed-form connectivity radii and the c(n) presets.

All logarithms are natural. Every radius has the form
``sqrt((ln n + c(n)) / (pi * n * q))`` where ``q`` is 1 (plain RGG), the minimum
per-slot wake probability (weak radius) or the pairwise connection probability
gamma (optimal radius).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from dcwsn.schedules import gamma_contiguous, gamma_random


@dataclass(frozen=True)
class CnPreset:
    """A named additive term c(n).

    ``name`` is one of ``loglog``, ``const``, ``neg_const``, ``neg_loglog``,
    ``neg_loglog_sq``, ``neg_k_sqrt_log``; ``k`` is the constant for the
    parameterized forms.
    """

    name: str
    k: float = 0.0

    def __call__(self, n: float) -> float:
        return eval_cn(self, n)

    def __str__(self) -> str:
        if self.name in ("const", "neg_const", "neg_k_sqrt_log"):
            return f"{self.name}({self.k:g})"
        return self.name


LOGLOG = CnPreset("loglog")
NEG_LOGLOG = CnPreset("neg_loglog")
NEG_LOGLOG_SQ = CnPreset("neg_loglog_sq")


def const(c: float) -> CnPreset:
    return CnPreset("const", c)


def neg_const(c: float) -> CnPreset:
    return CnPreset("neg_const", c)


def neg_k_sqrt_log(k: float) -> CnPreset:
    return CnPreset("neg_k_sqrt_log", k)


def parse_cn(text: str) -> CnPreset:
    """Parse ``loglog``, ``neg_loglog_sq``, ``const(1.5)``, ``neg_k_sqrt_log(2)`` or a bare number."""
    text = text.strip()
    if "(" in text:
        name, arg = text.rstrip(")").split("(", 1)
        preset = CnPreset(name.strip(), float(arg))
    else:
        try:
            return const(float(text))
        except ValueError:
            preset = CnPreset(text)
    eval_cn(preset, 100)  # reject unknown names early
    return preset


def eval_cn(preset: CnPreset, n: float) -> float:
    name = preset.name
    if name == "const":
        return float(preset.k)
    if name == "neg_const":
        return -abs(float(preset.k))
    if n <= math.e:
        raise ValueError(f"c(n) preset {name!r} needs n > e, got {n}")
    ln = math.log(n)
    if name == "loglog":
        return math.log(ln)
    if name == "neg_loglog":
        return -math.log(ln)
    if name == "neg_loglog_sq":
        return -math.log(ln) ** 2
    if name == "neg_k_sqrt_log":
        return -preset.k * math.sqrt(ln)
    raise ValueError(f"unknown c(n) preset {name!r}")


def _cn_value(cn, n) -> float:
    return eval_cn(cn, n) if isinstance(cn, CnPreset) else float(cn)


def rgg_radius(n: int, cn=LOGLOG) -> float:
    if n < 3:
        raise ValueError("n must be >= 3")
    num = math.log(n) + _cn_value(cn, n)
    if num <= 0:
        raise ValueError(f"ln n + c(n) must be positive, got {num}")
    return math.sqrt(num / (math.pi * n))


def weak_radius(n: int, delta_min: float, cn=LOGLOG) -> float:
    if not 0 < delta_min <= 1:
        raise ValueError(f"delta_min must lie in (0, 1], got {delta_min}")
    return rgg_radius(n, cn) / math.sqrt(delta_min)


def optimal_radius(n: int, gamma: float, cn=LOGLOG) -> float:
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    return rgg_radius(n, cn) / math.sqrt(gamma)


def d_from(delta: float, L: int) -> int:
    return max(1, round(delta * L))


def optimal_dcc_radius(n: int, delta: float, L: int, cn=LOGLOG) -> float:
    """Optimal radius for contiguous schedules; the plain RGG radius once (2d-1)/L >= 1."""
    d = d_from(delta, L)
    return optimal_radius(n, gamma_contiguous(d, L), cn)


def optimal_dcr_radius(n: int, delta: float, d: int, cn=LOGLOG) -> float:
    if not 0 < delta <= 1 or d < 1:
        raise ValueError("need 0 < delta <= 1 and d >= 1")
    return optimal_radius(n, 1.0 - (1.0 - delta) ** d, cn)


def weak_over_optimal(delta: float, gamma: float) -> float:
    return math.sqrt(gamma / delta)


def optimal_over_rgg(gamma: float) -> float:
    return 1.0 / math.sqrt(gamma)


FORMULAS = ("rgg", "weak", "optimal", "dcc", "dcr")


@dataclass(frozen=True)
class RadiusSpec:
    """A radius formula together with its parameters.

    For ``dcc``/``dcr`` any missing member of (delta, L, d) is derived from the
    other two, with d = round(delta * L).
    """

    formula: str
    n: int
    cn: CnPreset = LOGLOG
    delta: float | None = None
    L: int | None = None
    d: int | None = None
    gamma: float | None = None

    def resolved(self) -> "RadiusSpec":
        delta, L, d = self.delta, self.L, self.d
        if delta is not None and L is not None and d is None:
            d = d_from(delta, L)
        elif delta is not None and d is not None and L is None:
            L = math.ceil(d / delta)
        elif delta is None and d is not None and L is not None:
            delta = d / L
        return RadiusSpec(self.formula, self.n, self.cn, delta, L, d, self.gamma)

    def effective_gamma(self) -> float:
        s = self.resolved()
        if s.formula == "dcc":
            return gamma_contiguous(s.d, s.L)
        if s.formula == "dcr":
            return min(1.0, 1.0 - (1.0 - s.delta) ** s.d)
        if s.formula == "optimal":
            return s.gamma
        return 1.0

    def radius(self) -> float:
        s = self.resolved()
        if s.formula == "rgg":
            return rgg_radius(s.n, s.cn)
        if s.formula == "weak":
            return weak_radius(s.n, s.delta, s.cn)
        if s.formula == "optimal":
            return optimal_radius(s.n, s.gamma, s.cn)
        if s.formula == "dcc":
            return optimal_dcc_radius(s.n, s.delta, s.L, s.cn)
        if s.formula == "dcr":
            return optimal_dcr_radius(s.n, s.delta, s.d, s.cn)
        raise ValueError(f"unknown radius formula {s.formula!r}")


def scheme_gamma(kind: str, delta: float, L: int | None = None, d: int | None = None) -> float:
    """Working gamma for the contiguous or random-selection scheme."""
    if d is None:
        d = d_from(delta, L)
    if L is None:
        L = math.ceil(d / delta)
    if kind == "contiguous":
        return gamma_contiguous(d, L)
    if kind == "random":
        return gamma_random(d, L) if 2 * d <= L else 1.0
    raise ValueError(f"unknown scheme kind {kind!r}")
