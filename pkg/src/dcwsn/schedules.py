"""Duty-cycle schedules, pairwise connection probabilities and the vertex-based model.

A schedule is an L-slot wake bitmap with exactly d bits set. Single schedules
use a Python int as the bitmap; whole deployments use :class:`ScheduleArray`,
which packs each node's bitmap into little-endian uint64 words so that the
overlap test is a word-wise AND.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

CONTIGUOUS = "contiguous"
RANDOM = "random"
FAMILY = "family"
CUSTOM = "custom"
SCHEME_KINDS = (CONTIGUOUS, RANDOM, FAMILY, CUSTOM)

_CHUNK = 1 << 14


@dataclass(frozen=True)
class Schedule:
    bits: int
    L: int

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if not 0 < self.bits < (1 << self.L):
            raise ValueError("schedule needs between 1 and L awake slots inside [0, L)")

    @property
    def d(self) -> int:
        return bin(self.bits).count("1")

    @property
    def slots(self) -> tuple[int, ...]:
        return tuple(k for k in range(self.L) if self.bits >> k & 1)

    def awake(self, t: int) -> bool:
        return bool(self.bits >> (t % self.L) & 1)

    @classmethod
    def from_slots(cls, slots, L: int) -> "Schedule":
        bits = 0
        for k in slots:
            if not 0 <= k < L:
                raise ValueError(f"slot {k} outside [0, {L})")
            bits |= 1 << k
        return cls(bits, L)

    def to_text(self) -> str:
        width = (self.L + 3) // 4
        return f"{self.L},{self.d}\n{self.bits:0{width}x}"

    @classmethod
    def from_text(cls, text: str) -> "Schedule":
        header, hexbits = text.strip().splitlines()
        L, d = (int(v) for v in header.split(","))
        s = cls(int(hexbits, 16), L)
        if s.d != d:
            raise ValueError(f"header says d={d} but bitmap has {s.d} awake slots")
        return s

    def runs(self) -> int:
        """Number of maximal awake runs, counted cyclically."""
        if self.d == self.L:
            return 0
        rotated = ((self.bits << 1) | (self.bits >> (self.L - 1))) & ((1 << self.L) - 1)
        # a run starts at k when k is awake and k-1 (cyclically) is asleep
        return bin(self.bits & ~rotated).count("1")


def _check_dl(d: int, L: int) -> None:
    if L < 1 or d < 1:
        raise ValueError(f"need d >= 1 and L >= 1, got d={d}, L={L}")
    if d > L:
        raise ValueError(f"d={d} exceeds L={L}")


def overlap(s1: Schedule, s2: Schedule) -> bool:
    if s1.L != s2.L:
        raise ValueError(f"schedules have different cycle lengths {s1.L} and {s2.L}")
    return (s1.bits & s2.bits) != 0


# --------------------------------------------------------------------------
# packed arrays
# --------------------------------------------------------------------------

def n_words(L: int) -> int:
    return (L + 63) // 64


def pack_bool(awake: np.ndarray) -> np.ndarray:
    """(m, L) bool matrix -> (m, W) uint64 words, slot k in bit k % 64 of word k // 64."""
    m, L = awake.shape
    W = n_words(L)
    padded = np.zeros((m, W * 64), dtype=bool)
    padded[:, :L] = awake
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").reshape(m, W).astype(np.uint64)


def unpack_bool(words: np.ndarray, L: int) -> np.ndarray:
    as_bytes = np.ascontiguousarray(words.astype("<u8")).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :L].astype(bool)


@dataclass(frozen=True, eq=False)
class ScheduleArray:
    """One schedule per node, packed; row ``i`` belongs to node ``i``."""

    words: np.ndarray
    L: int

    def __post_init__(self):
        w = np.array(self.words, dtype=np.uint64, ndmin=2)
        if w.shape[1] != n_words(self.L):
            raise ValueError("word count does not match L")
        w.setflags(write=False)
        object.__setattr__(self, "words", w)

    def __len__(self) -> int:
        return len(self.words)

    def __getitem__(self, i: int) -> Schedule:
        bits = 0
        for j, w in enumerate(self.words[i]):
            bits |= int(w) << (64 * j)
        return Schedule(bits, self.L)

    @classmethod
    def from_schedules(cls, schedules: Sequence[Schedule]) -> "ScheduleArray":
        L = schedules[0].L
        if any(s.L != L for s in schedules):
            raise ValueError("all schedules must share L")
        W = n_words(L)
        words = np.array([[(s.bits >> (64 * j)) & 0xFFFFFFFFFFFFFFFF for j in range(W)] for s in schedules],
                         dtype=np.uint64)
        return cls(words, L)

    @classmethod
    def from_bool(cls, awake: np.ndarray) -> "ScheduleArray":
        return cls(pack_bool(np.asarray(awake, dtype=bool)), awake.shape[1])

    def to_bool(self) -> np.ndarray:
        return unpack_bool(self.words, self.L)

    def to_bool_row(self, i: int) -> np.ndarray:
        return unpack_bool(self.words[i:i + 1], self.L)[0]

    def popcounts(self) -> np.ndarray:
        return self.to_bool().sum(axis=1)

    @property
    def all_awake(self) -> bool:
        return bool((self.popcounts() == self.L).all())

    def overlap(self, u, v) -> np.ndarray:
        """Vectorized overlap test for aligned index arrays ``u`` and ``v``."""
        return np.bitwise_and(self.words[u], self.words[v]).any(axis=-1)

    def awake_at(self, t: int, nodes=None) -> np.ndarray:
        k = t % self.L
        col = self.words[:, k // 64] if nodes is None else self.words[nodes, k // 64]
        return ((col >> np.uint64(k % 64)) & np.uint64(1)).astype(bool)

    def runs(self) -> np.ndarray:
        """Maximal cyclic awake runs per node (0 for an always-awake node)."""
        a = self.to_bool()
        starts = a & ~np.roll(a, 1, axis=1)
        return starts.sum(axis=1)


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def gen_contiguous(L: int, d: int, rng: np.random.Generator, start: int | None = None) -> Schedule:
    _check_dl(d, L)
    i = int(rng.integers(0, L)) if start is None else start % L
    return Schedule.from_slots(((i + j) % L for j in range(d)), L)


def gen_random_selection(L: int, d: int, rng: np.random.Generator) -> Schedule:
    _check_dl(d, L)
    return Schedule.from_slots(rng.choice(L, size=d, replace=False).tolist(), L)


def assign_contiguous(m: int, L: int, d: int, rng: np.random.Generator) -> ScheduleArray:
    _check_dl(d, L)
    starts = rng.integers(0, L, m)
    blocks = []
    for a in range(0, m, _CHUNK):
        s = starts[a:a + _CHUNK]
        awake = (np.arange(L)[None, :] - s[:, None]) % L < d
        blocks.append(pack_bool(awake))
    return ScheduleArray(np.concatenate(blocks) if blocks else np.zeros((0, n_words(L)), np.uint64), L)


def assign_random_selection(m: int, L: int, d: int, rng: np.random.Generator) -> ScheduleArray:
    _check_dl(d, L)
    blocks = []
    for a in range(0, m, _CHUNK):
        c = min(_CHUNK, m - a)
        chosen = np.argpartition(rng.random((c, L)), d - 1, axis=1)[:, :d]
        awake = np.zeros((c, L), dtype=bool)
        np.put_along_axis(awake, chosen, True, axis=1)
        blocks.append(pack_bool(awake))
    return ScheduleArray(np.concatenate(blocks) if blocks else np.zeros((0, n_words(L)), np.uint64), L)


def assign_always_awake(m: int, L: int = 1) -> ScheduleArray:
    return ScheduleArray.from_bool(np.ones((m, L), dtype=bool))


@dataclass(frozen=True)
class SchemeSpec:
    """How a node picks its wake slots.

    ``family`` is used by the ``family`` kind (uniform choice among fixed
    schedules); ``sampler`` by ``custom`` (any callable ``rng -> Schedule``).
    """

    kind: str
    L: int
    d: int
    family: tuple[Schedule, ...] | None = None
    sampler: Callable[[np.random.Generator], Schedule] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        _check_dl(self.d, self.L)
        if self.kind == FAMILY and not self.family:
            raise ValueError("family scheme needs its schedules")
        if self.kind == CUSTOM and self.sampler is None:
            raise ValueError("custom scheme needs a sampler")

    @property
    def delta(self) -> Fraction:
        return Fraction(self.d, self.L)

    def wake_probabilities(self) -> np.ndarray | None:
        """Per-slot wake probability when known in closed form."""
        if self.kind in (CONTIGUOUS, RANDOM):
            return np.full(self.L, self.d / self.L)
        if self.kind == FAMILY:
            fam = ScheduleArray.from_schedules(self.family).to_bool()
            return fam.mean(axis=0)
        return None

    def draw(self, rng: np.random.Generator) -> Schedule:
        if self.kind == CONTIGUOUS:
            return gen_contiguous(self.L, self.d, rng)
        if self.kind == RANDOM:
            return gen_random_selection(self.L, self.d, rng)
        if self.kind == FAMILY:
            return self.family[int(rng.integers(0, len(self.family)))]
        return self.sampler(rng)

    def assign(self, m: int, rng: np.random.Generator) -> ScheduleArray:
        if self.kind == CONTIGUOUS:
            return assign_contiguous(m, self.L, self.d, rng)
        if self.kind == RANDOM:
            return assign_random_selection(m, self.L, self.d, rng)
        if self.kind == FAMILY:
            fam = ScheduleArray.from_schedules(self.family)
            return ScheduleArray(fam.words[rng.integers(0, len(self.family), m)], self.L)
        return ScheduleArray.from_schedules([self.sampler(rng) for _ in range(m)])


def contiguous_scheme(L: int, d: int) -> SchemeSpec:
    return SchemeSpec(CONTIGUOUS, L, d)


def random_scheme(L: int, d: int) -> SchemeSpec:
    return SchemeSpec(RANDOM, L, d)


def always_awake_scheme(L: int = 1) -> SchemeSpec:
    return SchemeSpec(CONTIGUOUS, L, L)


# --------------------------------------------------------------------------
# connection probabilities
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Estimate:
    p: float
    se: float
    trials: int

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.p - value) <= k * self.se + 1e-12

    @property
    def lower(self) -> float:
        return self.p - 3 * self.se


def _estimate(hits: int, trials: int) -> Estimate:
    p = hits / trials
    return Estimate(p, math.sqrt(p * (1 - p) / trials), trials)


def gamma_contiguous(d: int, L: int, exact: bool = False):
    """Probability that two contiguous schedules share a slot, (2d-1)/L clamped to 1."""
    _check_dl(d, L)
    g = min(Fraction(1), Fraction(2 * d - 1, L))
    return g if exact else float(g)


def gamma_random(d: int, L: int) -> float:
    """Working value 1 - (1 - d/L)^d for random selection (a lower bound on the true value)."""
    _check_dl(d, L)
    return min(1.0, 1.0 - (1.0 - d / L) ** d)


def gamma_random_exact(d: int, L: int) -> Fraction:
    """Exact overlap probability of two uniform d-subsets: 1 - C(L-d, d) / C(L, d)."""
    _check_dl(d, L)
    return 1 - Fraction(math.comb(L - d, d), math.comb(L, d))


def gamma_for(scheme: SchemeSpec) -> float:
    """Analytic gamma used for radius computations; None-free for the two built-in schemes."""
    if scheme.d * 2 > scheme.L:
        return 1.0
    if scheme.kind == CONTIGUOUS:
        return gamma_contiguous(scheme.d, scheme.L)
    if scheme.kind == RANDOM:
        return gamma_random(scheme.d, scheme.L)
    if scheme.kind == FAMILY:
        fam = ScheduleArray.from_schedules(scheme.family)
        k = len(fam)
        u, v = np.meshgrid(np.arange(k), np.arange(k))
        return float(fam.overlap(u.ravel(), v.ravel()).mean())
    raise ValueError("no closed form for custom schemes; use gamma_empirical")


def gamma_empirical(scheme, trials: int, rng: np.random.Generator) -> Estimate:
    """Fraction of independent pairs that connect, for a SchemeSpec or a VBModel."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    model = scheme if isinstance(scheme, VBModel) else schedule_model(scheme)
    hits = 0
    for a in range(0, trials, _CHUNK * 4):
        c = min(_CHUNK * 4, trials - a)
        mu = model.sample(c, rng)
        mv = model.sample(c, rng)
        hits += int(np.count_nonzero(model.predicate(mu, mv)))
    return _estimate(hits, trials)


def triangle_prob_contiguous(d: int, L: int, exact: bool = False):
    """Probability that three contiguous schedules overlap pairwise.

    Equals (3d^2 - 3d + 1)/L^2 while L >= 3d - 2. For shorter cycles the
    windows wrap around and meet on the far side too, so the value is counted
    exactly over start offsets instead.
    """
    _check_dl(d, L)
    if L >= 3 * d - 2:
        p = Fraction(3 * d * d - 3 * d + 1, L * L)
    else:
        s = np.arange(L)
        near = np.minimum(s, L - s) < d  # circular offset from slot 0 within d-1
        # v at offset a from u, w at offset b: need near[a], near[b], near[b - a]
        hits = int((near[:, None] & near[None, :] & near[(s[None, :] - s[:, None]) % L]).sum())
        p = Fraction(hits, L * L)
    return p if exact else float(p)


# --------------------------------------------------------------------------
# vertex-based random connection model
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VBModel:
    """Independent per-node marks plus a symmetric connection predicate.

    ``sample(m, rng)`` returns ``m`` marks stacked along axis 0;
    ``predicate(a, b)`` is vectorized over aligned mark stacks.
    """

    name: str
    sample: Callable[[int, np.random.Generator], Any] = field(compare=False)
    predicate: Callable[[Any, Any], np.ndarray] = field(compare=False)
    gamma: float
    params: tuple = ()

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")


def vb_connect(model: VBModel, mark_u, mark_v) -> bool:
    a = np.asarray(mark_u)[None, ...]
    b = np.asarray(mark_v)[None, ...]
    return bool(np.asarray(model.predicate(a, b))[0])


def _words_overlap(a, b) -> np.ndarray:
    return np.bitwise_and(a, b).any(axis=-1)


def schedule_model(scheme: SchemeSpec) -> VBModel:
    try:
        g = gamma_for(scheme)
    except ValueError:
        g = 1.0  # placeholder; custom schemes report gamma empirically
    return VBModel(
        name=f"schedule-{scheme.kind}",
        sample=lambda m, rng: scheme.assign(m, rng).words,
        predicate=_words_overlap,
        gamma=g,
        params=(scheme.kind, scheme.L, scheme.d),
    )


COLOR_NAMES = ("red", "green", "blue")


def color_model(colors: int = 3) -> VBModel:
    """Nodes carry one of ``colors`` colors; only differently colored nodes connect."""
    if colors < 2:
        raise ValueError("need at least two colors")
    names = np.array(COLOR_NAMES if colors == 3 else [f"c{i}" for i in range(colors)])
    return VBModel(
        name="color",
        sample=lambda m, rng: names[rng.integers(0, colors, m)],
        predicate=lambda a, b: np.asarray(a) != np.asarray(b),
        gamma=1 - 1 / colors,
        params=(colors,),
    )


def key_predistribution_model(pool: int, keys: int) -> VBModel:
    """Each node holds ``keys`` distinct keys from a pool of ``pool``; connect on a shared key."""
    _check_dl(keys, pool)
    scheme = random_scheme(pool, keys)
    g = float(gamma_random_exact(keys, pool))
    return VBModel(
        name="keys",
        sample=lambda m, rng: scheme.assign(m, rng).words,
        predicate=_words_overlap,
        gamma=g,
        params=(pool, keys),
    )


def interval_model(gamma: float) -> VBModel:
    """Marks uniform on a unit circle; connect when their circular distance is at most gamma/2.

    Gives any target connection probability exactly.
    """

    def pred(a, b):
        diff = np.abs(np.asarray(a) - np.asarray(b))
        return np.minimum(diff, 1.0 - diff) <= gamma / 2

    return VBModel(
        name="interval",
        sample=lambda m, rng: rng.random(m),
        predicate=pred,
        gamma=float(gamma),
        params=(gamma,),
    )


def connection_diversity(model: VBModel, k: int, trials: int, rng: np.random.Generator) -> Estimate:
    """Estimate P(f(Z0,Z1) = 0 and f(Z0,Zi) = 1 for some 2 <= i <= k)."""
    if k < 2:
        raise ValueError("k must be >= 2")
    z0 = model.sample(trials, rng)
    z1 = model.sample(trials, rng)
    event = ~np.asarray(model.predicate(z0, z1), dtype=bool)
    any_other = np.zeros(trials, dtype=bool)
    for _ in range(2, k + 1):
        any_other |= np.asarray(model.predicate(z0, model.sample(trials, rng)), dtype=bool)
    return _estimate(int(np.count_nonzero(event & any_other)), trials)


# --------------------------------------------------------------------------
# reachability and time coverage
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SupportGraph:
    schedules: tuple[Schedule, ...]
    adjacency: np.ndarray  # (N, N) bool, diagonal True

    @classmethod
    def from_schedules(cls, schedules) -> "SupportGraph":
        uniq = tuple(dict.fromkeys(schedules))
        if not uniq:
            raise ValueError("support must be nonempty")
        arr = ScheduleArray.from_schedules(uniq)
        adj = np.stack([arr.overlap(np.full(len(uniq), i), np.arange(len(uniq))) for i in range(len(uniq))])
        return cls(uniq, adj)

    def __len__(self) -> int:
        return len(self.schedules)


def build_support(scheme: SchemeSpec, rng: np.random.Generator | None = None,
                  draws: int = 256, exact_limit: int = 512) -> SupportGraph:
    """Support of the scheme: exact when small enough, otherwise the distinct schedules in ``draws`` samples."""
    L, d = scheme.L, scheme.d
    if scheme.kind == CONTIGUOUS and L <= exact_limit:
        return SupportGraph.from_schedules([gen_contiguous(L, d, None, start=i) for i in range(L)])
    if scheme.kind == RANDOM and math.comb(L, d) <= exact_limit:
        from itertools import combinations
        return SupportGraph.from_schedules([Schedule.from_slots(c, L) for c in combinations(range(L), d)])
    if scheme.kind == FAMILY:
        return SupportGraph.from_schedules(scheme.family)
    if rng is None:
        raise ValueError("a sampled support needs an rng")
    return SupportGraph.from_schedules([scheme.draw(rng) for _ in range(draws)])


def check_reachability(support: SupportGraph, max_k: int = 64) -> tuple[bool, int | None]:
    """Whether every pair of support schedules is joined by a chain of overlapping ones.

    Returns ``(reachable, k)`` where ``k`` is the diameter of the support graph,
    or ``None`` when it is disconnected.
    """
    n = len(support)
    A = support.adjacency.astype(np.float32)
    reach = np.eye(n, dtype=bool)
    k = 0
    while not reach.all():
        nxt = (reach.astype(np.float32) @ A) > 0
        if (nxt == reach).all():
            return False, None
        reach = nxt
        k += 1
    return k <= max_k, k


@dataclass(frozen=True)
class TimeCoverage:
    deltas: np.ndarray
    trials: int

    @property
    def se(self) -> np.ndarray:
        p = self.deltas
        return np.sqrt(p * (1 - p) / self.trials)

    @property
    def violations(self) -> list[int]:
        return [int(k) for k in np.flatnonzero(self.deltas == 0)]

    @property
    def covered(self) -> bool:
        return not self.violations


def check_time_coverage(scheme: SchemeSpec, trials: int, rng: np.random.Generator) -> TimeCoverage:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    counts = np.zeros(scheme.L, dtype=np.int64)
    for a in range(0, trials, _CHUNK):
        c = min(_CHUNK, trials - a)
        counts += scheme.assign(c, rng).to_bool().sum(axis=0)
    return TimeCoverage(counts / trials, trials)
