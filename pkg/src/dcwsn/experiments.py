"""Batch experiments: component sweeps, c(n) sweeps, radius tables, routing/power suite.

Each trial draws from its own stream ``make_rng(seed, row, trial, purpose)``,
so output is identical whatever the worker count or completion order.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from dcwsn import radii
from dcwsn.geometry import build_index, make_deployment
from dcwsn.graph import dc_component_stats
from dcwsn.power import PowerProfile, task_power
from dcwsn.radii import CnPreset, parse_cn
from dcwsn.rng import DEPLOY, SCHEDULE, make_rng
from dcwsn.routing import RELAXED, STRICT, pick_destination, send_greedy
from dcwsn.schedules import (CONTIGUOUS, RANDOM, SchemeSpec, always_awake_scheme, gamma_contiguous,
                             gamma_random)

DESK_N = (100_000, 200_000)
FULL_N = (100_000, 200_000, 500_000, 1_000_000)
SCHEMES = ("contiguous", "random", "always")
RADIUS_KINDS = ("weak", "optimal", "rgg")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    scheme: str = "contiguous"
    n: tuple[int, ...] = DESK_N
    delta: tuple[float, ...] = (0.05,)
    L: int | None = 100
    d: int | None = None
    radius: str = "weak"
    cn: tuple[CnPreset, ...] = (radii.LOGLOG,)
    reps: int = 5
    seed: int = 0
    out: str | None = None
    leaf_capacity: int = 32
    sampler: str = "wedge"
    workers: int = 1
    full: bool = False
    route_dist: float = 0.1
    fallback_relaxed: bool = True

    def validate(self) -> "ExperimentConfig":
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.radius not in RADIUS_KINDS:
            raise ConfigError(f"radius must be one of {RADIUS_KINDS}, got {self.radius!r}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if not self.n or not self.delta or not self.cn:
            raise ConfigError("need at least one value of n, delta and cn")
        if any(n < 3 for n in self.n):
            raise ConfigError("n must be >= 3")
        if any(not 0 < x <= 1 for x in self.delta):
            raise ConfigError("delta values must lie in (0, 1]")
        if (self.L is None) == (self.d is None):
            raise ConfigError("fix exactly one of L and d")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")
        return self

    def cycle(self, delta: float) -> tuple[int, int]:
        if self.L is not None:
            return self.L, max(1, round(delta * self.L))
        return math.ceil(self.d / delta - 1e-9), self.d


_LIST_KEYS = {"n": int, "delta": float}


def _parse_value(key: str, raw: str):
    kinds = {f.name: f.type for f in fields(ExperimentConfig)}
    if key not in kinds:
        raise ConfigError(f"unknown config key {key!r}")
    raw = raw.strip()
    try:
        if key in _LIST_KEYS:
            return tuple(_LIST_KEYS[key](float(v)) if key == "n" else float(v)
                         for v in raw.replace(";", ",").split(",") if v.strip())
        if key == "cn":
            return tuple(parse_cn(v) for v in _split_cn(raw))
        if key in ("L", "d"):
            return None if raw.lower() in ("", "none") else int(raw)
        if key in ("reps", "seed", "leaf_capacity", "workers"):
            return int(raw)
        if key in ("full", "fallback_relaxed"):
            return raw.lower() in ("1", "true", "yes", "on")
        if key == "route_dist":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc


def _split_cn(raw: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in raw:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch in ",;" and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    out.append(cur)
    return [s for s in out if s.strip()]


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Read a flat ``key = value`` file ('#' starts a comment) and apply overrides."""
    values = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, raw = line.split("=", 1)
            values[key.strip()] = _parse_value(key.strip(), raw)
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        values[key] = _parse_value(key, raw) if isinstance(raw, str) else raw
    if "d" in values and "L" not in values:
        values["L"] = None
    if values.get("full") and "n" not in values:
        values["n"] = FULL_N
    return ExperimentConfig(**values).validate()


# --------------------------------------------------------------------------
# rows
# --------------------------------------------------------------------------

ROW_COLUMNS = ("experiment", "scheme", "radius_kind", "cn", "n", "delta", "L", "d", "r",
               "metric", "mean", "std", "reps", "values")


@dataclass
class ResultRow:
    experiment: str
    scheme: str
    radius_kind: str
    cn: str
    n: int
    delta: float
    L: int
    d: int
    r: float
    metric: str
    values: list[float] = field(default_factory=list)

    @property
    def mean(self) -> float:
        v = np.asarray(self.values, dtype=float)
        v = v[~np.isnan(v)]
        return float(v.mean()) if len(v) else math.nan

    @property
    def std(self) -> float:
        v = np.asarray(self.values, dtype=float)
        v = v[~np.isnan(v)]
        return float(v.std(ddof=1)) if len(v) > 1 else 0.0

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment, "scheme": self.scheme, "radius_kind": self.radius_kind,
            "cn": self.cn, "n": self.n, "delta": _fmt(self.delta), "L": self.L, "d": self.d,
            "r": _fmt(self.r), "metric": self.metric, "mean": _fmt(self.mean), "std": _fmt(self.std),
            "reps": len(self.values), "values": ";".join(_fmt(v) for v in self.values),
        }


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def write_rows(rows, out=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=ROW_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row.as_dict())
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


# --------------------------------------------------------------------------
# component sweeps
# --------------------------------------------------------------------------

def scheme_spec(scheme: str, L: int, d: int) -> SchemeSpec:
    if scheme == "contiguous":
        return SchemeSpec(CONTIGUOUS, L, d)
    if scheme == "random":
        return SchemeSpec(RANDOM, L, d)
    if scheme == "always":
        return always_awake_scheme(L)
    raise ConfigError(f"unknown scheme {scheme!r}")


def scheme_gamma(scheme: str, L: int, d: int) -> float:
    if scheme == "always" or 2 * d > L:
        return 1.0
    if scheme == "contiguous":
        return gamma_contiguous(d, L)
    return gamma_random(d, L)


def radius_for(scheme: str, kind: str, n: int, L: int, d: int, cn: CnPreset) -> float:
    if kind == "rgg" or scheme == "always":
        return radii.rgg_radius(n, cn)
    if kind == "weak":
        return radii.weak_radius(n, d / L, cn)
    if kind == "optimal":
        return radii.optimal_radius(n, scheme_gamma(scheme, L, d), cn)
    raise ConfigError(f"unknown radius kind {kind!r}")


COMPONENT_METRICS = ("largest_fraction", "isolated_count", "second_largest_size", "component_count")


def _component_trial(args):
    scheme, n, L, d, r, seed, row, trial, leaf_capacity, sampler = args
    dep = make_deployment(n, seed, sampler, rng=make_rng(seed, row, trial, DEPLOY))
    sched = scheme_spec(scheme, L, d).assign(len(dep), make_rng(seed, row, trial, SCHEDULE))
    stats = dc_component_stats(dep, sched, r, build_index(dep, leaf_capacity))
    return tuple(float(getattr(stats, m)) for m in COMPONENT_METRICS)


def _map(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def run_component_sweep(cfg: ExperimentConfig, experiment: str = "sweep", row_offset: int = 0) -> list[ResultRow]:
    cfg.validate()
    rows: list[ResultRow] = []
    cells = [(cn, n, delta) for cn in cfg.cn for n in cfg.n for delta in cfg.delta]
    for i, (cn, n, delta) in enumerate(cells):
        L, d = cfg.cycle(delta)
        r = radius_for(cfg.scheme, cfg.radius, n, L, d, cn)
        jobs = [(cfg.scheme, n, L, d, r, cfg.seed, row_offset + i, t, cfg.leaf_capacity, cfg.sampler)
                for t in range(cfg.reps)]
        results = _map(_component_trial, jobs, cfg.workers)
        for k, metric in enumerate(COMPONENT_METRICS):
            rows.append(ResultRow(experiment, cfg.scheme, cfg.radius, str(cn), n, delta, L, d, r, metric,
                                  [res[k] for res in results]))
    return rows


def run_cn_sweep(cfg: ExperimentConfig) -> list[ResultRow]:
    """Component sweep repeated for every c(n) preset in ``cfg.cn``."""
    return run_component_sweep(cfg, experiment="cn-sweep")


# --------------------------------------------------------------------------
# analytic tables
# --------------------------------------------------------------------------

TABLE_DELTAS = (0.02, 0.05, 0.10, 0.15, 0.20, 0.50)
# printed values, keyed (table, L, scheme) -> one entry per TABLE_DELTAS
PRINTED_RATIOS = {
    ("weak/optimal", 200, "contiguous"): (1.322, 1.378, 1.396, 1.402, 1.405, 1.410),
    ("weak/optimal", 200, "random"): (1.970, 2.832, 2.963, 2.572, 2.236, 1.414),
    ("weak/optimal", 100, "contiguous"): (1.224, 1.341, 1.378, 1.390, 1.396, 1.407),
    ("weak/optimal", 100, "random"): (1.407, 2.127, 2.552, 2.466, 2.249, 1.414),
    ("optimal/rgg", 200, "contiguous"): (5.345, 3.244, 2.264, 1.841, 1.591, 1.002),
    ("optimal/rgg", 200, "random"): (3.589, 1.578, 1.067, 1.003, 1.000, 1.0),
    ("optimal/rgg", 100, "contiguous"): (5.773, 3.333, 2.294, 1.857, 1.601, 1.005),
    ("optimal/rgg", 100, "random"): (5.025, 2.102, 1.239, 1.046, 1.005, 1.005),
}


@dataclass(frozen=True)
class TableEntry:
    table: str
    L: int
    scheme: str
    delta: float
    computed: float
    printed: float

    @property
    def diff(self) -> float:
        return self.computed - self.printed


def table_ratio(table: str, scheme: str, delta: float, L: int) -> float:
    d = radii.d_from(delta, L)
    if scheme == "contiguous":
        gamma = gamma_contiguous(d, L)
    else:
        gamma = min(1.0, 1.0 - (1.0 - delta) ** d)
    if table == "weak/optimal":
        return radii.weak_over_optimal(delta, gamma)
    return radii.optimal_over_rgg(gamma)


def reproduce_tables() -> list[TableEntry]:
    out = []
    for (table, L, scheme), printed in PRINTED_RATIOS.items():
        for delta, p in zip(TABLE_DELTAS, printed):
            out.append(TableEntry(table, L, scheme, delta, table_ratio(table, scheme, delta, L), p))
    return out


def format_tables(entries: list[TableEntry]) -> str:
    lines = []
    for table in ("weak/optimal", "optimal/rgg"):
        lines.append(f"ratio {table}")
        lines.append(f"{'delta':>6} | {'L=200 DC-C':>18} {'L=200 DC-R':>18} | {'L=100 DC-C':>18} {'L=100 DC-R':>18}")
        for delta in TABLE_DELTAS:
            cells = []
            for L in (200, 100):
                for scheme in ("contiguous", "random"):
                    e = next(x for x in entries if (x.table, x.L, x.scheme, x.delta) == (table, L, scheme, delta))
                    cells.append(f"{e.computed:8.4f} ({e.printed:5.3f})")
            lines.append(f"{delta:6.2f} | {cells[0]:>18} {cells[1]:>18} | {cells[2]:>18} {cells[3]:>18}")
        lines.append("")
    return "\n".join(lines)


def tables_csv(entries: list[TableEntry]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "L", "scheme", "delta", "computed", "printed", "diff"])
    for e in entries:
        w.writerow([e.table, e.L, e.scheme, _fmt(e.delta), f"{e.computed:.6f}", _fmt(e.printed), f"{e.diff:+.6f}"])
    return buf.getvalue()


# --------------------------------------------------------------------------
# routing and power
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    scheme: str
    radius_kind: str
    relax: float


SCENARIOS = (
    Scenario("rgg", "always", "rgg", RELAXED),
    Scenario("dcc-weak", "contiguous", "weak", STRICT),
    Scenario("dcc-optimal", "contiguous", "optimal", STRICT),
    Scenario("dcr-weak", "random", "weak", STRICT),
    Scenario("dcr-optimal", "random", "optimal", RELAXED),
)

ROUTE_METRICS = ("delivered", "hops", "slots", "n_prime", "total_tx_slots", "relax",
                 "tx_only", "operational", "total")


def run_route(dep, idx, scenario: Scenario, n: int, L: int, d: int, cn: CnPreset, sched_rng,
              dest: int, fallback_relaxed: bool = True, profile: PowerProfile | None = None) -> dict:
    r = radius_for(scenario.scheme, scenario.radius_kind, n, L, d, cn)
    spec = scheme_spec(scenario.scheme, L if scenario.scheme != "always" else 1, d)
    sched = spec.assign(len(dep), sched_rng)
    relax = scenario.relax
    # the always-awake baseline gets the same wall-clock budget as the duty-cycled runs
    budget = 100 * L
    trace = send_greedy(dep, sched, r, 0, dest, relax_factor=relax, max_slots=budget, idx=idx)
    if not trace.delivered and relax == STRICT and fallback_relaxed:
        relax = RELAXED
        trace = send_greedy(dep, sched, r, 0, dest, relax_factor=relax, max_slots=budget, idx=idx)
    report = task_power(trace, r, sched, profile or PowerProfile())
    return {
        "r": r,
        "trace": trace,
        "delivered": float(trace.delivered),
        "hops": float(trace.hop_count) if trace.delivered else math.nan,
        "slots": float(trace.completion_slot) if trace.delivered else math.nan,
        "n_prime": float(trace.n_prime),
        "total_tx_slots": float(trace.total_tx_slots),
        "relax": relax,
        # energy of a task that never completes has no window; keep it out of the means
        "tx_only": report.tx_only_mw_slots if trace.delivered else math.nan,
        "operational": report.operational_mw_slots if trace.delivered else math.nan,
        "total": report.total_mw_slots if trace.delivered else math.nan,
        "report": report,
    }


def _route_trial(args):
    n, delta, L, d, cn, seed, row, trial, scenarios, dist, fallback, leaf_capacity, sampler = args
    dep = make_deployment(n, seed, sampler, rng=make_rng(seed, row, trial, DEPLOY))
    idx = build_index(dep, leaf_capacity)
    dest = pick_destination(dep, 0, dist)
    out = []
    for s_i, sc in enumerate(scenarios):
        res = run_route(dep, idx, sc, n, L, d, cn, make_rng(seed, row, trial, SCHEDULE, s_i), dest, fallback)
        res.pop("trace")
        res.pop("report")
        out.append(res)
    return out


def run_routing_power_suite(cfg: ExperimentConfig, scenarios=SCENARIOS) -> list[ResultRow]:
    """Five-scenario Send(M,S,D) comparison.

    Undelivered runs show up as 0 in ``delivered`` and NaN in hops, slots and
    the energy metrics; means and stds skip the NaNs.
    """
    runs = route_runs(cfg, scenarios)
    rows = []
    cns = [cn for cn in cfg.cn for _ in cfg.n for _ in cfg.delta]
    per_cell = cfg.reps * len(scenarios)
    for c in range(len(runs) // per_cell):
        block = runs[c * per_cell:(c + 1) * per_cell]
        for s_i, sc in enumerate(scenarios):
            mine = block[s_i::len(scenarios)]
            first = mine[0]
            for metric in ROUTE_METRICS:
                rows.append(ResultRow("route", sc.name, sc.radius_kind, str(cns[c]), first.n, first.delta,
                                      first.L, first.d, first.result["r"], metric,
                                      [run.result[metric] for run in mine]))
    return rows


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None}).validate()


@dataclass(frozen=True)
class RouteRun:
    n: int
    delta: float
    L: int
    d: int
    trial: int
    scenario: Scenario
    result: dict


def route_runs(cfg: ExperimentConfig, scenarios=SCENARIOS) -> list[RouteRun]:
    """Every individual run behind :func:`run_routing_power_suite`, in row/trial/scenario order."""
    cfg.validate()
    out = []
    cells = [(cn, n, delta) for cn in cfg.cn for n in cfg.n for delta in cfg.delta]
    for i, (cn, n, delta) in enumerate(cells):
        L, d = cfg.cycle(delta)
        jobs = [(n, delta, L, d, cn, cfg.seed, i, t, tuple(scenarios), cfg.route_dist, cfg.fallback_relaxed,
                 cfg.leaf_capacity, cfg.sampler) for t in range(cfg.reps)]
        for t, res in enumerate(_map(_route_trial, jobs, cfg.workers)):
            out.extend(RouteRun(n, delta, L, d, t, sc, r) for sc, r in zip(scenarios, res))
    return out
