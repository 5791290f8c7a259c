"""Command-line entry point: ``dcwsn <subcommand> [options]``.

Every subcommand writes CSV (header always present) to ``--out`` or stdout.
Exit status: 0 success, 1 invalid configuration, 2 I/O failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from pathlib import Path

from dcwsn import __version__, radii
from dcwsn import experiments as ex
from dcwsn.detsched import ScheduleFamily, check_family, default_k, search_family
from dcwsn.geometry import build_index, make_deployment
from dcwsn.graph import build_dc_graph
from dcwsn.rng import AUX, DEPLOY, FAMILY, SCHEDULE, make_rng
from dcwsn.schedules import Schedule, gamma_empirical, gamma_random_exact

log = logging.getLogger("dcwsn")

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2

DEFAULT_CN_SWEEP = "const(1),const(-1),neg_loglog,neg_loglog_sq,neg_k_sqrt_log(2)"


class _Table:
    """CSV accumulator; flushed once so a failed run never leaves a half-written file."""

    def __init__(self, header):
        self.buf = io.StringIO()
        self.w = csv.writer(self.buf, lineterminator="\n")
        self.w.writerow(header)

    def row(self, *values):
        self.w.writerow([ex._fmt(v) if isinstance(v, float) else v for v in values])

    def text(self) -> str:
        return self.buf.getvalue()


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cycle(args) -> tuple[int, int, float]:
    """Resolve (L, d, delta) from whichever two of --L/--d/--delta were given."""
    L, d, delta = args.L, args.d, args.delta
    if L is not None and d is None:
        if delta is None:
            raise ex.ConfigError("need --d or --delta with --L")
        d = radii.d_from(delta, L)
    elif d is not None and L is None:
        if delta is None:
            raise ex.ConfigError("need --L or --delta with --d")
        L = math.ceil(d / delta - 1e-9)
    elif L is None and d is None:
        raise ex.ConfigError("need --L or --d")
    if not 1 <= d <= L:
        raise ex.ConfigError(f"need 1 <= d <= L, got d={d}, L={L}")
    return L, d, d / L


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_gen(args) -> int:
    dep = make_deployment(args.n, args.seed, args.sampler, rng=make_rng(args.seed, DEPLOY))
    _emit(dep.to_csv(), args.out)
    if args.scheme or args.edges:
        scheme = args.scheme or "contiguous"
        L, d, _ = _cycle(args)
        spec = ex.scheme_spec(scheme, L, d)
        sched = spec.assign(len(dep), make_rng(args.seed, SCHEDULE))
        if args.schedules:
            lines = [f"{sched.L},{d if scheme != 'always' else sched.L}"]
            lines += [format(sched[i].bits, "x") for i in range(len(sched))]
            Path(args.schedules).write_text("\n".join(lines) + "\n")
        if args.edges:
            r = ex.radius_for(scheme, args.radius, args.n, L, d, radii.parse_cn(args.cn))
            build_dc_graph(dep, sched, r, build_index(dep)).to_csv(args.edges)
    return EXIT_OK


def cmd_gamma(args) -> int:
    L, d, delta = _cycle(args)
    t = _Table(["scheme", "L", "d", "delta", "gamma", "gamma_exact", "gamma_empirical", "se", "trials"])
    schemes = ("contiguous", "random") if args.scheme == "both" else (args.scheme,)
    for i, scheme in enumerate(schemes):
        analytic = ex.scheme_gamma(scheme, L, d)
        if scheme == "random":
            exact = float(gamma_random_exact(d, L))
        else:
            exact = analytic
        if args.trials > 0:
            est = gamma_empirical(ex.scheme_spec(scheme, L, d), args.trials, make_rng(args.seed, AUX, i))
            t.row(scheme, L, d, delta, analytic, exact, est.p, est.se, args.trials)
        else:
            t.row(scheme, L, d, delta, analytic, exact, "", "", 0)
    _emit(t.text(), args.out)
    return EXIT_OK


def cmd_radius(args) -> int:
    cn = radii.parse_cn(args.cn)
    t = _Table(["formula", "n", "delta", "L", "d", "cn", "radius", "ratio_weak_over_opt", "ratio_opt_over_rgg"])
    formulas = ("rgg", "weak", "dcc", "dcr") if args.formula == "all" else (args.formula,)
    for n in args.n:
        for formula in formulas:
            if formula == "rgg":
                t.row(formula, n, "", "", "", str(cn), radii.rgg_radius(n, cn), "", "")
                continue
            L, d, delta = _cycle(args)
            if formula == "weak":
                r = radii.weak_radius(n, delta, cn)
                t.row(formula, n, delta, L, d, str(cn), r, "", r / radii.rgg_radius(n, cn))
                continue
            scheme = "contiguous" if formula == "dcc" else "random"
            gamma = ex.scheme_gamma(scheme, L, d)
            r = radii.optimal_radius(n, gamma, cn)
            t.row(formula, n, delta, L, d, str(cn), r, radii.weak_over_optimal(delta, gamma),
                  radii.optimal_over_rgg(gamma))
    _emit(t.text(), args.out)
    return EXIT_OK


def cmd_tables(args) -> int:
    entries = ex.reproduce_tables()
    if args.format == "text":
        _emit(ex.format_tables(entries), args.out)
    else:
        _emit(ex.tables_csv(entries), args.out)
    return EXIT_OK


_SWEEP_KEYS = ("scheme", "n", "delta", "L", "d", "radius", "cn", "reps", "seed", "workers", "sampler",
               "leaf_capacity", "route_dist")


def _config(args, **defaults) -> ex.ExperimentConfig:
    overrides = dict(defaults)
    if getattr(args, "full", False):
        overrides.pop("n", None)
    for key in _SWEEP_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value if not isinstance(value, list) else ",".join(map(str, value))
    if getattr(args, "full", False):
        overrides["full"] = True
    if getattr(args, "L", None) is None and getattr(args, "d", None) is not None:
        overrides["L"] = None
    return ex.load_config(args.config, overrides)


def cmd_sweep(args) -> int:
    cfg = _config(args)
    _emit(ex.write_rows(ex.run_component_sweep(cfg)), args.out)
    return EXIT_OK


def cmd_cn_sweep(args) -> int:
    cfg = _config(args, cn=DEFAULT_CN_SWEEP, radius="optimal")
    _emit(ex.write_rows(ex.run_cn_sweep(cfg)), args.out)
    return EXIT_OK


def _scenarios(names):
    if not names:
        return ex.SCENARIOS
    known = {s.name: s for s in ex.SCENARIOS}
    bad = [s for s in names if s not in known]
    if bad:
        raise ex.ConfigError(f"unknown scenario(s) {bad}; choose from {sorted(known)}")
    return tuple(known[s] for s in names)


def cmd_route(args) -> int:
    cfg = _config(args, n="200000")
    t = _Table(["n", "scheme", "radius_kind", "relax", "delivered", "hops", "slots", "n_prime", "total_tx_slots"])
    for run in ex.route_runs(cfg, _scenarios(args.scenario)):
        res = run.result
        delivered = bool(res["delivered"])
        t.row(run.n, run.scenario.name, run.scenario.radius_kind, res["relax"], int(delivered),
              int(res["hops"]) if delivered else "", int(res["slots"]) if delivered else "",
              int(res["n_prime"]), int(res["total_tx_slots"]))
    _emit(t.text(), args.out)
    return EXIT_OK


def cmd_power(args) -> int:
    cfg = _config(args, n="200000")
    t = _Table(["scheme", "radius_kind", "tx_only", "operational", "total"])
    for run in ex.route_runs(cfg, _scenarios(args.scenario)):
        res = run.result
        t.row(run.scenario.name, run.scenario.radius_kind, res["tx_only"], res["operational"], res["total"])
    _emit(t.text(), args.out)
    return EXIT_OK


def _read_family(path) -> list[Schedule]:
    scheds = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            scheds.append(Schedule(int(row["bitmap"], 16), int(row["L"])))
    if not scheds:
        raise ex.ConfigError(f"{path}: no schedules")
    return scheds


def cmd_detsched(args) -> int:
    if args.verify:
        scheds = _read_family(args.verify)
        pairwise, full = check_family(scheds)
        t = _Table(["k", "L", "pairwise_overlap", "full_coverage"])
        t.row(len(scheds), scheds[0].L, int(pairwise), int(full))
        _emit(t.text(), args.out)
        return EXIT_OK if pairwise and full else EXIT_CONFIG
    L, d, _ = _cycle(args)
    k = args.k if args.k is not None else default_k(L)
    res = search_family(L, d, k, args.max_attempts, make_rng(args.seed, FAMILY))
    t = _Table(["index", "L", "d", "attempts", "bitmap"])
    if isinstance(res, ScheduleFamily):
        for i, s in enumerate(res.schedules):
            t.row(i, L, d, res.attempts, format(s.bits, "x"))
    else:
        log.warning("no valid family in %d attempts (L=%d d=%d k=%d): overlap failed %.3f, coverage failed %.3f",
                    res.attempts, L, d, k, res.overlap_failure_rate, res.coverage_failure_rate)
    _emit(t.text(), args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS if suppress else 0, help="master seed")
    p.add_argument("--reps", type=int, default=default, help="repetitions per sweep cell (default 5)")
    p.add_argument("--out", default=argparse.SUPPRESS if suppress else None, help="output path (default stdout)")
    p.add_argument("--full", action="store_true", default=argparse.SUPPRESS if suppress else False,
                   help="use the full-scale n list (slow)")


def _cycle_args(p, L=None, delta=None):
    p.add_argument("--L", type=int, default=L, help="cycle length in slots")
    p.add_argument("--d", type=int, default=None, help="awake slots per cycle")
    p.add_argument("--delta", type=float, default=delta, help="duty ratio d/L")


def _sweep_args(p):
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--scheme", choices=ex.SCHEMES)
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--delta", type=float, nargs="+")
    p.add_argument("--L", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--radius", choices=ex.RADIUS_KINDS)
    p.add_argument("--cn", help="comma-separated c(n) presets, e.g. loglog,const(-1)")
    p.add_argument("--workers", type=int)
    p.add_argument("--sampler", choices=("wedge", "polar"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcwsn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="deployment CSV, optionally schedules and edge list")
    _common(p, True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sampler", choices=("wedge", "polar"), default="wedge")
    p.add_argument("--scheme", choices=ex.SCHEMES)
    _cycle_args(p, L=100, delta=0.05)
    p.add_argument("--schedules", help="write per-node schedules here")
    p.add_argument("--edges", help="write the u,v edge list here")
    p.add_argument("--radius", choices=ex.RADIUS_KINDS, default="weak")
    p.add_argument("--cn", default="loglog")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("gamma", help="pairwise connection probability, analytic and Monte Carlo")
    _common(p, True)
    p.add_argument("--scheme", choices=("contiguous", "random", "both"), default="both")
    _cycle_args(p, L=100, delta=0.05)
    p.add_argument("--trials", type=int, default=100_000)
    p.set_defaults(func=cmd_gamma)

    p = sub.add_parser("radius", help="closed-form connectivity radii")
    _common(p, True)
    p.add_argument("--formula", choices=("rgg", "weak", "dcc", "dcr", "all"), default="all")
    p.add_argument("--n", type=int, nargs="+", default=[200_000])
    _cycle_args(p, L=100, delta=0.05)
    p.add_argument("--cn", default="loglog")
    p.set_defaults(func=cmd_radius)

    p = sub.add_parser("tables", help="weak/optimal and optimal/RGG radius ratio tables")
    _common(p, True)
    p.add_argument("--format", choices=("text", "csv"), default="csv")
    p.set_defaults(func=cmd_tables)

    for name, func, helptext in (("sweep", cmd_sweep, "largest component / isolated nodes over (n, delta)"),
                                 ("cn-sweep", cmd_cn_sweep, "component sweep over c(n) presets")):
        p = sub.add_parser(name, help=helptext)
        _common(p, True)
        _sweep_args(p)
        p.set_defaults(func=func)

    for name, func, helptext in (("route", cmd_route, "Send(M,S,D) runs, one CSV row each"),
                                 ("power", cmd_power, "energy of each Send(M,S,D) run")):
        p = sub.add_parser(name, help=helptext)
        _common(p, True)
        _sweep_args(p)
        p.add_argument("--scenario", nargs="+", help="subset of " + ",".join(s.name for s in ex.SCENARIOS))
        p.add_argument("--route-dist", dest="route_dist", type=float)
        p.set_defaults(func=func)

    p = sub.add_parser("detsched", help="search for an overlapping, covering k-schedule family")
    _common(p, True)
    _cycle_args(p, L=600, delta=0.05)
    p.add_argument("--k", type=int)
    p.add_argument("--max-attempts", type=int, default=1000)
    p.add_argument("--verify", metavar="FAMILY_CSV", help="re-check a family written by this command")
    p.set_defaults(func=cmd_detsched)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.seed < 0:
        log.error("seed must be nonnegative")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
