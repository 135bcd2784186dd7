"""Command-line runner: ``dihplab <command> [options]``.

Every output starts with a header carrying the package version, the command,
the full resolved configuration, the seed and the RNG algorithm. Outputs are
CSV (tabular rows, header as ``#`` comments) or JSON. ``--plot`` also writes a
PNG next to ``--out``. Nothing time- or host-dependent is written, so equal
(config, seed) pairs give byte-identical files.

Exit codes: 0 when every assertion of the command holds, 1 when one fails,
2 for usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from decimal import Decimal
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import rng as rngmod
from .audit import checks, sums
from .bitcube import CubeFunction, check_bounded, indicator_spectrum, level_l2sq, weight_l1_profile
from .dihp import Forest, dump_instance, gen_instance
from .dihp.experiments import estimate_advantage, potential_trace
from .dihp.protocols import PROTOCOLS
from .matchings import sample_matching
from .maxcut import (
    EXACT_MAX_N,
    dump_graph,
    gap_experiment,
    laplacian_upper_bound,
    load_graph,
    maxcut_exact,
    maxcut_local,
    reduce_to_graph,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
AUDIT_CHOICES = ("s0", "s1", "s2", "s3", "t1", "t2", "kkl", "misc", "spectrum", "single", "closeness",
                 "martingale", "qb", "all")


class UsageError(Exception):
    pass


# ---- output -----------------------------------------------------------------


def _clean(value: Any) -> Any:
    """JSON-safe view: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return f if math.isfinite(f) else repr(f)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def header(command: str, config: dict, seed: int | None) -> dict:
    return {"dihplab": __version__, "command": command, "config": config, "seed": seed,
            "rng": rngmod.ALGORITHM}


def comment_header(head: dict) -> str:
    """'# key: value' lines; every file format here skips lines starting with '#'."""
    lines = [f"# {key}: {head[key]}" for key in ("dihplab", "command", "seed", "rng")]
    lines.append("# config: " + json.dumps(_clean(head["config"]), sort_keys=True))
    return "\n".join(lines) + "\n"


def render(fmt: str, head: dict, rows: Sequence[dict], summary: dict | None = None) -> str:
    if fmt == "json":
        doc = dict(head)
        if summary is not None:
            doc["summary"] = summary
        doc["rows"] = list(rows)
        return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(comment_header(head))
    if summary is not None:
        buf.write("# summary: " + json.dumps(_clean(summary), sort_keys=True) + "\n")
    if rows:
        cols = list(rows[0])
        for r in rows[1:]:
            cols += [c for c in r if c not in cols]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c, "")) for c in cols])
    return buf.getvalue()


def emit(args: argparse.Namespace, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def plot_path(args: argparse.Namespace) -> Path | None:
    if not getattr(args, "plot", False):
        return None
    return Path(args.out).with_suffix(".png")


def config_of(args: argparse.Namespace) -> dict:
    skip = {"command", "func", "out", "plot", "config", "seed", "format"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _plotting():
    from . import plotting

    return plotting


# ---- commands ---------------------------------------------------------------


def cmd_gen(args: argparse.Namespace) -> int:
    g = rngmod.stream(args.seed, args.index)
    inst = gen_instance(args.n, args.alpha_n, args.T, args.case, g)
    head = header("gen", config_of(args), args.seed)
    emit(args, comment_header(head) + dump_instance(inst))
    if args.graph_out:
        Path(args.graph_out).write_text(comment_header(head) + dump_graph(reduce_to_graph(inst)))
    if (p := plot_path(args)) is not None:
        _plotting().instance_figure([int(w.sum()) for w in inst.labels], inst.alpha_n, p)
    # a YES instance whose labels disagree with its hidden partition is a generator bug
    return EXIT_FAIL if inst.hidden is not None and not inst.is_consistent() else EXIT_OK


def cmd_advantage(args: argparse.Namespace) -> int:
    rows = []
    for name in args.protocol:
        rep = estimate_advantage(name, args.n, args.alpha_n, args.T, args.s, args.trials, args.seed, args.case)
        rows.append({
            "protocol": name, "n": args.n, "alpha_n": args.alpha_n, "T": args.T, "s": args.s,
            "case": args.case, "trials": rep.trials, "successes": rep.successes,
            "success_rate": rep.success_rate, "wilson_low": rep.wilson_low, "wilson_high": rep.wilson_high,
            "advantage": rep.advantage, "yes_trials": rep.yes_trials, "yes_correct": rep.yes_correct,
            "no_trials": rep.no_trials, "no_correct": rep.no_correct, "no_cycles": rep.no_cycles,
        })
    emit(args, render(args.format, header("advantage", config_of(args), args.seed), rows))
    if (p := plot_path(args)) is not None:
        _plotting().advantage_figure(rows, p)
    return EXIT_OK


def cmd_gap(args: argparse.Namespace) -> int:
    exact = {"exact": True, "heuristic": False, "auto": None}[args.mode]
    if exact and args.n > EXACT_MAX_N:
        raise UsageError(f"--exact needs n <= {EXACT_MAX_N}")
    rep = gap_experiment(args.n, args.alpha_n, args.T, args.epsilon, args.trials, args.seed, exact=exact,
                         delta=args.delta, ratio_threshold=args.ratio_threshold, restarts=args.restarts)
    rows = [{"trial": i, "yes_m": r.yes_m, "yes_maxcut": r.yes_maxcut, "yes_bipartite": r.yes_bipartite,
             "no_m": r.no_m, "no_maxcut": r.no_maxcut, "no_exact": r.no_exact, "ratio": r.ratio}
            for i, r in enumerate(rep.rows)]
    summary = {k: getattr(rep, k) for k in ("m0", "no_threshold", "delta", "exact", "rigorous", "yes_freq",
                                             "no_freq", "ratio_threshold", "ratio_freq", "mean_ratio",
                                             "median_ratio", "no_normalized", "all_yes_bipartite")}
    emit(args, render(args.format, header("gap", config_of(args), args.seed), rows, summary))
    if (p := plot_path(args)) is not None:
        _plotting().gap_figure([r.yes_maxcut for r in rep.rows], [r.no_maxcut for r in rep.rows],
                               rep.m0, rep.no_threshold, p)
    return EXIT_OK if rep.all_yes_bipartite else EXIT_FAIL


def cmd_cut(args: argparse.Namespace) -> int:
    G = load_graph(Path(args.graph).read_text())
    row: dict[str, Any] = {"n": G.n, "m": G.m, "max_multiplicity": G.max_multiplicity,
                           "half_count": G.m / 2.0, "spectral_upper": laplacian_upper_bound(G)}
    if G.n <= EXACT_MAX_N and not args.heuristic:
        value, side = maxcut_exact(G)
        row.update(maxcut=value, exact=True, side=" ".join(map(str, sorted(side))))
    else:
        value, side = maxcut_local(G, args.restarts, rngmod.stream(args.seed, 0))
        row.update(maxcut=value, exact=False, side=" ".join(map(str, sorted(side))))
    emit(args, render(args.format, header("cut", config_of(args), args.seed), [row]))
    if (p := plot_path(args)) is not None:
        _plotting().cut_figure(row["half_count"], row["maxcut"], row["spectral_upper"], G.m, row["exact"], p)
    return EXIT_OK if G.m / 2.0 <= row["maxcut"] <= G.m else EXIT_FAIL


def _parse_tuple(text: str) -> sums.AuditParams:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (4, 5):
        raise UsageError(f"--params expects n,C,s_star,alpha[,delta]; got {text!r}")

    def num(s: str) -> int | float:
        # integers, also written as 1e40, are kept exact
        d = Decimal(s)
        if not d.is_finite():
            raise ValueError(f"{s} is not finite")
        return int(d) if d == d.to_integral_value() else float(d)

    try:
        n, C = num(parts[0]), num(parts[1])
        s_star, alpha = int(float(parts[2])), float(parts[3])
        delta = float(parts[4]) if len(parts) == 5 else 0.1
    except (ValueError, ArithmeticError) as exc:
        raise UsageError(f"bad --params {text!r}: {exc}") from None
    return sums.AuditParams(n, C, s_star, alpha, delta)


def _audit_sum_rows(which: set[str], params: Sequence[sums.AuditParams], levels: list[int] | None):
    rows, ok = [], True
    for idx, p in enumerate(params):
        for fam in ("s0", "s1", "s2", "s3", "t1", "t2"):
            if fam not in which:
                continue
            j = int(fam[1])
            lv = levels
            if lv is not None:
                lo, hi = (1, p.s_star) if fam[0] == "s" else (p.s_star, p.t_level_max())
                lv = [x for x in lv if lo <= x <= hi]
            rep = sums.eval_S(j, p, lv) if fam[0] == "s" else sums.eval_T(j, p, lv)
            if rep.asserted and not rep.passed:
                ok = False
            for r in rep.rows:
                rows.append({"check": fam, "tuple": idx, "n": str(p.n), "C": str(p.C), "s_star": p.s_star,
                             "alpha": p.alpha, "asserted": rep.asserted, "level": r.level,
                             "lhs_log": r.lhs_log, "lhs_log_lower": r.lhs_log_lower, "rhs_log": r.rhs_log,
                             "margin": r.margin, "exact": r.exact, "terms": r.terms, "passed": r.passed})
    return rows, ok


def _row(check: str, name: str, value: Any, passed: bool, **extra) -> dict:
    out = {"check": check, "tuple": None, "level": None, "name": name, "value": value, "passed": passed}
    out.update(extra)
    return out


def cmd_audit(args: argparse.Namespace) -> int:
    which = set(args.which)
    if "all" in which:
        which = set(AUDIT_CHOICES) - {"all"}
    params = [_parse_tuple(t) for t in args.params] if args.params else list(sums.STANDARD_TUPLES)
    levels = [int(x) for x in args.levels.split(",")] if args.levels else None
    rows, ok = _audit_sum_rows(which, params, levels)
    g = lambda k: rngmod.stream(args.seed, k)  # noqa: E731
    if "kkl" in which:
        sw = checks.kkl_sweep(args.kkl_m, args.trials, g(1))
        ok &= sw.failures == 0
        rows.append(_row("kkl", "failures", sw.failures, sw.failures == 0, checks=sw.checks,
                         worst_l1_ratio=sw.worst_l1_ratio, worst_l2_ratio=sw.worst_l2_ratio))
    if "misc" in which:
        rep = checks.misc_inequalities(g(2))
        for r in rep.rows:
            rows.append(_row("misc", r.name, r.violations, r.violations == 0, checks=r.checked,
                             worst_margin=r.worst_margin))
        ok &= rep.passed
    if "spectrum" in which:
        gg, bad = g(3), 0
        for _ in range(args.trials):
            n = int(gg.integers(2, args.spectrum_n + 1))
            F = Forest(n)
            for _ in range(int(gg.integers(0, n))):
                a, b = gg.choice(n, 2, replace=False)
                F.add_edge(int(a), int(b), int(gg.integers(2)))
            closed = checks.component_spectrum(F)
            brute = indicator_spectrum(checks.forest_constraint_set(n, F.edges()))
            bad += not np.array_equal(closed.coeffs, brute.coeffs)
        ok &= bad == 0
        rows.append(_row("spectrum", "mismatches", bad, bad == 0, checks=args.trials))
    if "single" in which:
        rep = checks.check_single_message(args.single_n, args.single_alpha_n, args.single_s_star,
                                          args.trials, g(4))
        ok &= rep.passed
        rows.append(_row("single", "bounded_failures", rep.bounded_failures, rep.bounded_failures == 0,
                         checks=rep.trials, worst_margin=rep.worst_margin))
        rows.append(_row("single", "structure_failures", rep.structure_failures, rep.structure_failures == 0,
                         checks=rep.trials, max_odd_mass=rep.max_odd_mass))
    if "closeness" in which:
        rep = checks.check_pdf_closeness(args.single_n, args.single_alpha_n, args.single_s_star, 3.0,
                                         args.delta, args.trials, g(5))
        # diagnostic only: never changes the exit code
        rows.append(_row("closeness", "fraction_within", rep.fraction_within, True, checks=rep.trials,
                         max_deviation=rep.max_deviation, set_bounded=rep.set_bounded,
                         preconditions_met=rep.preconditions_met))
    if "martingale" in which:
        rep = checks.martingale_check(args.martingale_m, args.martingale_T, args.martingale_trials, g(6),
                                      args.noise)
        ok &= rep.passed
        rows.append(_row("martingale", "exceed_frequency", rep.frequency, rep.passed, checks=rep.trials,
                         bound=rep.bound, se=rep.se, drift_ratio=rep.drift_ratio))
    if "qb" in which:
        from .matchings import qb_inequality_scan

        for n in (1000, 10000):
            scan = qb_inequality_scan(n)
            ok &= not scan.violations
            rows.append(_row("qb", f"n={n}", len(scan.violations), not scan.violations, checks=scan.checked,
                             worst_margin=scan.worst_margin))
    emit(args, render(args.format, header("audit", config_of(args), args.seed), rows, {"passed": ok}))
    if (p := plot_path(args)) is not None:
        _plotting().audit_figure([dict(r, family=r["check"]) for r in rows if r["check"] in sums.FAMILIES], p)
    return EXIT_OK if ok else EXIT_FAIL


def _spectrum_set(args: argparse.Namespace, g: np.random.Generator) -> tuple[CubeFunction, Forest | None]:
    n = args.n
    if args.source == "full":
        return CubeFunction(n, np.ones(1 << n)), None
    if args.source == "singleton":
        return CubeFunction.indicator(n, [int(g.integers(1 << n))]), None
    if args.source == "random":
        return CubeFunction(n, checks.random_reduced_set(n, args.s_star, g)), None
    if args.source == "single":
        M = sample_matching(n, args.alpha_n, g)
        return checks.preimage_set(M, checks.random_reduced_set(args.alpha_n, args.s_star, g)), None
    F = Forest(n)
    for _ in range(args.edges):
        a, b = g.choice(n, 2, replace=False)
        F.add_edge(int(a), int(b), int(g.integers(2)))
    return checks.forest_constraint_set(n, F.edges()), F


def cmd_spectrum(args: argparse.Namespace) -> int:
    g = rngmod.stream(args.seed, 0)
    B, forest = _spectrum_set(args, g)
    spec = indicator_spectrum(B)
    rep = check_bounded(spec, args.C, args.s_star)
    profile = weight_l1_profile(spec)
    bound_of = {r.level: r for r in rep.per_level}
    top = min(args.levels, args.n // 2) if args.levels else args.n // 2
    rows = []
    for lvl in range(0, top + 1):
        r = bound_of.get(lvl)
        rows.append({"level": lvl, "weight": 2 * lvl, "l1": float(profile[2 * lvl]),
                     "l2sq": level_l2sq(spec, lvl), "log_bound": r.log_bound if r else None,
                     "in_range": r is not None, "passed": r.passed if r else None})
    ok = True
    summary: dict[str, Any] = {"set_size": spec.set_size, "bounded": rep.overall, "odd_mass": rep.odd_mass}
    if forest is not None:
        same = bool(np.array_equal(checks.component_spectrum(forest).coeffs, spec.coeffs))
        summary["closed_form_matches"] = same
        ok &= same
    if args.require_bounded:
        ok &= rep.overall
    if args.dump_coeffs:
        summary["coefficients"] = [[int(v), float(spec.coeffs[v])] for v in spec.support()]
    emit(args, render(args.format, header("spectrum", config_of(args), args.seed), rows, summary))
    if (p := plot_path(args)) is not None:
        lv = [r.level for r in rep.per_level]
        _plotting().spectrum_figure(lv, [r.l1 for r in rep.per_level], [r.log_bound for r in rep.per_level], p)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_potential(args: argparse.Namespace) -> int:
    rep = potential_trace(args.n, args.alpha_n, args.T, args.s, args.trials, args.seed)
    rows = [{"round": t + 1, "mean_potential": m, "se": se} for t, (m, se) in enumerate(zip(rep.round_mean,
                                                                                            rep.round_se))]
    summary = {k: getattr(rep, k) for k in ("steps", "mean_ratio", "ratio_se", "max_potential", "ratio_bound",
                                             "mean_excess", "excess_se", "cycle_hits", "cycle_expected",
                                             "ratio_ok", "paired_ok", "cycle_ok")}
    emit(args, render(args.format, header("potential", config_of(args), args.seed), rows, summary))
    if (p := plot_path(args)) is not None:
        _plotting().potential_figure(rep.round_mean, rep.round_se, p)
    return EXIT_OK if rep.ratio_ok and rep.cycle_ok else EXIT_FAIL


# ---- parser -----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, fmt: str = "csv") -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    p.add_argument("--plot", action="store_true", help="also write a PNG next to --out")
    p.add_argument("--config", help="JSON file of option defaults; explicit flags win")


def _game(p: argparse.ArgumentParser, n: int, alpha_n: int, T: int) -> None:
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--alpha-n", type=int, default=alpha_n)
    p.add_argument("--T", type=int, default=T)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dihplab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dihplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate one game instance")
    _game(p, 20, 4, 5)
    p.add_argument("--case", choices=("yes", "no", "mixed"), default="mixed")
    p.add_argument("--index", type=int, default=0, help="stream index under the seed")
    p.add_argument("--graph-out", help="also write the reduced multigraph here")
    _common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("advantage", help="protocol success rates with Wilson intervals")
    _game(p, 60, 6, 8)
    p.add_argument("--protocol", nargs="+", choices=sorted(PROTOCOLS), default=["distinguisher"])
    p.add_argument("--s", type=int, default=4)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--case", choices=("yes", "no", "mixed"), default="mixed")
    _common(p)
    p.set_defaults(func=cmd_advantage)

    p = sub.add_parser("gap", help="paired YES/NO max-cut gap experiment")
    _game(p, 20, 4, 40)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=None, help="default: epsilon/100")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--ratio-threshold", type=float, default=1.7)
    p.add_argument("--restarts", type=int, default=20)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="mode", action="store_const", const="exact")
    mode.add_argument("--heuristic", dest="mode", action="store_const", const="heuristic")
    p.set_defaults(mode="auto")
    _common(p)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("cut", help="max-cut of a graph file (u v multiplicity per line)")
    p.add_argument("--graph", required=True)
    p.add_argument("--heuristic", action="store_true")
    p.add_argument("--restarts", type=int, default=20)
    _common(p)
    p.set_defaults(func=cmd_cut)

    p = sub.add_parser("audit", help="inequality audit and exact desk-scale checks")
    p.add_argument("--which", nargs="+", choices=AUDIT_CHOICES, default=["all"])
    p.add_argument("--params", action="append", help="n,C,s_star,alpha[,delta]; repeatable")
    p.add_argument("--levels", help="comma-separated levels (default: built-in grids)")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--kkl-m", type=int, default=12)
    p.add_argument("--spectrum-n", type=int, default=14)
    p.add_argument("--single-n", type=int, default=12)
    p.add_argument("--single-alpha-n", type=int, default=3)
    p.add_argument("--single-s-star", type=int, default=3)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--martingale-m", type=int, default=10**4)
    p.add_argument("--martingale-T", type=int, default=4)
    p.add_argument("--martingale-trials", type=int, default=2000)
    p.add_argument("--noise", choices=checks.NOISES, default="multiplicative")
    _common(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("spectrum", help="tilde spectrum level sums and boundedness of a set")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--source", choices=("random", "single", "forest", "full", "singleton"), default="single")
    p.add_argument("--alpha-n", type=int, default=3)
    p.add_argument("--edges", type=int, default=4, help="random edges for --source forest")
    p.add_argument("--C", type=float, default=3.0)
    p.add_argument("--s-star", type=int, default=3)
    p.add_argument("--levels", type=int, default=0, help="highest level to list (default n/2)")
    p.add_argument("--require-bounded", action="store_true")
    p.add_argument("--dump-coeffs", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("potential", help="forest potential per round")
    _game(p, 10**4, 100, 5)
    p.add_argument("--s", type=int, default=50)
    p.add_argument("--trials", type=int, default=100)
    _common(p)
    p.set_defaults(func=cmd_potential)
    return parser


def parse(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            conf = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            parser.error(f"cannot read --config: {exc}")
        if not isinstance(conf, dict):
            parser.error("--config must hold a JSON object")
        sp = parser._subparsers._group_actions[0].choices[args.command]  # type: ignore[union-attr]
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(conf) - known)
        if unknown:
            parser.error(f"unknown keys in --config: {', '.join(unknown)}")
        sp.set_defaults(**conf)
        args = parser.parse_args(argv)
    if args.plot and not args.out:
        parser.error("--plot needs --out")
    return args


def main(argv: Sequence[str] | None = None) -> int:
    args = parse(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dihplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"dihplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
