"""Command line front end.

Verbs mirror the library layers: window builders (``cusped``, ``delta``),
filling checks (``fill``, ``lift``), flag-side checkers (``automaton``,
``edf``, ``chabauty``, ``limitset``), and the scenario runner (``run``).

Exit codes: 0 all asserted checks pass, 1 a property failed, 2 usage or
input problems, 3 a budget was exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .automata import (
    automaton_from_json,
    automaton_to_json,
    bundled_sanov_automaton,
    check_compatibility,
    set_system_to_json,
    validate_automaton,
)
from .convergence import (
    bundled_edf_queries,
    chabauty_check,
    edf_condition_check,
    elliptic_family,
    limit_set_convergence,
    sanov_generators,
)
from .cusped import build_cusped_ball, dump_graph, load_graph
from .delta import MODE_ALIASES, estimate_delta
from .errors import (
    BudgetExceededError,
    InvalidParameterError,
    RhfillError,
    SchemaError,
    TypeMismatchError,
    UnsupportedKindError,
    WindowError,
)
from .filling_geometry import (
    build_quotient_cusped,
    check_descent_quasigeodesic,
    check_local_isometry,
    check_uniform_delta,
    filling_map_report,
    injectivity_report,
    lift_roundtrip_report,
)
from .groups import make_filling, standard_f2_pair
from .scenarios import _dump_json, pair_from_spec, run_scenario

FILL_CHECKS = ("local-isometry", "descent", "uniform-delta", "map",
               "injectivity")


def _pair_from_file(path: str | None):
    if path is None:
        return standard_f2_pair()
    p = Path(path)
    try:
        spec = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{p.name}: invalid JSON ({e})") from None
    return pair_from_spec(spec)


def _filling_from_args(pair, kernels: str):
    try:
        spec = json.loads(kernels)
    except json.JSONDecodeError as e:
        raise SchemaError(f"--kernels: invalid JSON ({e})") from None
    if not isinstance(spec, dict):
        raise SchemaError("--kernels: expected an object keyed by peripheral")
    by_id = {}
    for k, v in spec.items():
        try:
            by_id[int(k)] = v
        except ValueError:
            raise SchemaError(
                f"--kernels: peripheral id {k!r} is not an integer") from None
    return make_filling(pair, by_id)


def _family_from_args(args):
    pair = _pair_from_file(args.pair)
    try:
        ns = tuple(int(x) for x in args.indices.split(",") if x.strip())
    except ValueError:
        raise InvalidParameterError(
            f"--indices: expected comma-separated integers, got "
            f"{args.indices!r}") from None
    if not ns:
        raise InvalidParameterError("--indices must name at least one index")
    return pair, elliptic_family(pair, ns)


def _emit(report: dict, out: str | None) -> None:
    text = _dump_json(report)
    if out:
        Path(out).write_text(text)
        verdict = report.get("pass")
        tail = "" if verdict is None else f" ({'pass' if verdict else 'fail'})"
        print(f"wrote {out}{tail}")
    else:
        sys.stdout.write(text)


def _passfail(report: dict) -> int:
    return 0 if report.get("pass", False) else 1


# ---------------------------------------------------------------------------
# verbs


def cmd_cusped(args) -> int:
    pair = _pair_from_file(args.pair)
    graph = build_cusped_ball(pair, args.radius, max_depth=args.max_depth)
    if args.dump:
        Path(args.dump).write_text(dump_graph(graph))
    report = {
        "name": "cusped-window",
        "radius": args.radius,
        "vertices": graph.n_vertices,
        "edges": int(len(graph.edges_u)),
        "max_depth": int(graph.depth.max()) if graph.n_vertices else 0,
        "dump": args.dump,
        "pass": True,
    }
    _emit(report, args.out)
    return 0


def cmd_delta(args) -> int:
    graph = load_graph(Path(args.graph).read_text())
    est = estimate_delta(graph, mode=args.mode, budget=args.budget,
                         samples=args.samples, seed=args.seed)
    report = {
        "name": "delta-estimate",
        "delta": est.delta,
        "mode": est.mode,
        "checked": est.checked,
        "witness": list(est.witness),
        "exact": est.exact,
        "pass": True,
    }
    _emit(report, args.out)
    return 0


def cmd_fill(args) -> int:
    pair = _pair_from_file(args.pair)
    filling = _filling_from_args(pair, args.kernels)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    for c in checks:
        if c not in FILL_CHECKS:
            raise InvalidParameterError(
                f"unknown check {c!r}; expected one of {', '.join(FILL_CHECKS)}")
    fg = None
    if set(checks) - {"injectivity"}:
        fg = build_quotient_cusped(pair, filling, args.radius)
    sub = {}
    for c in checks:
        if c == "local-isometry":
            sub[c] = check_local_isometry(fg, args.isometry_radius)
        elif c == "descent":
            sub[c] = check_descent_quasigeodesic(
                fg, K=args.descent_k, max_depth_used=args.descent_depth,
                samples=args.samples, seed=args.seed)
        elif c == "uniform-delta":
            orders = [p.factor.p_order()
                      for p in filling.quotient_pair.peripherals]
            n = max((o for o in orders if o), default=0)
            sub[c] = check_uniform_delta(pair, {n: filling},
                                         radius=args.delta_radius,
                                         samples=args.delta_samples,
                                         seed=args.seed)
        elif c == "map":
            sub[c] = filling_map_report(fg)
        elif c == "injectivity":
            sub[c] = injectivity_report(filling, args.radius)
    report = {
        "name": "filling-checks",
        "radius": args.radius,
        "kernels": json.loads(args.kernels),
        "checks": sub,
        "pass": all(r.get("pass", False) for r in sub.values()),
    }
    _emit(report, args.out)
    return _passfail(report)


def cmd_lift(args) -> int:
    pair = _pair_from_file(args.pair)
    filling = _filling_from_args(pair, args.kernels)
    fg = build_quotient_cusped(pair, filling, args.radius)
    report = lift_roundtrip_report(fg, n_paths=args.paths, seed=args.seed)
    _emit(report, args.out)
    return _passfail(report)


def cmd_automaton(args) -> int:
    pair = _pair_from_file(args.pair)
    if args.auto:
        try:
            obj = json.loads(Path(args.auto).read_text())
        except json.JSONDecodeError as e:
            raise SchemaError(f"{args.auto}: invalid JSON ({e})") from None
        auto = automaton_from_json(pair, obj)
        sys_ = None
    else:
        auto, sys_ = bundled_sanov_automaton(pair)
    validation = validate_automaton(auto, pair)
    report = {
        "name": "automaton",
        "validation": validation,
        "pass": validation["pass"],
    }
    if args.compat:
        if sys_ is None:
            raise InvalidParameterError(
                "--compat needs the bundled set system; drop --auto")
        crep = check_compatibility(sanov_generators(), auto, sys_,
                                   enumeration_depth=args.depth,
                                   seed=args.seed)
        report["compatibility"] = crep
        report["pass"] = report["pass"] and crep["pass"]
    if args.dump:
        Path(args.dump).write_text(_dump_json(automaton_to_json(auto)))
    if args.dump_sets:
        if sys_ is None:
            raise InvalidParameterError(
                "--dump-sets needs the bundled set system; drop --auto")
        Path(args.dump_sets).write_text(_dump_json(set_system_to_json(sys_)))
    _emit(report, args.out)
    return _passfail(report)


def cmd_edf(args) -> int:
    pair, family = _family_from_args(args)
    reports = [edf_condition_check(family, q, enumeration_depth=args.depth)
               for q in bundled_edf_queries(pair)]
    table = [{"query": rep["query"], "n": row["index"],
              "min_margin": row["min_margin"], "verdict": row["verdict"]}
             for rep in reports for row in rep["edf"]]
    report = {
        "name": "edf-condition-set",
        "enumeration_depth": args.depth,
        "queries": reports,
        "table": table,
        "stability_implies_edf": all(r["stability_implies_edf"]
                                     for r in reports),
        "pass": all(r["pass"] for r in reports),
    }
    _emit(report, args.out)
    return _passfail(report)


def cmd_chabauty(args) -> int:
    _, family = _family_from_args(args)
    report = chabauty_check(family, ball_radius=args.radius,
                            word_depth=args.depth)
    _emit(report, args.out)
    return _passfail(report)


def cmd_limitset(args) -> int:
    _, family = _family_from_args(args)
    report = limit_set_convergence(family, word_depth=args.depth,
                                   screen_powers=args.screen_powers)
    ok = bool(report["decreasing"])
    if args.max_final is not None:
        ok = ok and (report["final_distance"] is not None
                     and report["final_distance"] <= args.max_final)
    report["pass"] = ok
    _emit(report, args.out)
    return _passfail(report)


def cmd_run(args) -> int:
    code, summary = run_scenario(args.scenario, output_dir=args.out)
    for entry in summary["tasks"]:
        mark = "pass" if entry["pass"] else "FAIL"
        detail = entry.get("error", entry.get("report_file", ""))
        print(f"{mark}  {entry['task']}  {detail}")
    print("scenario:", "pass" if summary["pass"] else "FAIL")
    return code


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rhfill",
        description="window checks for relatively hyperbolic fillings")
    sub = parser.add_subparsers(dest="verb", required=True)

    def pair_arg(p, required=False):
        p.add_argument("--pair", required=required, metavar="FILE",
                       help="pair JSON; defaults to the two-cusp free pair")

    def out_arg(p):
        p.add_argument("--out", metavar="FILE",
                       help="write the JSON report here instead of stdout")

    p = sub.add_parser("cusped", help="build a cusped window")
    pair_arg(p)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--dump", metavar="FILE", help="write the graph text dump")
    out_arg(p)
    p.set_defaults(func=cmd_cusped)

    p = sub.add_parser("delta", help="hyperbolicity of a dumped graph")
    p.add_argument("--graph", required=True, metavar="FILE")
    p.add_argument("--mode", default="auto", choices=sorted(MODE_ALIASES))
    p.add_argument("--budget", type=int, default=300_000_000,
                   help="quadruple cap for the exhaustive scan")
    p.add_argument("--samples", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    out_arg(p)
    p.set_defaults(func=cmd_delta)

    p = sub.add_parser("fill", help="filling checks on a quotient window")
    pair_arg(p)
    p.add_argument("--kernels", required=True,
                   help='JSON object, e.g. \'{"0":["a^50"],"1":["b^50"]}\'')
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--checks", default="local-isometry,descent,uniform-delta",
                   help=f"comma list from: {', '.join(FILL_CHECKS)}")
    p.add_argument("--isometry-radius", type=int, default=None)
    p.add_argument("--descent-k", type=float, default=1.0)
    p.add_argument("--descent-depth", type=int, default=2)
    p.add_argument("--delta-radius", type=int, default=4)
    p.add_argument("--delta-samples", type=int, default=50_000)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    out_arg(p)
    p.set_defaults(func=cmd_fill)

    p = sub.add_parser("lift", help="lift quotient geodesics and check them")
    pair_arg(p)
    p.add_argument("--kernels", required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--paths", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    out_arg(p)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("automaton", help="validate an automaton, optionally "
                                         "check representation compatibility")
    pair_arg(p)
    p.add_argument("--auto", metavar="FILE",
                   help="automaton JSON; defaults to the bundled one")
    p.add_argument("--compat", action="store_true",
                   help="also check the built-in representation against it")
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump", metavar="FILE", help="write the automaton JSON")
    p.add_argument("--dump-sets", metavar="FILE",
                   help="write the set system JSON")
    out_arg(p)
    p.set_defaults(func=cmd_automaton)

    def family_args(p):
        pair_arg(p)
        p.add_argument("--indices", default="10,20,30,40,60",
                       help="comma list of filling orders")

    p = sub.add_parser("edf", help="extended filling condition per index")
    family_args(p)
    p.add_argument("--depth", type=int, default=8)
    out_arg(p)
    p.set_defaults(func=cmd_edf)

    p = sub.add_parser("chabauty", help="windowed group convergence table")
    family_args(p)
    p.add_argument("--radius", type=float, default=10.0)
    p.add_argument("--depth", type=int, default=8)
    out_arg(p)
    p.set_defaults(func=cmd_chabauty)

    p = sub.add_parser("limitset", help="limit set convergence table")
    family_args(p)
    p.add_argument("--depth", type=int, default=12)
    p.add_argument("--screen-powers", type=int, default=7)
    p.add_argument("--max-final", type=float, default=None)
    out_arg(p)
    p.set_defaults(func=cmd_limitset)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario", metavar="SCENARIO.json")
    p.add_argument("--out", metavar="DIR",
                   help="output directory; defaults to the scenario's")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else int(e.code)
    if getattr(args, "isometry_radius", None) is None \
            and getattr(args, "func", None) is cmd_fill:
        args.isometry_radius = max(1, args.radius - 1)
    try:
        return args.func(args)
    except BudgetExceededError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (SchemaError, InvalidParameterError, TypeMismatchError,
            UnsupportedKindError, WindowError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except RhfillError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
