"""Scenario runner: one JSON file describing a pair, a representation
family, and a task list; one JSON report per task, optional CSVs, and a
summary with a machine-checkable verdict per task.

Reports are deterministic: a scenario with a fixed seed serializes to the
same bytes on every run (sorted keys, no timestamps, no absolute paths).
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import time
from pathlib import Path

import jsonschema
import numpy as np

from .automata import (
    Ball,
    bundled_sanov_automaton,
    check_compatibility,
    enumerate_gpaths,
    nested_diameters,
)
from .convergence import (
    EdfQuery,
    RepFamily,
    bundled_edf_queries,
    chabauty_check,
    edf_condition_check,
    elliptic_family,
    fiber_consistency_check,
    gpath_tracking_check,
    limit_set_convergence,
    sanov_generators,
    sequences_from_gpaths,
)
from .errors import (
    BudgetExceededError,
    InvalidParameterError,
    NoTabularDataError,
    RhfillError,
    SchemaError,
)
from .filling_geometry import check_uniform_delta
from .groups import RelHypPair, make_oracle, make_pair, parse_word, standard_f2_pair
from .metric_checks import verify_metric_lemmas

__all__ = [
    "SCENARIO_SCHEMA",
    "Scenario",
    "load_scenario",
    "pair_from_spec",
    "run_scenario",
    "emit_plot_data",
    "bundled_scenario_path",
    "thread_cap",
]

DEFAULT_BUDGETS = {
    "elements": 2_000_000,
    "edges": 2_000_000,
    "matrices": 200_000,
    "seconds": None,
}

TASK_CHECKS = (
    "metric-lemmas",
    "uniform-delta",
    "compatibility",
    "contraction",
    "edf",
    "chabauty",
    "limitset",
    "fiber",
    "tracking",
)

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["pair", "tasks"],
    "additionalProperties": False,
    "properties": {
        "pair": {
            "type": "object",
            "properties": {
                "builtin": {"enum": ["f2"]},
                "group": {"type": "object"},
                "peripherals": {"type": "object"},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0},
        "representation": {
            "type": "object",
            "properties": {
                "builtin": {"enum": ["sanov"]},
                "matrices": {"type": "object"},
            },
            "additionalProperties": False,
        },
        "filling_family": {
            "type": "object",
            "properties": {
                "builtin": {"enum": ["elliptic"]},
                "indices": {"type": "array",
                            "items": {"type": "integer", "minimum": 2}},
                "members": {"type": "object"},
                "kernels": {"type": "object"},
            },
            "additionalProperties": False,
        },
        "budgets": {
            "type": "object",
            "properties": {
                "elements": {"type": "integer", "minimum": 1},
                "edges": {"type": "integer", "minimum": 1},
                "matrices": {"type": "integer", "minimum": 1},
                "seconds": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "output_dir": {"type": "string"},
        "tasks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["check"],
                "properties": {"check": {"enum": list(TASK_CHECKS)}},
            },
        },
    },
}


def thread_cap() -> int:
    """Worker cap for per-index fan-out; RHFILL_THREADS overrides."""
    env = os.environ.get("RHFILL_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise InvalidParameterError(
                f"RHFILL_THREADS must be an integer, got {env!r}")
        if cap < 1:
            raise InvalidParameterError("RHFILL_THREADS must be >= 1")
        return cap
    return min(4, os.cpu_count() or 1)


def _pool_map(fn, items):
    """Order-preserving parallel map; degenerates to a loop at cap 1."""
    items = list(items)
    cap = thread_cap()
    if cap == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# scenario loading


def pair_from_spec(pspec: dict) -> RelHypPair:
    """Pair from its JSON form: {"builtin": "f2"} or {"group", "peripherals"}."""
    if pspec.get("builtin") == "f2":
        return standard_f2_pair()
    if "group" not in pspec:
        raise SchemaError("pair: needs either 'builtin' or 'group'")
    try:
        oracle = make_oracle(pspec["group"])
        return make_pair(oracle, pspec.get("peripherals"))
    except RhfillError as e:
        raise SchemaError(f"pair.group: {e}") from None


class Scenario:
    """Validated scenario: pair, representation family, budgets, tasks."""

    def __init__(self, spec: dict, base_dir: Path | None = None):
        try:
            jsonschema.validate(spec, SCENARIO_SCHEMA)
        except jsonschema.ValidationError as e:
            path = ".".join(str(p) for p in e.absolute_path) or "<root>"
            raise SchemaError(f"{path}: {e.message}") from None
        self.spec = spec
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.seed = int(spec.get("seed", 0))
        self.budgets = dict(DEFAULT_BUDGETS)
        self.budgets.update(spec.get("budgets", {}))
        self.output_dir = spec.get("output_dir", "reports")
        self.pair = pair_from_spec(spec["pair"])
        self.family = self._build_family(spec.get("representation", {}),
                                         spec.get("filling_family"))
        self.tasks = list(spec["tasks"])

    def _rep_matrices(self, rspec: dict) -> dict:
        if rspec.get("builtin") == "sanov" or not rspec:
            return sanov_generators()
        mats = rspec.get("matrices")
        if not mats:
            raise SchemaError(
                "representation: needs either 'builtin' or 'matrices'")
        return {name: np.asarray(m, dtype=float) for name, m in mats.items()}

    def _build_family(self, rspec: dict, fspec: dict | None) -> RepFamily:
        base = self._rep_matrices(rspec)
        if fspec is None:
            return RepFamily(self.pair, base, {})
        if fspec.get("builtin") == "elliptic":
            ns = tuple(fspec.get("indices", (10, 20, 30, 40, 60)))
            try:
                return elliptic_family(self.pair, ns)
            except RhfillError as e:
                raise SchemaError(f"filling_family: {e}") from None
        members = {}
        for key, rep in fspec.get("members", {}).items():
            members[int(key)] = {n: np.asarray(m, dtype=float)
                                 for n, m in rep.items()}
        kernels = fspec.get("kernels", {})
        # surface malformed kernel words as schema errors naming the field
        for idx, per_spec in kernels.items():
            for pid, words in per_spec.items():
                per = self.pair.peripherals[int(pid)]
                for k, word in enumerate(words):
                    try:
                        parse_word(per.factor, word)
                    except RhfillError as e:
                        raise SchemaError(
                            f"filling_family.kernels.{idx}.{pid}[{k}]: {e}"
                        ) from None
        return RepFamily(self.pair, base, members, kernels or None)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path.name}: invalid JSON ({e})") from None
    return Scenario(spec, base_dir=path.parent)


def bundled_scenario_path() -> Path:
    return Path(__file__).parent / "data" / "sanov-filling.json"


# ---------------------------------------------------------------------------
# task execution


def _task_compatibility(sc: Scenario, params: dict) -> dict:
    auto, sys_ = bundled_sanov_automaton(sc.pair)
    return check_compatibility(
        sc.family.base, auto, sys_,
        enumeration_depth=int(params.get("enumeration_depth", 12)),
        max_checks=sc.budgets["matrices"],
        seed=sc.seed)


def _task_metric_lemmas(sc: Scenario, params: dict) -> dict:
    return verify_metric_lemmas(
        sc.pair,
        radius=int(params.get("radius", 6)),
        delta_samples=int(params.get("samples", 200_000)),
        seed=sc.seed,
        quasidensity_radius=int(params.get("quasidensity_radius", 5)))


def _task_uniform_delta(sc: Scenario, params: dict) -> dict:
    if not sc.family.fillings:
        raise InvalidParameterError(
            "uniform-delta needs a filling family with kernels")
    return check_uniform_delta(
        sc.pair, sc.family.fillings,
        radius=int(params.get("radius", 4)),
        slack=float(params.get("slack", 2.0)),
        samples=int(params.get("samples", 50_000)),
        seed=sc.seed)


def _query_from_json(pair, obj: dict, k: int) -> EdfQuery:
    def balls(key):
        out = []
        for i, b in enumerate(obj.get(key, ())):
            if "angle" not in b or "radius" not in b:
                raise SchemaError(
                    f"queries[{k}].{key}[{i}]: a ball needs "
                    "'angle' and 'radius'")
            out.append(Ball(float(b["angle"]), float(b["radius"])))
        return tuple(out)

    try:
        excl = tuple(parse_word(pair.group, w) for w in obj.get("excluded", ()))
    except RhfillError as e:
        raise SchemaError(f"queries[{k}].excluded: {e}") from None
    return EdfQuery(peripheral=int(obj.get("peripheral", 0)),
                    attracting=balls("attracting"),
                    repelling=balls("repelling"),
                    excluded=excl,
                    name=str(obj.get("name", "")))


def _task_edf(sc: Scenario, params: dict) -> dict:
    if "queries" in params:
        queries = [_query_from_json(sc.pair, q, k)
                   for k, q in enumerate(params["queries"])]
    else:
        queries = list(bundled_edf_queries(sc.pair))
    depth = int(params.get("enumeration_depth", 8))
    reports = _pool_map(
        lambda q: edf_condition_check(sc.family, q, enumeration_depth=depth),
        queries)
    table = []
    for rep in reports:
        for row in rep["edf"]:
            table.append({"query": rep["query"], "n": row["index"],
                          "min_margin": row["min_margin"],
                          "verdict": row["verdict"]})
    ok = all(r["pass"] for r in reports)
    if params.get("expect_stability_failures"):
        ok = ok and all(row["verdict"] == "fail"
                        for rep in reports
                        for row in rep["peripheral_stability"])
    return {
        "name": "edf-condition-set",
        "enumeration_depth": depth,
        "queries": reports,
        "table": table,
        "stability_implies_edf": all(r["stability_implies_edf"]
                                     for r in reports),
        "pass": ok,
    }


def _task_chabauty(sc: Scenario, params: dict) -> dict:
    return chabauty_check(
        sc.family,
        ball_radius=float(params.get("ball_radius", 10.0)),
        word_depth=int(params.get("word_depth", 8)),
        cap=sc.budgets["elements"])


def _task_limitset(sc: Scenario, params: dict) -> dict:
    rep = limit_set_convergence(
        sc.family,
        word_depth=int(params.get("word_depth", 12)),
        screen_powers=int(params.get("screen_powers", 7)),
        cap=sc.budgets["elements"])
    limit = params.get("max_final_distance")
    rep["pass"] = bool(rep["decreasing"] and
                       (limit is None or
                        (rep["final_distance"] is not None
                         and rep["final_distance"] <= float(limit))))
    return rep


def _paths_of_length(sc: Scenario, length: int, cutoff: int, count: int):
    auto, _ = bundled_sanov_automaton(sc.pair)
    out = []
    for p in enumerate_gpaths(auto, length, label_cutoff=cutoff):
        if len(p) == length:
            out.append(p)
            if len(out) == count:
                break
    return auto, out


def _task_contraction(sc: Scenario, params: dict) -> dict:
    length = int(params.get("path_length", 10))
    count = int(params.get("count", 50))
    cutoff = int(params.get("label_cutoff", 8))
    rate_bound = float(params.get("rate_bound", 0.9))
    rep_bound = int(params.get("max_repetition", 2))
    auto, paths = _paths_of_length(sc, length, cutoff, count)
    _, sys_ = bundled_sanov_automaton(sc.pair)
    samples = int(params.get("samples", 128))

    def one(item):
        i, p = item
        rep = nested_diameters(sc.family.base, p, sys_,
                               samples=samples, seed=sc.seed)
        return {"path": i, "words": p.words(), "rate": rep["rate"],
                "monotone": rep["monotone_nonincreasing"],
                "max_repetition": rep["max_repetition"]}

    table = _pool_map(one, enumerate(paths))
    worst_rate = max((r["rate"] for r in table), default=0.0)
    worst_rep = max((r["max_repetition"] for r in table), default=0)
    return {
        "name": "contraction",
        "paths": len(table),
        "path_length": length,
        "table": table,
        "max_rate": worst_rate,
        "all_monotone": all(r["monotone"] for r in table),
        "max_repetition": worst_rep,
        "rate_bound": rate_bound,
        "pass": (len(table) > 0 and worst_rate < rate_bound
                 and all(r["monotone"] for r in table)
                 and worst_rep <= rep_bound),
    }


def _task_fiber(sc: Scenario, params: dict) -> dict:
    length = int(params.get("path_length", 6))
    count = int(params.get("count", 2))
    cutoff = int(params.get("label_cutoff", 2))
    _, paths = _paths_of_length(sc, length, cutoff, count)
    seqs = sequences_from_gpaths(paths)
    return fiber_consistency_check(
        sc.family.base, sc.pair, seqs,
        distance_bound=float(params.get("distance_bound", 3.0)))


def _task_tracking(sc: Scenario, params: dict) -> dict:
    length = int(params.get("path_length", 4))
    cutoff = int(params.get("label_cutoff", 2))
    _, paths = _paths_of_length(sc, length, cutoff, 1)
    if not paths:
        raise InvalidParameterError("no automaton path of the requested length")
    return gpath_tracking_check(
        sc.pair, paths[0],
        radius=int(params.get("radius", 8)),
        cap=sc.budgets["elements"])


_TASK_RUNNERS = {
    "compatibility": _task_compatibility,
    "metric-lemmas": _task_metric_lemmas,
    "uniform-delta": _task_uniform_delta,
    "edf": _task_edf,
    "chabauty": _task_chabauty,
    "limitset": _task_limitset,
    "contraction": _task_contraction,
    "fiber": _task_fiber,
    "tracking": _task_tracking,
}


# ---------------------------------------------------------------------------
# emission


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return repr(obj)
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_plot_data(report: dict) -> str:
    """CSV rendering of a report's tabular section, header row included."""
    if not isinstance(report, dict):
        raise NoTabularDataError("no-tabular-data: report is not an object")
    if "delta_by_n" in report:
        rows = sorted(report["delta_by_n"].items(), key=lambda kv: int(kv[0]))
        lines = ["n,delta"]
        lines += [f"{n},{_csv_cell(float(d))}" for n, d in rows]
        return "\n".join(lines) + "\n"
    name = report.get("name")
    if name == "limit-set-convergence":
        depth = report["word_depth"]
        lines = ["n,d_hausdorff,depth"]
        lines += [f"{r['index']},{_csv_cell(r['d_hausdorff'])},{depth}"
                  for r in report["table"]]
        return "\n".join(lines) + "\n"
    if name == "chabauty-window":
        lines = ["n,distance,a_side,b_side"]
        lines += [",".join([str(r["index"]),
                            _csv_cell(r["full"]["distance"]),
                            _csv_cell(r["full"]["a_side"]),
                            _csv_cell(r["full"]["b_side"])])
                  for r in report["table"]]
        return "\n".join(lines) + "\n"
    if name in ("edf-condition-set", "edf-condition"):
        if name == "edf-condition":
            rows = [{"query": report["query"], "n": r["index"],
                     "min_margin": r["min_margin"], "verdict": r["verdict"]}
                    for r in report["edf"]]
        else:
            rows = report["table"]
        lines = ["query,n,min_margin,verdict"]
        lines += [",".join([r["query"], str(r["n"]),
                            _csv_cell(r["min_margin"]), r["verdict"]])
                  for r in rows]
        return "\n".join(lines) + "\n"
    if name == "contraction":
        lines = ["path,rate,monotone"]
        lines += [f"{r['path']},{_csv_cell(r['rate'])},{r['monotone']}"
                  for r in report["table"]]
        return "\n".join(lines) + "\n"
    if name == "nested-diameters":
        lines = ["step,diameter"]
        lines += [f"{i},{_csv_cell(d)}"
                  for i, d in enumerate(report["diameters"])]
        return "\n".join(lines) + "\n"
    raise NoTabularDataError(
        f"no-tabular-data: report {name!r} has no tabular section")


# ---------------------------------------------------------------------------
# runner


def run_scenario(path, output_dir=None) -> tuple[int, dict]:
    """Execute every task in order; returns (exit_code, summary).

    Exit codes follow the CLI convention: 0 all asserted verdicts pass,
    1 a property failed or a task errored, 2 schema problems (raised as
    SchemaError before any task runs), 3 a budget was exceeded (raised).
    Reports land in the scenario's output directory, one JSON per task,
    plus a ``summary.json``.
    """
    sc = load_scenario(path)
    out_dir = Path(output_dir) if output_dir is not None \
        else sc.base_dir / sc.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    started = time.monotonic()
    budget_s = sc.budgets.get("seconds")
    entries = []
    all_pass = True
    for i, task in enumerate(sc.tasks):
        if budget_s is not None and time.monotonic() - started > budget_s:
            raise BudgetExceededError("seconds", budget_s)
        check = task["check"]
        name = task.get("name", f"{i:02d}-{check}")
        runner = _TASK_RUNNERS[check]
        entry = {"task": name, "check": check,
                 "asserted": bool(task.get("assert", True))}
        try:
            report = runner(sc, task)
        except BudgetExceededError:
            raise
        except RhfillError as e:
            entry["error"] = f"{type(e).__name__}: {e}"
            entry["pass"] = False
            entries.append(entry)
            if entry["asserted"]:
                all_pass = False
            continue
        report_file = f"{name}.json"
        (out_dir / report_file).write_text(_dump_json(report))
        entry["report_file"] = report_file
        entry["pass"] = bool(report.get("pass", False))
        if task.get("csv"):
            csv_text = emit_plot_data(report)
            (out_dir / task["csv"]).write_text(csv_text)
            entry["csv_file"] = task["csv"]
        entries.append(entry)
        if entry["asserted"] and not entry["pass"]:
            all_pass = False

    summary = {
        "name": "scenario-summary",
        "seed": sc.seed,
        "tasks": entries,
        "pass": all_pass,
    }
    (out_dir / "summary.json").write_text(_dump_json(summary))
    return (0 if all_pass else 1), summary
