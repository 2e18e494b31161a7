"""Scenario files: schema gates, the task pipeline, deterministic artifacts,
and CSV emission."""
import json

import pytest

from rhfill.convergence import elliptic_generators
from rhfill.errors import (BudgetExceededError, InvalidParameterError,
                           NoTabularDataError, SchemaError)
from rhfill.scenarios import (Scenario, bundled_scenario_path, emit_plot_data,
                              load_scenario, pair_from_spec, run_scenario,
                              thread_cap)

# frozen from the bundled scenario run (seed 7)
CONTRACTION_MAX_RATE = 0.058372998207474325
COMPAT_MIN_MARGIN = 0.19955362909943897


def scenario_file(tmp_path, spec, name="sc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(spec))
    return p


@pytest.fixture(scope="module")
def bundled_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundled")
    code, summary = run_scenario(bundled_scenario_path(), output_dir=out)
    return code, summary, out


# ---------------------------------------------------------------------------
# the bundled scenario


def test_bundled_scenario_passes_every_task(bundled_run):
    code, summary, _ = bundled_run
    assert code == 0
    assert summary["pass"]
    assert summary["seed"] == 7
    assert [e["check"] for e in summary["tasks"]] == [
        "compatibility", "uniform-delta", "edf", "limitset", "chabauty",
        "contraction"]
    assert all(e["pass"] for e in summary["tasks"])


def test_bundled_scenario_writes_all_artifacts(bundled_run):
    _, summary, out = bundled_run
    for e in summary["tasks"]:
        assert (out / e["report_file"]).is_file()
    assert (out / "summary.json").is_file()
    for csv in ("delta.csv", "edf.csv", "hausdorff.csv", "chabauty.csv"):
        assert (out / csv).is_file()


def test_bundled_rerun_is_byte_identical(bundled_run, tmp_path):
    _, _, out = bundled_run
    code, _ = run_scenario(bundled_scenario_path(), output_dir=tmp_path)
    assert code == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == sorted(p.name for p in tmp_path.iterdir())
    for n in names:
        assert (out / n).read_bytes() == (tmp_path / n).read_bytes(), n


def test_bundled_delta_csv(bundled_run):
    _, _, out = bundled_run
    lines = (out / "delta.csv").read_text().splitlines()
    assert lines[0] == "n,delta"
    assert lines[1] == "10,1.5"
    assert len(lines) == 6


def test_bundled_hausdorff_csv(bundled_run):
    _, _, out = bundled_run
    lines = (out / "hausdorff.csv").read_text().splitlines()
    assert lines[0] == "n,d_hausdorff,depth"
    assert lines[1] == "10,0.09939242224401383,12"
    assert [int(l.split(",")[0]) for l in lines[1:]] == [10, 20, 30, 40, 60]


def test_bundled_edf_csv_has_both_queries(bundled_run):
    _, _, out = bundled_run
    lines = (out / "edf.csv").read_text().splitlines()
    assert lines[0] == "query,n,min_margin,verdict"
    assert len(lines) == 11  # 5 indices per query side
    assert {l.split(",")[0] for l in lines[1:]} == {"a-side", "b-side"}
    assert all(l.endswith(",pass") for l in lines[1:])


def test_bundled_chabauty_csv(bundled_run):
    _, _, out = bundled_run
    lines = (out / "chabauty.csv").read_text().splitlines()
    assert lines[0] == "n,distance,a_side,b_side"
    dists = [float(l.split(",")[1]) for l in lines[1:]]
    assert dists == sorted(dists, reverse=True)


def test_bundled_contraction_figures(bundled_run):
    _, _, out = bundled_run
    rep = json.loads((out / "05-contraction.json").read_text())
    assert rep["paths"] == 50
    assert rep["max_rate"] == pytest.approx(CONTRACTION_MAX_RATE, abs=1e-12)
    assert rep["all_monotone"]
    assert rep["max_repetition"] == 1


def test_bundled_compatibility_margin(bundled_run):
    _, _, out = bundled_run
    rep = json.loads((out / "00-compatibility.json").read_text())
    assert rep["pass"]
    assert rep["min_margin"] == pytest.approx(COMPAT_MIN_MARGIN, abs=1e-12)


def test_bundled_stability_rows_all_fail(bundled_run):
    _, _, out = bundled_run
    rep = json.loads((out / "02-edf.json").read_text())
    rows = [r for q in rep["queries"] for r in q["peripheral_stability"]]
    assert len(rows) == 10
    assert all(r["verdict"] == "fail" for r in rows)
    assert rep["stability_implies_edf"]


# ---------------------------------------------------------------------------
# schema and loading


def test_empty_task_list_exits_zero(tmp_path):
    p = scenario_file(tmp_path, {"pair": {"builtin": "f2"}, "tasks": []})
    code, summary = run_scenario(p, output_dir=tmp_path / "out")
    assert code == 0
    assert summary["tasks"] == []
    assert (tmp_path / "out" / "summary.json").is_file()


def test_unknown_check_is_schema_error(tmp_path):
    p = scenario_file(tmp_path, {"pair": {"builtin": "f2"},
                                 "tasks": [{"check": "frobnicate"}]})
    with pytest.raises(SchemaError, match=r"tasks\.0\.check"):
        load_scenario(p)


def test_missing_pair_is_schema_error():
    with pytest.raises(SchemaError, match="pair"):
        Scenario({"tasks": []})


def test_extra_top_level_key_rejected():
    with pytest.raises(SchemaError, match="bogus"):
        Scenario({"pair": {"builtin": "f2"}, "tasks": [], "bogus": 1})


def test_malformed_kernel_word_names_the_field():
    spec = {"pair": {"builtin": "f2"},
            "filling_family": {
                "members": {"5": {n: m.tolist() for n, m in
                                  elliptic_generators(5).items()}},
                "kernels": {"5": {"0": ["a^^5"]}}},
            "tasks": []}
    with pytest.raises(SchemaError,
                       match=r"filling_family\.kernels\.5\.0\[0\]"):
        Scenario(spec)


def test_custom_family_from_json():
    spec = {"pair": {"builtin": "f2"},
            "filling_family": {
                "members": {"4": {n: m.tolist() for n, m in
                                  elliptic_generators(4).items()}},
                "kernels": {"4": {"0": ["a^4"], "1": ["b^4"]}}},
            "tasks": []}
    sc = Scenario(spec)
    assert sc.family.indices == [4]
    assert sc.family.filling(4).quotient_pair.peripherals[0].factor.p_order() == 4


def test_invalid_json_is_schema_error(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{nope")
    with pytest.raises(SchemaError, match="invalid JSON"):
        load_scenario(p)


def test_pair_from_spec_variants():
    assert pair_from_spec({"builtin": "f2"}).group.gen_names == ("a", "b")
    free = pair_from_spec({"group": {"kind": "free", "rank": 2}})
    assert free.group.gen_names == ("a", "b")
    with pytest.raises(SchemaError, match="pair"):
        pair_from_spec({})


# ---------------------------------------------------------------------------
# runner behavior


def test_task_error_gives_exit_one_and_entry(tmp_path):
    p = scenario_file(tmp_path, {"pair": {"builtin": "f2"},
                                 "tasks": [{"check": "uniform-delta"}]})
    code, summary = run_scenario(p, output_dir=tmp_path / "out")
    assert code == 1
    entry = summary["tasks"][0]
    assert not entry["pass"]
    assert "filling family" in entry["error"]


def test_unasserted_failure_keeps_exit_zero(tmp_path):
    p = scenario_file(tmp_path, {
        "pair": {"builtin": "f2"},
        "tasks": [{"check": "uniform-delta", "assert": False}]})
    code, summary = run_scenario(p, output_dir=tmp_path / "out")
    assert code == 0
    assert summary["pass"]
    assert not summary["tasks"][0]["pass"]


def test_seconds_budget_is_enforced(tmp_path):
    p = scenario_file(tmp_path, {
        "pair": {"builtin": "f2"},
        "budgets": {"seconds": 1e-9},
        "tasks": [{"check": "tracking"}]})
    with pytest.raises(BudgetExceededError, match="seconds"):
        run_scenario(p, output_dir=tmp_path / "out")


def test_thread_cap_env(monkeypatch):
    monkeypatch.delenv("RHFILL_THREADS", raising=False)
    assert 1 <= thread_cap() <= 4
    monkeypatch.setenv("RHFILL_THREADS", "2")
    assert thread_cap() == 2
    monkeypatch.setenv("RHFILL_THREADS", "0")
    with pytest.raises(InvalidParameterError):
        thread_cap()
    monkeypatch.setenv("RHFILL_THREADS", "two")
    with pytest.raises(InvalidParameterError):
        thread_cap()


def test_single_thread_run_matches(tmp_path, monkeypatch, bundled_run):
    # determinism must not depend on the worker pool
    _, _, out = bundled_run
    monkeypatch.setenv("RHFILL_THREADS", "1")
    code, _ = run_scenario(bundled_scenario_path(), output_dir=tmp_path)
    assert code == 0
    name = "02-edf.json"
    assert (tmp_path / name).read_bytes() == (out / name).read_bytes()


# ---------------------------------------------------------------------------
# CSV emission


def test_emit_delta_table_sorted_numerically():
    text = emit_plot_data({"name": "uniform-delta",
                           "delta_by_n": {"50": 1.5, "3": 1.0}})
    assert text == "n,delta\n3,1.0\n50,1.5\n"


def test_emit_hausdorff_rows():
    rep = {"name": "limit-set-convergence", "word_depth": 12,
           "table": [{"index": 10, "d_hausdorff": 0.5}]}
    assert emit_plot_data(rep) == "n,d_hausdorff,depth\n10,0.5,12\n"


def test_emit_empty_table_is_header_only():
    rep = {"name": "limit-set-convergence", "word_depth": 8, "table": []}
    assert emit_plot_data(rep) == "n,d_hausdorff,depth\n"


def test_emit_chabauty_rows():
    rep = {"name": "chabauty-window",
           "table": [{"index": 10,
                      "full": {"distance": 2.0, "a_side": 2.0,
                               "b_side": 1.5}}]}
    assert emit_plot_data(rep) == "n,distance,a_side,b_side\n10,2.0,2.0,1.5\n"


def test_emit_single_edf_report():
    rep = {"name": "edf-condition", "query": "a-side",
           "edf": [{"index": 30, "min_margin": 0.04, "verdict": "pass"}]}
    assert emit_plot_data(rep) == \
        "query,n,min_margin,verdict\na-side,30,0.04,pass\n"


def test_emit_nested_diameters():
    rep = {"name": "nested-diameters", "diameters": [1.0, 0.5]}
    assert emit_plot_data(rep) == "step,diameter\n0,1.0\n1,0.5\n"


def test_emit_contraction_rows():
    rep = {"name": "contraction",
           "table": [{"path": 0, "rate": 0.1, "monotone": True}]}
    assert emit_plot_data(rep) == "path,rate,monotone\n0,0.1,True\n"


def test_emit_rejects_reports_without_tables():
    with pytest.raises(NoTabularDataError, match="no-tabular-data"):
        emit_plot_data({"name": "gpath-tracking", "pass": True})
    with pytest.raises(NoTabularDataError):
        emit_plot_data("not a report")
