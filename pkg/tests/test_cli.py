"""CLI surface: subcommands, exit codes, file outputs."""

import csv
import json
import subprocess
import sys

import pytest

from trialengage.cli import main, parse_query, split_outside_braces
from trialengage.errors import ValidationError
from trialengage.graphs import build_canonical_graphs, d_separated
from trialengage.io import read_json, write_composite_csv, write_json
from trialengage.verifier import ScenarioSpec
from trialengage.scm import baseline_spec


@pytest.fixture()
def sim_dir(tmp_path):
    """A simulate run shared by the downstream subcommand tests."""
    out = tmp_path / "sim"
    rc = main(["simulate", "--builtin", "baseline", "--n", "400",
               "--seed", "9", "--out", str(out)])
    assert rc == 0
    return out


# ---------------------------------------------------------------------------
# argument handling


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_subcommand_help_exits_zero(capsys):
    assert main(["estimate", "--help"]) == 0
    assert "--estimator" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    [],
    ["unknown-command"],
    ["estimate", "--no-such-flag"],
    ["estimate"],  # --data is required
    ["simulate", "--builtin", "baseline", "--n", "10", "--seed", "1"],
])
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    assert "usage error" in capsys.readouterr().err


def test_split_outside_braces():
    assert split_outside_braces("A,B", ",") == ["A", "B"]
    assert split_outside_braces("Y^{s=1,a},S", ",") == ["Y^{s=1,a}", "S"]
    with pytest.raises(ValidationError, match="unbalanced"):
        split_outside_braces("Y^{s=1", ",")
    with pytest.raises(ValidationError, match="unbalanced"):
        split_outside_braces("Y}s{", ",")


def test_parse_query():
    assert parse_query("A,B") == ("A", "B", ())
    assert parse_query("A,B|Z") == ("A", "B", ("Z",))
    assert parse_query("Y^{s=0,a},S | X, A^{s=0}") == (
        "Y^{s=0,a}", "S", ("X", "A^{s=0}"))
    assert parse_query("A,B|") == ("A", "B", ())


@pytest.mark.parametrize("query, message", [
    ("A", "exactly two nodes"),
    ("A,B,C", "exactly two nodes"),
    ("A,B|Z|W", "more than one"),
    ("A,B|Z,,W", "empty conditioning entry"),
])
def test_parse_query_errors(query, message):
    with pytest.raises(ValidationError, match=message):
        parse_query(query)


# ---------------------------------------------------------------------------
# simulate


def test_simulate_writes_the_three_outputs(sim_dir, capsys):
    for name in ("composite.csv", "potential_outcomes.csv", "estimands.json"):
        assert (sim_dir / name).exists(), name
    estimands = read_json(sim_dir / "estimands.json")
    assert estimands["ate_usual"] == pytest.approx(0.3, abs=1e-12)
    with (sim_dir / "composite.csv").open() as fh:
        assert sum(1 for _ in fh) == 401  # header + n rows


def test_simulate_unknown_builtin_exits_two(capsys):
    rc = main(["simulate", "--builtin", "bogus", "--n", "10",
               "--seed", "1", "--out", "/tmp/never-used"])
    assert rc == 2
    assert "unknown builtin spec" in capsys.readouterr().err


def test_simulate_is_reproducible(tmp_path):
    args = ["simulate", "--builtin", "interaction", "--n", "120", "--seed", "4"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("composite.csv", "potential_outcomes.csv", "estimands.json"):
        assert ((tmp_path / "a" / name).read_text()
                == (tmp_path / "b" / name).read_text())


def test_simulate_non_nested_design(tmp_path):
    out = tmp_path / "nn"
    rc = main(["simulate", "--builtin", "baseline", "--n", "400", "--seed", "9",
               "--out", str(out), "--design", "non-nested",
               "--f-target", "0.5"])
    assert rc == 0
    with (out / "composite.csv").open() as fh:
        n_rows = sum(1 for _ in fh) - 1
    assert n_rows < 400  # target stratum was subsampled


# ---------------------------------------------------------------------------
# estimate


def test_estimate_d6_from_csv(d6, tmp_path, capsys):
    data_path = tmp_path / "d6.csv"
    write_composite_csv(data_path, d6)
    rc = main(["estimate", "--data", str(data_path), "--estimator", "om_all"])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["point"] == 0.5
    assert report["method"] == "outcome-model"
    assert report["estimand"] == "all-population usual-care ATE"


def test_estimate_with_config_and_bootstrap(sim_dir, tmp_path):
    config_path = tmp_path / "config.json"
    write_json(config_path, {
        "estimator": "ipw_all",
        "options": {"normalized": True},
        "bootstrap": {"n_replicates": 120, "level": 0.9, "seed": 3},
    })
    out_path = tmp_path / "report.json"
    rc = main(["estimate", "--data", str(sim_dir / "composite.csv"),
               "--config", str(config_path), "--out", str(out_path)])
    assert rc == 0
    report = read_json(out_path)
    assert report["method"] == "ipw"
    assert report["nuisance"]["normalized"] is True
    assert report["ci"]["n_replicates"] == 120
    assert report["ci"]["level"] == 0.9
    assert report["ci"]["lower"] <= report["point"] <= report["ci"]["upper"]


def test_estimate_with_design_options(sim_dir, tmp_path, capsys):
    config_path = tmp_path / "config.json"
    write_json(config_path, {
        "estimator": "om_all",
        "options": {"outcome_design": {"intercept": True, "columns": [0]}},
    })
    rc = main(["estimate", "--data", str(sim_dir / "composite.csv"),
               "--config", str(config_path)])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert report["nuisance"]["outcome_treated"]["saturated"] is False
    assert report["nuisance"]["outcome_control"]["converged"] is True


def test_estimate_non_nested_design_tag(sim_dir, capsys):
    rc = main(["estimate", "--data", str(sim_dir / "composite.csv"),
               "--design", "non-nested", "--estimator", "om_nonparticipants"])
    assert rc == 0
    # the nested-only estimators must refuse the same tag
    rc = main(["estimate", "--data", str(sim_dir / "composite.csv"),
               "--design", "non-nested", "--estimator", "om_all"])
    assert rc == 2
    assert "nested" in capsys.readouterr().err


def test_estimate_invalid_data_exits_two(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("id,x1,s,a,y\n5,0,0,1,1\n")
    assert main(["estimate", "--data", str(path)]) == 2
    assert "row id 5" in capsys.readouterr().err


def test_estimate_unknown_estimator_exits_two(sim_dir, capsys):
    rc = main(["estimate", "--data", str(sim_dir / "composite.csv"),
               "--estimator", "om_everything"])
    assert rc == 2
    assert "unknown" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# diagnose


def test_diagnose_requires_an_input(capsys):
    assert main(["diagnose"]) == 1
    assert "needs --data and/or --pod" in capsys.readouterr().err


def test_diagnose_writes_json_and_csv(sim_dir, tmp_path):
    out = tmp_path / "diag"
    rc = main(["diagnose", "--data", str(sim_dir / "composite.csv"),
               "--pod", str(sim_dir / "potential_outcomes.csv"),
               "--out", str(out)])
    assert rc == 0
    report = read_json(out / "diagnostics.json")
    assert set(report) == {"positivity", "interaction", "exchangeability"}
    assert len(report["positivity"]["strata"]) == 2
    with (out / "diagnostics.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["stratum", "metric", "value", "se"]
    # 6 positivity + 4 interaction + 10 exchangeability rows
    assert len(rows) == 21


def test_diagnose_stdout_json(sim_dir, capsys):
    rc = main(["diagnose", "--data", str(sim_dir / "composite.csv")])
    assert rc == 0
    report = json.loads(capsys.readouterr().out)
    assert "positivity" in report and "interaction" not in report


# ---------------------------------------------------------------------------
# verify


def test_verify_scenario_passes(capsys):
    rc = main(["verify", "--scenario", "S1", "--n", "2000",
               "--replicates", "12"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "backend:" in out
    assert "pass (recovers)" in out


def test_verify_needs_exactly_one_source(tmp_path, capsys):
    assert main(["verify"]) == 1
    path = tmp_path / "sc.json"
    write_json(path, {})
    assert main(["verify", "--scenario", "S1", "--file", str(path)]) == 1


def test_verify_writes_reports(tmp_path, capsys):
    out = tmp_path / "verify"
    rc = main(["verify", "--scenario", "S2", "--n", "4000",
               "--replicates", "20", "--out", str(out)])
    assert rc == 0
    payload = read_json(out / "verification.json")
    assert payload["summary"]["all_passed"] is True
    assert payload["reports"][0]["scenario"] == "S2"
    with (out / "replicates_S2.csv").open() as fh:
        assert sum(1 for _ in fh) == 21


def test_verify_failed_expectation_exits_three(tmp_path, capsys):
    sc = ScenarioSpec(name="wrong-target", scm=baseline_spec(),
                      estimator="om_all", n=1500, n_replicates=12,
                      expected_bias=0.5)
    path = tmp_path / "scenario.json"
    write_json(path, sc.to_obj())
    assert main(["verify", "--file", str(path)]) == 3
    assert "FAIL" in capsys.readouterr().out


def test_verify_unknown_scenario_exits_two(capsys):
    assert main(["verify", "--scenario", "S9"]) == 2
    assert "S1..S6" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# graph


def test_graph_requires_query_or_claims(capsys):
    assert main(["graph"]) == 1


def test_graph_claims(tmp_path, capsys):
    out_path = tmp_path / "claims.json"
    rc = main(["graph", "--claims", "--out", str(out_path)])
    assert rc == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 7
    assert all("[ok]" in line for line in lines)
    payload = read_json(out_path)
    assert payload["claims"]["all_match"] is True


def test_graph_query_on_the_dag(capsys):
    rc = main(["graph", "--figure", "1", "--query", "U,S"])
    assert rc == 0
    assert "d-separated" in capsys.readouterr().out
    rc = main(["graph", "--figure", "1", "--query", "U,S|A"])
    assert rc == 0
    assert "d-connected" in capsys.readouterr().out  # collider opened


def test_graph_braced_query_matches_engine(capsys):
    figure4 = build_canonical_graphs()["figure4"]
    expected = d_separated(figure4, "Y^{s=1,a}", "S", ("X",))
    rc = main(["graph", "--figure", "4", "--query", "Y^{s=1,a},S|X"])
    assert rc == 0
    verdict = capsys.readouterr().out
    assert ("d-separated" in verdict) == expected


def test_graph_unknown_figure_exits_two(capsys):
    assert main(["graph", "--figure", "9", "--query", "U,S"]) == 2


def test_graph_from_file(tmp_path, capsys):
    write_json(tmp_path / "g.json", {
        "nodes": [{"name": "A"}, {"name": "B"}, {"name": "C"}],
        "edges": [["A", "B"], ["B", "C"]],
    })
    rc = main(["graph", "--file", str(tmp_path / "g.json"),
               "--query", "A,C|B", "--out", str(tmp_path / "r.json")])
    assert rc == 0
    assert read_json(tmp_path / "r.json")["query"]["d_separated"] is True


# ---------------------------------------------------------------------------
# installed entry points


def test_module_invocation():
    proc = subprocess.run([sys.executable, "-m", "trialengage", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "trialengage" in proc.stdout


def test_console_script():
    proc = subprocess.run(["trialengage", "graph", "--claims"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.count("[ok]") == 7
