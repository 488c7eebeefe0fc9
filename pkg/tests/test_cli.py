import csv
import json
import subprocess
import sys

import jsonschema
import pytest

from cpve import cli
from cpve.martingale import InvariantError
from cpve.report import (EXACT_HEADER, MARTINGALE_HEADER, MC_HEADER, load_schema)

SMALL_PROBES = ["--k-max", "300", "--n-max", "100"]


def run(argv):
    return cli.main([str(a) for a in argv])


def header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


def validate(path, schema):
    jsonschema.validate(json.loads(path.read_text()), load_schema(schema))


def test_simulate_outputs(tmp_path, fixture_path):
    assert run(["simulate", fixture_path("gw_half"), "--horizon", 20, "--replications", 500,
                "--seed", 1, "--output-dir", tmp_path]) == 0
    validate(tmp_path / "mc_report.json", "mc_report")
    assert header(tmp_path / "mc_by_gen.csv") == MC_HEADER
    rows = list(csv.reader(open(tmp_path / "mc_by_gen.csv")))
    assert len(rows) == 22


def test_exact_outputs(tmp_path, fixture_path):
    assert run(["exact", fixture_path("binomial_control"), "--horizon", 10, "--pmf-json",
                "--output-dir", tmp_path]) == 0
    assert header(tmp_path / "exact_bounds.csv") == EXACT_HEADER
    validate(tmp_path / "exact_pmf.json", "exact_pmf")


def test_criteria_outputs(tmp_path, fixture_path):
    assert run(["criteria", fixture_path("binomial_control"), *SMALL_PROBES, "--matrix-n", 3,
                "--matrix-k", 4, "--output-dir", tmp_path]) == 0
    validate(tmp_path / "criteria.json", "criteria")
    doc = json.loads((tmp_path / "criteria.json").read_text())
    assert doc["reports"]["theorem5"]["conclusion"] == "q<1"
    rows = list(csv.reader(open(tmp_path / "growth_rate.csv")))
    assert len(rows) == 4 and len(rows[0]) == 5
    assert all(float(x) == 1.25 for row in rows[1:] for x in row[1:])


def test_martingale_outputs(tmp_path, fixture_path):
    assert run(["martingale", fixture_path("binomial_control"), "--horizon", 15, "--replications", 400,
                "--seed", 3, "--output-dir", tmp_path]) == 0
    assert header(tmp_path / "martingale.csv") == MARTINGALE_HEADER
    validate(tmp_path / "w_histogram.json", "w_histogram")


def test_report_validates_and_is_deterministic(tmp_path, fixture_path):
    args = ["report", fixture_path("binomial_control"), "--horizon", 15, "--replications", 600,
            "--seed", 9, *SMALL_PROBES]
    assert run([*args, "--output-dir", tmp_path / "a"]) == 0
    assert run([*args, "--output-dir", tmp_path / "b", "--workers", 2]) == 0
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    validate(tmp_path / "a" / "report.json", "report")
    doc = json.loads(a)
    assert doc["config"]["seed"] == 9 and doc["tool"]["version"]


def test_env_var_sets_output_dir_and_flag_wins(tmp_path, fixture_path, monkeypatch):
    monkeypatch.setenv("CPVE_OUTPUT_DIR", str(tmp_path / "env"))
    assert run(["exact", fixture_path("gw_half"), "--horizon", 3]) == 0
    assert (tmp_path / "env" / "exact_bounds.csv").exists()
    assert run(["exact", fixture_path("gw_half"), "--horizon", 3, "--output-dir", tmp_path / "flag"]) == 0
    assert (tmp_path / "flag" / "exact_bounds.csv").exists()


def test_exit_code_validation(tmp_path, fixture_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('[offspring]\nlaw = { kind = "tabulated", values = [0, 2], probs = [0.5, 0.4] }\n'
                   '[control]\nkind = "identity"\n')
    assert run(["exact", bad, "--output-dir", tmp_path]) == 2
    assert "offspring.law" in capsys.readouterr().err
    # stochastic subcommands need a seed
    assert run(["simulate", fixture_path("gw_half"), "--output-dir", tmp_path]) == 2
    assert run(["simulate", fixture_path("gw_half"), "--seed", 1, "--horizon", -1,
                "--output-dir", tmp_path]) == 2
    # the capped control has no limit for E(k)/k
    assert run(["martingale", fixture_path("capped"), "--seed", 1, "--horizon", 5,
                "--replications", 10, "--output-dir", tmp_path]) == 2


def test_exit_code_budget(tmp_path, fixture_path):
    assert run(["exact", fixture_path("gw_half"), "--horizon", 60, "--state-cap", 1000,
                "--output-dir", tmp_path]) == 3


def test_exit_code_invariant(tmp_path, fixture_path, monkeypatch):
    def boom(cfg):
        raise InvariantError("E[W_n] increased")

    monkeypatch.setattr(cli, "execute", boom)
    assert run(["exact", fixture_path("gw_half"), "--output-dir", tmp_path]) == 4


def test_console_entry_point(tmp_path, fixture_path):
    out = subprocess.run([sys.executable, "-m", "cpve.cli", "exact", str(fixture_path("critical_gw")),
                          "--horizon", "3", "--eps", "1e-15", "--output-dir", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    rows = list(csv.reader(open(tmp_path / "exact_bounds.csv")))
    assert [float(r[1]) for r in rows[1:]] == [0.0, 0.5, 0.625, 0.6953125]


@pytest.mark.parametrize("name", ["gw_half", "subcritical_geometric", "capped"])
def test_report_on_fixtures_validates(tmp_path, fixture_path, name):
    assert run(["report", fixture_path(name), "--horizon", 10, "--replications", 200, "--seed", 2,
                *SMALL_PROBES, "--output-dir", tmp_path]) == 0
    validate(tmp_path / "report.json", "report")
