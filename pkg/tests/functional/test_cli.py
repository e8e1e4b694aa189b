"""
End-to-end tests of the gdefinetti command line.

Reports are read back from ``--output`` files so stderr diagnostics never
mix into the parsed JSON.
"""

import csv
import io
import json

import numpy as np
import pytest

from gdefinetti import __version__
from gdefinetti.core.subspace import GramOperatorPair
from gdefinetti.tools.cli import EXIT_FAILED, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, cli

HEADLINE = ["--n", "1e6", "--k", "1e5", "--da", "2.5", "--db", "2.5", "--eps-coll", "1e-10", "--eps-test", "1e-10"]
SMALL_DEFINETTI = ["verify", "definetti", "--n", "8", "--K", "1", "--eta", "0.9", "--samples", "8000",
                   "--batches", "8", "--seed", "7"]
SMALL_SIMULATE = ["simulate", "--n", "100", "--k", "100", "--da", "2.5", "--db", "2.5", "--mean-photons", "1.0",
                  "--eps-test", "0.05", "--trials", "2e4", "--batches", "4", "--seed", "3"]


def run_report(runner, tmp_path, args, name="report.json", report_format="json"):
    path = tmp_path / name
    result = runner.invoke(cli, [*args, "--format", report_format, "--output", str(path)])
    return result, path


def load_report(runner, tmp_path, args):
    result, path = run_report(runner, tmp_path, args)
    return result, json.loads(path.read_text(encoding="utf-8"))


class TestGlobalOptions:
    """Test help and version output."""

    def test_version(self, runner):
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == EXIT_OK
        assert __version__ in result.output

    def test_help_lists_commands(self, runner):
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == EXIT_OK
        for command in ("params", "verify", "simulate"):
            assert command in result.output

    def test_unknown_command(self, runner):
        assert runner.invoke(cli, ["certify"]).exit_code == EXIT_USAGE


class TestParamsCommand:
    """Test the security-parameter command."""

    def test_headline_configuration(self, runner, tmp_path):
        result, report = load_report(runner, tmp_path, ["params", *HEADLINE])
        assert result.exit_code == EXIT_OK
        assert report["kind"] == "params"
        assert report["input"]["n"] == 1_000_000
        assert report["feasible"] is True
        for key in ("K", "eta_star", "T", "eps_definetti", "eps_prime_exact", "key_reduction_bits"):
            assert key in report
        assert report["eps_prime_exact"]["sign"] == 1

    def test_stdout_is_json(self, runner):
        result = runner.invoke(cli, ["params", *HEADLINE])
        assert result.exit_code == EXIT_OK
        assert '"kind": "params"' in result.output

    def test_missing_flag_is_usage_error(self, runner):
        result = runner.invoke(cli, ["params", "--n", "1000", "--k", "100"])
        assert result.exit_code == EXIT_USAGE

    def test_zero_collective_epsilon(self, runner, tmp_path):
        args = ["params", "--n", "1e6", "--k", "1e5", "--da", "2.5", "--db", "2.5",
                "--eps-coll", "0", "--eps-test", "1e-10"]
        result, report = load_report(runner, tmp_path, args)
        assert result.exit_code == EXIT_OK
        assert report["eps_prime_exact"]["value"] == pytest.approx(1e-10, rel=1e-12)
        assert report["eps_prime_exact"]["log_abs"] == pytest.approx(report["input"]["eps_test"]["log_abs"])

    def test_infeasible_block(self, runner, tmp_path):
        args = ["params", "--n", "100", "--k", "100", "--da", "2.5", "--db", "2.5",
                "--eps-coll", "1e-10", "--eps-test", "0.01"]
        result, report = load_report(runner, tmp_path, args)
        assert result.exit_code == EXIT_INFEASIBLE
        assert report["feasible"] is False

    def test_strict_infeasible_block(self, runner):
        args = ["params", "--n", "100", "--k", "100", "--da", "2.5", "--db", "2.5",
                "--eps-coll", "1e-10", "--eps-test", "0.01", "--strict"]
        assert runner.invoke(cli, args).exit_code == EXIT_INFEASIBLE

    def test_out_of_domain_value(self, runner):
        args = ["params", "--n", "1e6", "--k", "1e5", "--da", "0", "--db", "2.5",
                "--eps-coll", "1e-10", "--eps-test", "1e-10"]
        assert runner.invoke(cli, args).exit_code == EXIT_USAGE

    def test_non_integer_count(self, runner):
        args = ["params", "--n", "10.5", "--k", "1e5", "--da", "2.5", "--db", "2.5",
                "--eps-coll", "1e-10", "--eps-test", "1e-10"]
        assert runner.invoke(cli, args).exit_code == EXIT_USAGE


class TestVerifyCommands:
    """Test the verification suites at small sizes."""

    def test_gram_suite(self, runner, tmp_path):
        result, report = load_report(runner, tmp_path, ["verify", "gram", "--n", "4", "--K", "2"])
        assert result.exit_code == EXIT_OK
        assert report["suite"] == "gram"
        assert report["passed"] is True
        assert all(check["margin"] >= 0 for check in report["checks"])

    def test_definetti_suite(self, runner, tmp_path):
        result, report = load_report(runner, tmp_path, SMALL_DEFINETTI)
        assert result.exit_code in (EXIT_OK, EXIT_FAILED)
        assert report["seed"] == 7
        assert {check["name"] for check in report["checks"]} == {
            "lambda_max_upper", "lambda_min_theorem", "lambda_min_exact"
        }
        assert report["passed"] == (result.exit_code == EXIT_OK)

    def test_same_seed_gives_identical_bytes(self, runner, tmp_path):
        _, first = run_report(runner, tmp_path, SMALL_DEFINETTI, name="first.json")
        _, second = run_report(runner, tmp_path, SMALL_DEFINETTI, name="second.json")
        assert first.read_bytes() == second.read_bytes()

    def test_seed_from_environment(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("GDF_SEED", "11")
        args = ["verify", "invariance", "--n", "2", "--K", "1", "--trials", "2"]
        result, report = load_report(runner, tmp_path, args)
        assert result.exit_code == EXIT_OK
        assert report["seed"] == 11

    def test_export_matrices(self, runner, tmp_path):
        export = tmp_path / "pair.npz"
        result, _ = run_report(runner, tmp_path, [*SMALL_DEFINETTI, "--export", str(export)])
        assert result.exit_code in (EXIT_OK, EXIT_FAILED)
        pair = GramOperatorPair.load(export)
        assert pair.n == 8
        assert pair.K == 1
        assert np.allclose(pair.M, pair.M.conj().T)

    def test_precondition_failure_is_usage_error(self, runner):
        args = ["verify", "definetti", "--n", "8", "--K", "30", "--eta", "0.5", "--samples", "100"]
        assert runner.invoke(cli, args).exit_code == EXIT_USAGE

    def test_small_tails_suite(self, runner, tmp_path):
        args = ["verify", "tails", "--k-max", "10", "--n-max", "40", "--eta-points", "3", "--pinsker-points", "10"]
        result, report = load_report(runner, tmp_path, args)
        assert result.exit_code == EXIT_OK
        assert {check["name"] for check in report["checks"]} >= {"reg_beta_tail_bound", "chernoff_tail_bound",
                                                                   "pinsker"}

    def test_small_lgrc_suite(self, runner, tmp_path):
        args = ["verify", "lgrc", "--n-max", "5", "--d-max", "2", "--extra", "50"]
        result, report = load_report(runner, tmp_path, args)
        assert result.exit_code == EXIT_OK
        assert report["passed"] is True


class TestSimulateCommand:
    """Test the energy-test simulation."""

    def test_report_fields(self, runner, tmp_path):
        result, report = load_report(runner, tmp_path, SMALL_SIMULATE)
        assert result.exit_code == EXIT_OK
        assert report["failure"]["trials"] == 20_000
        assert report["lemma36"]["trials"] == 20_000
        assert report["failure"]["ci_low"] <= report["failure"]["rate"] <= report["failure"]["ci_high"]

    def test_zero_trials_is_rejected(self, runner):
        args = [arg if arg != "2e4" else "0" for arg in SMALL_SIMULATE]
        assert runner.invoke(cli, args).exit_code == EXIT_USAGE

    def test_deterministic(self, runner, tmp_path):
        _, first = run_report(runner, tmp_path, SMALL_SIMULATE, name="a.json")
        _, second = run_report(runner, tmp_path, SMALL_SIMULATE, name="b.json")
        assert first.read_bytes() == second.read_bytes()


class TestReportFormats:
    """The three formats carry the same numbers."""

    def test_text_and_csv_match_json(self, runner, tmp_path):
        _, json_path = run_report(runner, tmp_path, SMALL_SIMULATE, name="r.json")
        _, text_path = run_report(runner, tmp_path, SMALL_SIMULATE, name="r.txt", report_format="text")
        _, csv_path = run_report(runner, tmp_path, SMALL_SIMULATE, name="r.csv", report_format="csv")
        report = json.loads(json_path.read_text(encoding="utf-8"))
        text = text_path.read_text(encoding="utf-8")
        rows = dict(csv.reader(io.StringIO(csv_path.read_text(encoding="utf-8"))))

        assert text.startswith("gdefinetti simulate report")
        for key, value in (("failure.rate", report["failure"]["rate"]),
                           ("lemma36.estimate", report["lemma36"]["estimate"]),
                           ("failure.ci_high", report["failure"]["ci_high"])):
            assert f"{key} = {json.dumps(value)}" in text
            assert json.loads(rows[key]) == value

    def test_unknown_format(self, runner):
        result = runner.invoke(cli, ["params", *HEADLINE, "--format", "xml"])
        assert result.exit_code == EXIT_USAGE
