"""CLI subcommands: scenarios, tree rendering, offline verification."""

from __future__ import annotations

from pathlib import Path

import pytest
from click.testing import CliRunner

from credito.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def run_cli(runner, *args):
    result = runner.invoke(main, list(args), catch_exceptions=False)
    return result


def build_journal(runner, tmp_path, script="happy_path.yaml") -> Path:
    journal = tmp_path / "run.ndjson"
    result = run_cli(runner, "run-scenario", str(SCENARIOS / script), "--journal", str(journal))
    assert result.exit_code == 0, result.output
    return journal


class TestRunScenario:
    def test_happy_path_exits_zero(self, runner):
        result = run_cli(runner, "run-scenario", str(SCENARIOS / "happy_path.yaml"))
        assert result.exit_code == 0, result.output
        assert "result PASS" in result.output

    @pytest.mark.parametrize("script", ["fraud_f1.yaml", "fraud_f2.yaml", "fraud_f3.yaml", "fraud_f4.yaml"])
    def test_fraud_scenarios_exit_zero(self, runner, script):
        result = run_cli(runner, "run-scenario", str(SCENARIOS / script))
        assert result.exit_code == 0, result.output

    def test_transcripts_are_deterministic(self, runner):
        first = run_cli(runner, "run-scenario", str(SCENARIOS / "happy_path.yaml")).output
        second = run_cli(runner, "run-scenario", str(SCENARIOS / "happy_path.yaml")).output
        assert first == second

    def test_redeem_before_mint_fails_with_ledger_error(self, runner, tmp_path):
        script = tmp_path / "bad.yaml"
        script.write_text(
            "name: bad\n"
            "steps:\n"
            "  - op: register_actor\n"
            "    args: {id: bank1, roles: [FinancialInstitution]}\n"
            "  - op: redeem_operator\n"
            "    args: {holder: gc1, fi: bank1, batch_id: B1, amount: 100}\n"
        )
        result = run_cli(runner, "run-scenario", str(script))
        assert result.exit_code == 1
        assert "NotOwner" in result.output
        assert "result FAIL" in result.output

    def test_unmet_expectation_reports_divergence(self, runner, tmp_path):
        script = tmp_path / "diverge.yaml"
        script.write_text(
            "name: diverge\n"
            "steps:\n"
            "  - op: register_actor\n"
            "    args: {id: bank1, roles: [FinancialInstitution]}\n"
            "    expect: {error: DuplicateActor}\n"
        )
        result = run_cli(runner, "run-scenario", str(script))
        assert result.exit_code == 1

    def test_script_parse_error(self, runner, tmp_path):
        script = tmp_path / "broken.yaml"
        script.write_text("name: broken\nsteps:\n  - op: fly_to_moon\n    args: {}\n")
        result = run_cli(runner, "run-scenario", str(script))
        assert result.exit_code != 0
        assert "ScriptParseError" in result.output


class TestShowTree:
    def test_golden_rendering(self, runner, tmp_path):
        journal = build_journal(runner, tmp_path)
        result = run_cli(runner, "show-tree", "C1", "--journal", str(journal))
        assert result.exit_code == 0
        assert result.output == (
            "mint bank1->gc1 100000 seq 9\n"
            "  transfer gc1->sup1 60000 seq 10\n"
            "    redeem sup1->bank1 60000 seq 12\n"
            "  transfer gc1->arch1 40000 seq 11\n"
            "    redeem arch1->bank1 40000 seq 13\n"
        )

    def test_unknown_code_fails(self, runner, tmp_path):
        journal = build_journal(runner, tmp_path)
        result = run_cli(runner, "show-tree", "C99", "--journal", str(journal))
        assert result.exit_code != 0
        assert "UnknownCreditCode" in result.output


class TestVerifyJournal:
    def test_happy_journal_all_pass(self, runner, tmp_path):
        journal = build_journal(runner, tmp_path)
        result = run_cli(runner, "verify-journal", str(journal))
        assert result.exit_code == 0, result.output
        assert "FAIL" not in result.output
        for line in result.output.strip().splitlines():
            assert line.startswith("PASS")

    def test_empty_journal_passes_as_genesis(self, runner, tmp_path):
        path = tmp_path / "empty.ndjson"
        path.write_bytes(b"")
        result = run_cli(runner, "verify-journal", str(path))
        assert result.exit_code == 0

    def test_corrupted_journal_reports_chain_failure(self, runner, tmp_path):
        journal = build_journal(runner, tmp_path)
        raw = bytearray(journal.read_bytes())
        raw[len(raw) // 2] ^= 0x01
        journal.write_bytes(bytes(raw))
        result = run_cli(runner, "verify-journal", str(journal))
        assert result.exit_code == 2
        assert "FAIL hash chain" in result.output

    def test_injected_fraud_journal_fails_replay(self, runner, tmp_path):
        journal = tmp_path / "f3.ndjson"
        result = run_cli(runner, "run-scenario", str(SCENARIOS / "fraud_f3.yaml"), "--journal", str(journal))
        assert result.exit_code == 0
        result = run_cli(runner, "verify-journal", str(journal))
        assert result.exit_code == 2
        assert "PASS hash chain" in result.output
        assert "FAIL replay" in result.output


class TestReadCommands:
    def test_forecast_from_journal(self, runner, tmp_path):
        journal = build_journal(runner, tmp_path)
        result = run_cli(runner, "forecast", "--horizon", "2", "--journal", str(journal))
        assert result.exit_code == 0, result.output
        lines = result.output.strip().splitlines()
        assert lines[0].startswith("method: exponential_smoothing")
        assert len([l for l in lines if l.startswith("period +")]) == 2

    def test_alerts_clean_journal(self, runner, tmp_path):
        journal = build_journal(runner, tmp_path)
        result = run_cli(runner, "alerts", "--journal", str(journal))
        assert result.exit_code == 0
        assert result.output == "no alerts\n"

    def test_alerts_fraud_journal(self, runner, tmp_path):
        journal = tmp_path / "f4.ndjson"
        run_cli(runner, "run-scenario", str(SCENARIOS / "fraud_f4.yaml"), "--journal", str(journal))
        result = run_cli(runner, "alerts", "--journal", str(journal))
        assert result.exit_code == 0
        assert "F4_CUSTODY_CYCLE" in result.output

    def test_embedded_reads_need_journal(self, runner):
        result = runner.invoke(main, ["alerts"])
        assert result.exit_code != 0
        assert "--journal" in result.output
