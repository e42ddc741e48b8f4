"""Command-line client and scenario runner.

Every subcommand works either against a live gateway (``--server URL``) or
embedded in-process (``--embedded``, the default), where reads replay a
journal file directly.
"""

from __future__ import annotations

import sys
import click

from . import agents, provenance
from .config import ServiceConfig, apply_overrides, load_config
from .errors import CreditoError, JournalIntegrityError, ReplayError
from .journal import load_ledger, verify_file, decode_record
from .ledger import Ledger
from .scenario import EmbeddedTarget, HttpTarget, load_script, run_scenario


def _load_service_config(config_path: str | None) -> ServiceConfig:
    return load_config(config_path) if config_path else ServiceConfig()


def _embedded_ledger(journal_path: str | None, config: ServiceConfig) -> Ledger:
    if not journal_path:
        raise click.UsageError("embedded mode needs --journal PATH")
    ledger, _ = load_ledger(
        journal_path,
        policy=config.policy,
        claim_validation_enabled=config.claim_validation_enabled,
    )
    return ledger


server_option = click.option("--server", metavar="URL", default=None, help="Target a running gateway.")
embedded_option = click.option("--embedded", is_flag=True, help="Run in-process (default when --server absent).")
journal_option = click.option("--journal", "journal_path", metavar="PATH", default=None, help="Journal file for embedded mode.")
config_option = click.option("--config", "config_path", metavar="PATH", default=None, help="Service configuration file.")


@click.group()
def main() -> None:
    """Track renovation tax credits across the two token ledgers."""


@main.command()
@config_option
def serve(config_path: str | None) -> None:
    """Replay the journal and serve the HTTP gateway."""
    from .gateway import serve as serve_gateway

    try:
        config = _load_service_config(config_path)
        click.echo(f"serving on {config.host}:{config.port} (journal: {config.journal_path})")
        serve_gateway(config)
    except CreditoError as exc:
        raise click.ClickException(f"{exc.code}: {exc.message}")


@main.command("run-scenario")
@click.argument("script", type=click.Path(exists=True, dir_okay=False))
@server_option
@embedded_option
@journal_option
@config_option
def run_scenario_cmd(script: str, server: str | None, embedded: bool, journal_path: str | None, config_path: str | None) -> None:
    """Execute a scripted scenario and print its transcript."""
    try:
        scenario = load_script(script)
        if server:
            target = HttpTarget(server)
        else:
            config = apply_overrides(_load_service_config(config_path), scenario.config_overrides)
            target = EmbeddedTarget(config, journal_path=journal_path)
        code, transcript = run_scenario(scenario, target)
    except CreditoError as exc:
        raise click.ClickException(f"{exc.code}: {exc.message}")
    click.echo(transcript, nl=False)
    sys.exit(code)


@main.command("show-tree")
@click.argument("credit_code")
@server_option
@journal_option
@config_option
def show_tree(credit_code: str, server: str | None, journal_path: str | None, config_path: str | None) -> None:
    """Render the spreading tree of one credit as indented text."""
    try:
        if server:
            record = HttpTarget(server).tree(credit_code)
            tree = provenance.tree_from_record(record)
        else:
            config = _load_service_config(config_path)
            ledger = _embedded_ledger(journal_path, config)
            tree = provenance.build_tree(ledger.events, credit_code)
    except CreditoError as exc:
        raise click.ClickException(f"{exc.code}: {exc.message}")
    click.echo(provenance.render_tree(tree))


@main.command()
@click.option("--horizon", default=3, show_default=True, help="Number of future periods.")
@server_option
@journal_option
@config_option
def forecast(horizon: int, server: str | None, journal_path: str | None, config_path: str | None) -> None:
    """Forecast operator-token demand."""
    try:
        if server:
            record = HttpTarget(server).forecast(horizon)
        else:
            config = _load_service_config(config_path)
            ledger = _embedded_ledger(journal_path, config)
            history = agents.demand_history(ledger.events, config.forecast_period_length)
            record = agents.forecast_demand(history, horizon, config.alpha, config.forecast_period_length).to_record()
    except CreditoError as exc:
        raise click.ClickException(f"{exc.code}: {exc.message}")
    click.echo(f"method: {record['method']}")
    click.echo(f"period_length: {record['period_length']}")
    for i, value in enumerate(record["values"], start=1):
        click.echo(f"period +{i}: {value}")


@main.command()
@click.option("--since-seq", default=0, show_default=True, help="Only alerts detected after this seq.")
@server_option
@journal_option
@config_option
def alerts(since_seq: int, server: str | None, journal_path: str | None, config_path: str | None) -> None:
    """List fraud alerts."""
    try:
        if server:
            found = HttpTarget(server).alerts(since_seq=since_seq)
        else:
            config = _load_service_config(config_path)
            ledger = _embedded_ledger(journal_path, config)
            found = [a.to_record() for a in agents.control_scan(ledger.events, config.policy) if a.detected_at > since_seq]
    except CreditoError as exc:
        raise click.ClickException(f"{exc.code}: {exc.message}")
    if not found:
        click.echo("no alerts")
        return
    for a in found:
        click.echo(
            f"{a['rule_id']} [{a['severity']}] subjects={','.join(a['subjects'])} "
            f"evidence={','.join(str(s) for s in a['evidence'])} detected_at={a['detected_at']}"
        )


@main.command("verify-journal")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@config_option
def verify_journal(path: str, config_path: str | None) -> None:
    """Verify a journal offline: hash chain, replay, and all ledger invariants."""
    config = _load_service_config(config_path)
    failures = 0

    def report(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        if not ok:
            failures += 1
        suffix = f" ({detail})" if detail else ""
        click.echo(f"{'PASS' if ok else 'FAIL'} {name}{suffix}")

    try:
        records = verify_file(path)
        report("hash chain", True, f"{len(records)} record(s)")
    except JournalIntegrityError as exc:
        report("hash chain", False, f"{exc.code}: {exc.message}")
        sys.exit(2)

    events = [decode_record(r) for r in records]
    try:
        ledger = Ledger.replay_events(events, policy=config.policy, claim_validation_enabled=config.claim_validation_enabled)
        report("replay", True, f"head seq {ledger.head_seq}")
    except ReplayError as exc:
        report("replay", False, exc.message)
        sys.exit(2)

    frozen = ledger.frozen_by_link()
    live = ledger.operator_by_link()
    per_link_ok = all(frozen.get(l, 0) == live.get(l, 0) for l in set(frozen) | set(live))
    report("coverage per link", per_link_ok)
    report("coverage global", sum(frozen.values()) == sum(live.values()))

    minted = sum(e.payload["amount"] for e in events if e.op == "InvestorMint")
    held = sum(t.face_value for t in ledger.tokens.values())
    report("investor value conservation", held == minted, f"{held} == {minted}")

    trees_ok, residues_ok = True, True
    for code in ledger.minted_credit_codes:
        tree = provenance.build_tree(events, code)
        if provenance.check_conservation(tree):
            trees_ok = False
        live_total = sum(b.amount for b in ledger.batches.values() if b.credit_code == code)
        if tree.live_residue_total() != live_total:
            residues_ok = False
    report("tree conservation", trees_ok)
    report("tree residue == live batches", residues_ok)

    instalments_ok = all(sum(c.instalments) == c.credit_amount for c in ledger.credits.values())
    report("instalments sum to credit", instalments_ok)

    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
