"""Scripted end-to-end scenarios: the demo data and the acceptance harness.

A script is a YAML file with a name, optional config overrides, and an
ordered list of steps. Each step is one of:

* an ``op`` with ``args`` and an ``expect`` clause (``ok``, ``{error: CODE}``
  or ``{result: {subset}}``),
* an ``assert`` over a read model (balance, balances, alerts, tree,
  forecast), or
* an ``inject`` (embedded runs only): appends a raw journal event without
  command validation, to seed streams the control agent must flag.

Scripts run against an embedded in-process ledger or a live gateway; the
transcript is deterministic, one line per step, and the run exits nonzero
at the first expectation that does not hold.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import httpx
import yaml

from . import agents, provenance
from .config import ServiceConfig
from .errors import (
    CreditoError,
    ExpectationFailed,
    ScriptParseError,
)
from .journal import Journal
from .ledger import Ledger

OPS = {
    "register_actor",
    "mint_investor",
    "mint_operator",
    "transfer_operator",
    "redeem_operator",
    "invoice_discount",
    "close_fund",
}

ASSERTS = {"unfrozen_balance", "balances", "alerts", "tree", "forecast"}


@dataclass
class Scenario:
    name: str
    config_overrides: dict
    steps: list[dict]


def load_script(path: str | Path) -> Scenario:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScriptParseError(f"cannot read script {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScriptParseError(f"script {path} is not valid YAML: {exc}") from exc
    return parse_script(data, default_name=Path(path).stem)


def parse_script(data: Any, default_name: str = "scenario") -> Scenario:
    if not isinstance(data, dict) or not isinstance(data.get("steps"), list):
        raise ScriptParseError("script must be a mapping with a 'steps' list")
    steps = []
    for i, step in enumerate(data["steps"], start=1):
        if not isinstance(step, dict):
            raise ScriptParseError(f"step {i} must be a mapping")
        kinds = [k for k in ("op", "assert", "inject") if k in step]
        if len(kinds) != 1:
            raise ScriptParseError(f"step {i} needs exactly one of op/assert/inject")
        kind = kinds[0]
        if kind == "op" and step["op"] not in OPS:
            raise ScriptParseError(f"step {i}: unknown op {step['op']!r}")
        if kind == "assert" and step["assert"] not in ASSERTS:
            raise ScriptParseError(f"step {i}: unknown assert {step['assert']!r}")
        if kind == "inject" and not isinstance(step.get("args"), dict):
            raise ScriptParseError(f"step {i}: inject needs an args mapping")
        steps.append(step)
    return Scenario(
        name=str(data.get("name", default_name)),
        config_overrides=data.get("config_overrides") or {},
        steps=steps,
    )


def _matches(expected, actual) -> bool:
    """Subset match; wire integers may come back as decimal strings."""
    if isinstance(expected, dict):
        if not isinstance(actual, dict):
            return False
        return all(k in actual and _matches(v, actual[k]) for k, v in expected.items())
    if isinstance(expected, list):
        if not isinstance(actual, list) or len(expected) != len(actual):
            return False
        return all(_matches(e, a) for e, a in zip(expected, actual))
    if isinstance(expected, int) and not isinstance(expected, bool):
        if isinstance(actual, str):
            try:
                return int(actual) == expected
            except ValueError:
                return False
        return actual == expected
    return expected == actual


class EmbeddedTarget:
    """Runs ops directly against an in-process ledger."""

    def __init__(self, config: ServiceConfig, journal_path: str | Path | None = None) -> None:
        self.config = config
        journal = Journal.open(journal_path) if journal_path else None
        self.ledger = Ledger(
            policy=config.policy,
            claim_validation_enabled=config.claim_validation_enabled,
            journal=journal,
        )
        self.host = agents.AgentHost(self.ledger, config.policy, config.forecast_period_length, config.alpha)

    def run_op(self, op: str, args: dict) -> dict:
        try:
            return self._dispatch_op(op, args)
        except KeyError as exc:
            raise ScriptParseError(f"op {op} is missing argument {exc}") from None
        except TypeError as exc:
            raise ScriptParseError(f"op {op}: {exc}") from None

    def _dispatch_op(self, op: str, args: dict) -> dict:
        a = dict(args)
        if op == "register_actor":
            return self.ledger.register_actor(a.pop("id"), a.pop("roles"), **a)
        if op == "mint_investor":
            return self.ledger.mint_investor(a.pop("fi"), a.pop("beneficiary"), a.pop("amount"), **a)
        if op == "mint_operator":
            return self.ledger.mint_operator(a.pop("fi"), a.pop("to"), a.pop("amount"), a.pop("credit_code"), **a)
        if op == "transfer_operator":
            return self.ledger.transfer_operator(a.pop("from"), a.pop("to"), a.pop("batch_id"), a.pop("amount"), **a)
        if op == "redeem_operator":
            return self.ledger.redeem_operator(a.pop("holder"), a.pop("fi"), a.pop("batch_id"), a.pop("amount"), **a)
        if op == "invoice_discount":
            return self.ledger.claim_invoice_discount(
                a.pop("customer"), a.pop("property"), a.pop("contractor"), a.pop("invoice_total"), a.pop("year"), **a
            )
        if op == "close_fund":
            return self.ledger.close_fund(a.pop("fi"), reward_rate=str(a.pop("reward_rate", self.config.reward_rate)), **a)
        raise ScriptParseError(f"unknown op {op!r}")

    def inject(self, op: str, actor: str, args: dict) -> dict:
        event = self.ledger.inject_event(op, actor, args)
        return {"seq": event.seq}

    def unfrozen_balance(self) -> int:
        return self.ledger.get_unfrozen_investor_balance()

    def balances(self, actor: str) -> dict:
        return self.ledger.actor_balances(actor)

    def alerts(self, since_seq: int = 0) -> list[dict]:
        return [a.to_record() for a in self.host.alerts(since_seq=since_seq)]

    def tree(self, credit_code: str) -> dict:
        return provenance.tree_to_record(provenance.build_tree(self.ledger.events, credit_code))

    def forecast(self, horizon: int) -> dict:
        return self.host.forecast(horizon).to_record()


class HttpTarget:
    """Runs ops against a live gateway over HTTP."""

    _ENDPOINTS = {
        "register_actor": "/actors",
        "mint_investor": "/investor/mint",
        "mint_operator": "/operator/mint",
        "transfer_operator": "/operator/transfer",
        "redeem_operator": "/operator/redeem",
        "invoice_discount": "/credits/invoice-discount",
        "close_fund": "/fund/close",
    }

    def __init__(self, base_url: str, client: httpx.Client | None = None) -> None:
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=10.0)

    def _raise_for_error(self, response: httpx.Response) -> dict:
        body = response.json()
        if response.status_code >= 400:
            err = body.get("error", {})
            raise CreditoHttpError(err.get("code", "HttpError"), err.get("message", ""), err.get("details"))
        return body

    def run_op(self, op: str, args: dict) -> dict:
        response = self.client.post(self.base_url + self._ENDPOINTS[op], json=args)
        return self._raise_for_error(response)

    def inject(self, op: str, actor: str, args: dict) -> dict:
        raise ScriptParseError("inject steps require an embedded run")

    def unfrozen_balance(self) -> int:
        body = self._raise_for_error(self.client.get(self.base_url + "/investor/unfrozen-balance"))
        return int(body["amount"])

    def balances(self, actor: str) -> dict:
        return self._raise_for_error(self.client.get(f"{self.base_url}/balances/{actor}"))

    def alerts(self, since_seq: int = 0) -> list[dict]:
        body = self._raise_for_error(self.client.get(self.base_url + "/alerts", params={"since_seq": since_seq}))
        return body["alerts"]

    def tree(self, credit_code: str) -> dict:
        return self._raise_for_error(self.client.get(f"{self.base_url}/credits/{credit_code}/tree"))

    def forecast(self, horizon: int) -> dict:
        return self._raise_for_error(self.client.get(self.base_url + "/forecast", params={"horizon": horizon}))


class CreditoHttpError(CreditoError):
    """Server-side rejection reconstructed from an error body."""

    def __init__(self, code: str, message: str, details=None) -> None:
        super().__init__(message or code, **(details or {}))
        self.code = code


def _describe_op(step: dict) -> str:
    args = step.get("args") or {}
    rendered = ",".join(f"{k}={v}" for k, v in args.items())
    return f"{step.get('op') or step.get('inject')}({rendered})"


def run_scenario(scenario: Scenario, target) -> tuple[int, str]:
    """Execute every step; returns (exit_code, transcript)."""
    lines = [f"scenario {scenario.name}"]
    if scenario.config_overrides and isinstance(target, HttpTarget):
        lines.append("note: config_overrides ignored (server-managed configuration)")
    failed: str | None = None
    for i, step in enumerate(scenario.steps, start=1):
        try:
            line = _run_step(step, target)
        except ExpectationFailed as exc:
            failed = exc.message
            lines.append(f"step {i:02d} {_describe_op(step) if 'assert' not in step else step['assert']} -> FAILED: {failed}")
            break
        except CreditoError as exc:
            failed = f"{exc.code}: {exc.message}"
            lines.append(f"step {i:02d} -> ERROR {failed}")
            break
        lines.append(f"step {i:02d} {line}")
    lines.append(f"result {'FAIL' if failed else 'PASS'}")
    return (1 if failed else 0), "\n".join(lines) + "\n"


def _run_step(step: dict, target) -> str:
    if "op" in step:
        return _run_op_step(step, target)
    if "inject" in step:
        result = target.inject(step["inject"], step.get("actor", ""), step["args"])
        return f"inject {step['inject']} -> seq {result['seq']}"
    return _run_assert_step(step, target)


def _run_op_step(step: dict, target) -> str:
    op, args = step["op"], step.get("args") or {}
    expect = step.get("expect", "ok")
    try:
        result = target.run_op(op, args)
    except CreditoError as exc:
        if isinstance(expect, dict) and "error" in expect:
            if exc.code == expect["error"]:
                return f"{_describe_op(step)} -> error {exc.code} (expected)"
            raise ExpectationFailed(f"expected error {expect['error']}, got {exc.code}: {exc.message}") from exc
        raise ExpectationFailed(f"expected success, got {exc.code}: {exc.message}") from exc
    if isinstance(expect, dict) and "error" in expect:
        raise ExpectationFailed(f"expected error {expect['error']}, op succeeded with {result}")
    if isinstance(expect, dict) and "result" in expect:
        if not _matches(expect["result"], result):
            raise ExpectationFailed(f"result {result} does not match expected {expect['result']}")
    return f"{_describe_op(step)} -> ok"


def _run_assert_step(step: dict, target) -> str:
    kind = step["assert"]
    expect_error = step.get("expect_error")
    try:
        line = _eval_assert(kind, step, target)
    except ExpectationFailed:
        raise
    except CreditoError as exc:
        if expect_error:
            if exc.code == expect_error:
                return f"assert {kind} -> error {exc.code} (expected)"
            raise ExpectationFailed(f"expected error {expect_error}, got {exc.code}") from exc
        raise ExpectationFailed(f"assert {kind} raised {exc.code}: {exc.message}") from exc
    if expect_error:
        raise ExpectationFailed(f"expected error {expect_error}, assert succeeded")
    return line


def _eval_assert(kind: str, step: dict, target) -> str:
    if kind == "unfrozen_balance":
        actual = target.unfrozen_balance()
        if actual != step["equals"]:
            raise ExpectationFailed(f"unfrozen balance {actual}, expected {step['equals']}")
        return f"assert unfrozen_balance == {step['equals']} -> ok"
    if kind == "balances":
        actual = target.balances(step["actor"])
        if not _matches(step["expect"], actual):
            raise ExpectationFailed(f"balances {actual} do not match {step['expect']}")
        return f"assert balances({step['actor']}) -> ok"
    if kind == "alerts":
        actual = target.alerts(since_seq=step.get("since_seq", 0))
        if "count" in step and len(actual) != step["count"]:
            raise ExpectationFailed(f"{len(actual)} alert(s), expected {step['count']}: {actual}")
        for expected in step.get("expect") or []:
            if not any(_matches(expected, a) for a in actual):
                raise ExpectationFailed(f"no alert matching {expected} in {actual}")
        return f"assert alerts ({len(actual)}) -> ok"
    if kind == "tree":
        actual = target.tree(step["credit_code"])
        nodes = actual["nodes"]
        if "nodes" in step and len(nodes) != step["nodes"]:
            raise ExpectationFailed(f"tree has {len(nodes)} nodes, expected {step['nodes']}")
        if "root_children" in step:
            root_id = nodes[0]["node_id"]
            children = [n for n in nodes if n["parent"] == root_id]
            if len(children) != step["root_children"]:
                raise ExpectationFailed(f"root has {len(children)} children, expected {step['root_children']}")
        if "expect" in step and not _matches(step["expect"], actual):
            raise ExpectationFailed(f"tree {actual} does not match {step['expect']}")
        return f"assert tree({step['credit_code']}) -> ok"
    if kind == "forecast":
        actual = target.forecast(step.get("horizon", 1))
        if "values" in step and not _matches(step["values"], actual["values"]):
            raise ExpectationFailed(f"forecast {actual['values']}, expected {step['values']}")
        return "assert forecast -> ok"
    raise ScriptParseError(f"unknown assert {kind!r}")
