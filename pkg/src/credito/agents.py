"""Monitoring agents layered over the journal.

Three kinds, none of which ever mutates the ledger:

* Com agents bridge the journal to the others: watermark-based polling
  with at-least-once delivery; downstream processing is idempotent.
* The Control agent audits the raw event stream against four fraud /
  incorrect-scheme rules (F1..F4). It deliberately does not trust the
  ledger's own gating: tampered or injected streams are exactly what it
  exists to catch.
* The Prediction agent forecasts operator-token demand per period with
  simple exponential smoothing, computed in exact rational arithmetic and
  floored to cents.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Sequence

from . import provenance
from .errors import BadAlpha, BadHorizon, EmptyHistory
from .fiscal import ClaimPolicy
from .model import (
    OP_CREDIT_CLAIM,
    OP_FUND_CLOSE,
    OP_INVESTOR_MINT,
    OP_OPERATOR_MINT,
    OP_REDEEM,
    OP_REGISTER,
    OP_TRANSFER,
    LedgerEvent,
)

RULE_F1 = "F1_AMOUNT_EXCEEDED"
RULE_F2 = "F2_PROPERTY_COUNT"
RULE_F3 = "F3_UNBACKED_REDEEM"
RULE_F4 = "F4_CUSTODY_CYCLE"

SEVERITY_WARNING = "warning"
SEVERITY_CRITICAL = "critical"

# Journal views for the two Com agents: one follows the investors ledger,
# one the operators marketplace. Both see the ops that touch their side.
INVESTOR_VIEW_OPS = frozenset({OP_REGISTER, OP_INVESTOR_MINT, OP_OPERATOR_MINT, OP_REDEEM, OP_FUND_CLOSE})
OPERATOR_VIEW_OPS = frozenset({OP_REGISTER, OP_OPERATOR_MINT, OP_TRANSFER, OP_REDEEM, OP_CREDIT_CLAIM})


@dataclass(frozen=True)
class AgentSubscription:
    agent_name: str
    last_processed_seq: int = 0


@dataclass(frozen=True)
class FraudAlert:
    rule_id: str
    severity: str
    subjects: tuple[str, ...]
    evidence: tuple[int, ...]  # journal seq numbers, ascending
    detected_at: int  # seq at which the pattern completed

    @property
    def identity(self) -> tuple:
        return (self.rule_id, self.subjects, self.evidence)

    def to_record(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "severity": self.severity,
            "subjects": list(self.subjects),
            "evidence": list(self.evidence),
            "detected_at": self.detected_at,
        }


@dataclass(frozen=True)
class DemandForecast:
    horizon: int
    period_length: int
    values: tuple[int, ...]
    method: str

    def to_record(self) -> dict:
        return {
            "horizon": self.horizon,
            "period_length": self.period_length,
            "values": list(self.values),
            "method": self.method,
        }


def com_poll(
    subscription: AgentSubscription, events: Sequence[LedgerEvent]
) -> tuple[list[LedgerEvent], AgentSubscription]:
    """Deliver events past the watermark; returns (batch, advanced subscription)."""
    batch = [e for e in events if e.seq > subscription.last_processed_seq]
    if not batch:
        return [], subscription
    head = max(e.seq for e in batch)
    return batch, replace(subscription, last_processed_seq=head)


class ComAgent:
    """Bridges one ledger view to downstream agents (at-least-once)."""

    def __init__(self, name: str, ops: frozenset[str]) -> None:
        self.subscription = AgentSubscription(name)
        self.ops = ops

    def poll(self, events: Sequence[LedgerEvent]) -> list[LedgerEvent]:
        batch, self.subscription = com_poll(self.subscription, events)
        return [e for e in batch if e.op in self.ops]


def _alert(rule: str, severity: str, subjects: Iterable[str], evidence: Iterable[int]) -> FraudAlert:
    ev = tuple(sorted(set(evidence)))
    return FraudAlert(rule, severity, tuple(sorted(set(subjects))), ev, detected_at=max(ev))


def control_scan(events: Sequence[LedgerEvent], policy: ClaimPolicy) -> list[FraudAlert]:
    """Run all fraud rules over a journal prefix.

    Deterministic for a given prefix regardless of how the events were
    batched on the way in. Each property / customer / credit pattern is
    reported once, at the seq where it first completes.
    """
    ordered = sorted({e.seq: e for e in events}.values(), key=lambda e: e.seq)
    alerts: dict[tuple, FraudAlert] = {}

    def emit(alert: FraudAlert) -> None:
        alerts.setdefault(alert.identity, alert)

    # F1/F2: claimed credit versus the policy caps.
    claims_by_property: dict[str, list[LedgerEvent]] = {}
    properties_by_customer: dict[str, dict[str, int]] = {}  # property -> first claim seq
    flagged_properties: set[str] = set()
    flagged_customers: set[str] = set()

    # F3 groundwork: batches whose origin we have seen.
    known_batches: set[str] = set()
    mint_order: list[str] = []  # credit codes in first-mint order

    for e in ordered:
        p = e.payload
        if e.op == OP_CREDIT_CLAIM:
            prop, customer = p.get("property"), p.get("customer")
            if prop is None or customer is None:
                continue
            group = claims_by_property.setdefault(prop, [])
            group.append(e)
            if prop not in flagged_properties:
                total = sum(c.payload.get("credit_amount", 0) for c in group)
                if total > policy.max_credit_per_property:
                    emit(
                        _alert(
                            RULE_F1,
                            SEVERITY_CRITICAL,
                            {c.payload.get("customer", c.actor) for c in group},
                            [c.seq for c in group],
                        )
                    )
                    flagged_properties.add(prop)
            firsts = properties_by_customer.setdefault(customer, {})
            if prop not in firsts:
                firsts[prop] = e.seq
                if customer not in flagged_customers and len(firsts) > policy.max_properties_per_customer:
                    emit(_alert(RULE_F2, SEVERITY_WARNING, [customer], firsts.values()))
                    flagged_customers.add(customer)
        elif e.op == OP_OPERATOR_MINT:
            if p.get("batch_id"):
                known_batches.add(p["batch_id"])
            if p.get("credit_code") and p["credit_code"] not in mint_order:
                mint_order.append(p["credit_code"])
        elif e.op == OP_TRANSFER:
            if p.get("new_batch_id"):
                known_batches.add(p["new_batch_id"])
        elif e.op == OP_REDEEM:
            if p.get("batch_id") not in known_batches:
                # Redeem against a holding that never existed.
                emit(_alert(RULE_F3, SEVERITY_CRITICAL, [p.get("holder", e.actor)], [e.seq]))

    # F3/F4: per-credit lineage checks against the spreading trees.
    for credit_code in mint_order:
        tree, shortfalls = provenance.build_tree_report(ordered, credit_code)
        for s in shortfalls:
            if s.kind == provenance.KIND_REDEEM:
                emit(_alert(RULE_F3, SEVERITY_CRITICAL, [s.actor], [s.event_seq]))
        _scan_custody_cycles(tree, emit)

    return sorted(alerts.values(), key=lambda a: (a.detected_at, a.rule_id, a.subjects))


def _scan_custody_cycles(tree: provenance.CreditTree, emit) -> None:
    """F4: an actor receiving twice on one root-to-leaf custody path."""
    if not tree.nodes:
        return

    def walk(node: provenance.CreditTreeNode, receivers: dict[str, int]) -> None:
        added = False
        if node.kind != provenance.KIND_REDEEM:  # redeems burn, they do not hand custody on
            first = receivers.get(node.actor_to)
            if first is not None:
                emit(_alert(RULE_F4, SEVERITY_WARNING, [node.actor_to], [first, node.event_seq]))
            else:
                receivers[node.actor_to] = node.event_seq
                added = True
        for child in tree.children(node.node_id):
            walk(child, receivers)
        if added:
            del receivers[node.actor_to]

    walk(tree.root, {})


class ControlAgent:
    """Accumulates journal events (idempotently) and reports fraud alerts."""

    def __init__(self, policy: ClaimPolicy, name: str = "control") -> None:
        self.policy = policy
        self.subscription = AgentSubscription(name)
        self._events: dict[int, LedgerEvent] = {}

    def ingest(self, batch: Sequence[LedgerEvent]) -> None:
        for event in batch:
            self._events.setdefault(event.seq, event)

    def scan(self) -> list[FraudAlert]:
        return control_scan(list(self._events.values()), self.policy)


def normalize_alpha(alpha) -> Fraction:
    """Accept float/str/Fraction smoothing factors; exact and in (0, 1]."""
    try:
        value = Fraction(str(alpha)) if isinstance(alpha, float) else Fraction(alpha)
    except (ValueError, ZeroDivisionError, TypeError):
        raise BadAlpha(f"smoothing factor {alpha!r} is not a number") from None
    if not 0 < value <= 1:
        raise BadAlpha(f"smoothing factor must be in (0, 1], got {alpha}")
    return value


def forecast_demand(history: Sequence[int], horizon: int, alpha, period_length: int = 1) -> DemandForecast:
    """Simple exponential smoothing over per-period mint totals.

    level_0 = first observation; level_t = a*obs_t + (1-a)*level_{t-1};
    every forecast value is the final level, floored to a cent and clamped
    at zero. Exact rational arithmetic throughout.
    """
    if not history:
        raise EmptyHistory("no operator mints observed yet")
    if not isinstance(horizon, int) or isinstance(horizon, bool) or horizon < 1:
        raise BadHorizon(f"horizon must be a positive integer, got {horizon!r}")
    a = normalize_alpha(alpha)
    level = Fraction(history[0])
    for obs in history[1:]:
        level = a * obs + (1 - a) * level
    value = max(0, level.__floor__())
    return DemandForecast(
        horizon=horizon,
        period_length=period_length,
        values=tuple([value] * horizon),
        method=f"exponential_smoothing(alpha={a})",
    )


def demand_history(events: Sequence[LedgerEvent], period_length: int) -> list[int]:
    """Per-period operator-mint totals, first mint through journal head.

    Periods are floor(timestamp / period_length); gaps count as observed
    zero demand. Empty when nothing was minted yet.
    """
    mints = [(e.timestamp, e.payload["amount"]) for e in events if e.op == OP_OPERATOR_MINT]
    if not mints:
        return []
    head_ts = max(e.timestamp for e in events)
    first_period = mints[0][0] // period_length
    last_period = head_ts // period_length
    sums = [0] * (last_period - first_period + 1)
    for ts, amount in mints:
        sums[ts // period_length - first_period] += amount
    return sums


class PredictionAgent:
    """Forecasts operator-token demand from its own idempotent event copy."""

    def __init__(self, period_length: int, alpha, name: str = "prediction") -> None:
        self.period_length = period_length
        self.alpha = normalize_alpha(alpha)
        self.subscription = AgentSubscription(name)
        self._events: dict[int, LedgerEvent] = {}

    def ingest(self, batch: Sequence[LedgerEvent]) -> None:
        for event in batch:
            self._events.setdefault(event.seq, event)

    def history(self) -> list[int]:
        ordered = sorted(self._events.values(), key=lambda e: e.seq)
        return demand_history(ordered, self.period_length)

    def forecast(self, horizon: int) -> DemandForecast:
        return forecast_demand(self.history(), horizon, self.alpha, self.period_length)


class AgentHost:
    """Runs the whole agent layer against one ledger's event log.

    ``refresh`` polls each Com agent once and feeds downstream agents;
    it is safe to call from a timer and from request handlers alike.
    """

    def __init__(self, ledger, policy: ClaimPolicy, period_length: int, alpha) -> None:
        self.ledger = ledger
        self.com_investor = ComAgent("com-investors", INVESTOR_VIEW_OPS)
        self.com_operator = ComAgent("com-operators", OPERATOR_VIEW_OPS)
        self.control = ControlAgent(policy)
        self.prediction = PredictionAgent(period_length, alpha)
        self._lock = threading.Lock()

    def refresh(self) -> None:
        with self._lock:
            events = self.ledger.events
            self.com_investor.poll(events)  # investors view currently feeds no consumer
            batch = self.com_operator.poll(events)
            self.control.ingest(batch)
            self.prediction.ingest(batch)

    def alerts(self, since_seq: int = 0) -> list[FraudAlert]:
        self.refresh()
        with self._lock:
            return [a for a in self.control.scan() if a.detected_at > since_seq]

    def forecast(self, horizon: int) -> DemandForecast:
        self.refresh()
        with self._lock:
            return self.prediction.forecast(horizon)
