"""Deterministic state machine for the two coupled token ledgers.

The investors ledger holds non-fungible, freezable deposit tokens; the
operators ledger holds fungible credit-coupled batches. Every mutation is a
command that is validated against current state, appended to the journal as
a single event, and then applied. State is always the left-fold of the
event sequence, so replaying a journal reproduces it exactly, counters
included.

Minting operator tokens follows the three-step contract of the on-chain
prototype: burn unfrozen investor tokens for the amount, re-mint the same
value frozen under a fresh link id, then mint the operator batch. Redeeming
runs the inverse. The coverage invariant (live operator value == frozen
investor value, per link and globally) is therefore maintained by
construction.

Concurrency: one re-entrant lock serializes all mutations (single-writer);
reads build plain snapshots under the same lock and hand them out freely.
"""

from __future__ import annotations

import hashlib
import json
import threading
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

from . import fiscal
from .errors import (
    AmountOverflow,
    BadIdentifier,
    BadTimestamp,
    ClaimRejected,
    ConfigError,
    DuplicateActor,
    DuplicateCreditCode,
    EmptyRoleSet,
    InsufficientBatch,
    InsufficientCoverage,
    LedgerClosed,
    NotOwner,
    OpenGuarantees,
    ReplayError,
    Unauthorized,
    UnknownActor,
    UnknownCreditCode,
)
from .fiscal import ClaimPolicy
from .model import (
    MAX_ACTOR_ID_LEN,
    MAX_MONEY,
    OP_CREDIT_CLAIM,
    OP_FUND_CLOSE,
    OP_INVESTOR_MINT,
    OP_OPERATOR_MINT,
    OP_REDEEM,
    OP_REGISTER,
    OP_TRANSFER,
    OPERATOR_GROUP,
    InvestorToken,
    LedgerEvent,
    OperatorBatch,
    Role,
    TaxCredit,
    check_amount,
)

DEFAULT_POLICY = ClaimPolicy(
    max_credit_per_property=100_000_00,  # 100k euro, demo default
    max_properties_per_customer=2,
)


def _check_id(value: Any, what: str) -> str:
    if not isinstance(value, str) or not value or len(value) > MAX_ACTOR_ID_LEN:
        raise BadIdentifier(f"{what} must be a nonempty string of at most {MAX_ACTOR_ID_LEN} chars")
    return value


class Ledger:
    """Both DAOs' state plus the event log that produced it."""

    def __init__(
        self,
        policy: ClaimPolicy = DEFAULT_POLICY,
        claim_validation_enabled: bool = True,
        journal=None,
    ) -> None:
        self.policy = policy
        self.claim_validation_enabled = claim_validation_enabled
        self.journal = journal

        self.actors: dict[str, frozenset[Role]] = {}
        self.tokens: dict[str, InvestorToken] = {}  # insertion order == mint order
        self.batches: dict[str, OperatorBatch] = {}
        self.credits: dict[str, TaxCredit] = {}
        self.minted_credit_codes: set[str] = set()
        self.closed = False
        self.close_report: dict[str, dict[str, int]] | None = None

        self.events: list[LedgerEvent] = []
        self.head_seq = 0
        self.last_timestamp = 0

        self._next_token = 1
        self._next_batch = 1
        self._next_link = 1
        self._next_credit = 1

        # Replay folds recorded history: integrity checks stay on, but the
        # configurable claim-cap gate must not re-judge old submissions.
        self._replaying = False

        self._lock = threading.RLock()

    # ------------------------------------------------------------------
    # commands
    # ------------------------------------------------------------------

    def register_actor(self, actor_id: str, roles: Iterable[str | Role], timestamp: int | None = None) -> dict:
        payload = {
            "id": actor_id,
            "roles": [r.value if isinstance(r, Role) else str(r) for r in roles],
        }
        return self._execute(OP_REGISTER, actor_id, payload, timestamp)

    def mint_investor(self, fi: str, beneficiary: str, amount: int, timestamp: int | None = None) -> dict:
        payload = {"fi": fi, "beneficiary": beneficiary, "amount": amount}
        return self._execute(OP_INVESTOR_MINT, fi, payload, timestamp)

    def mint_operator(self, fi: str, to: str, amount: int, credit_code: str, timestamp: int | None = None) -> dict:
        payload = {"fi": fi, "to": to, "amount": amount, "credit_code": credit_code}
        return self._execute(OP_OPERATOR_MINT, fi, payload, timestamp)

    def transfer_operator(self, from_actor: str, to: str, batch_id: str, amount: int, timestamp: int | None = None) -> dict:
        payload = {"from": from_actor, "to": to, "batch_id": batch_id, "amount": amount}
        return self._execute(OP_TRANSFER, from_actor, payload, timestamp)

    def redeem_operator(self, holder: str, fi: str, batch_id: str, amount: int, timestamp: int | None = None) -> dict:
        payload = {"holder": holder, "fi": fi, "batch_id": batch_id, "amount": amount}
        return self._execute(OP_REDEEM, holder, payload, timestamp)

    def claim_invoice_discount(
        self,
        customer: str,
        property_id: str,
        contractor: str,
        invoice_total: int,
        year: int,
        timestamp: int | None = None,
    ) -> dict:
        payload = {
            "customer": customer,
            "property": property_id,
            "contractor": contractor,
            "invoice_total": invoice_total,
            "year": year,
        }
        return self._execute(OP_CREDIT_CLAIM, contractor, payload, timestamp)

    def close_fund(self, fi: str, reward_rate: str = "0", timestamp: int | None = None) -> dict:
        payload = {"fi": fi, "reward_rate": str(reward_rate)}
        return self._execute(OP_FUND_CLOSE, fi, payload, timestamp)

    def inject_event(self, op: str, actor: str, payload: dict, timestamp: int | None = None) -> LedgerEvent:
        """Append a raw event without validating or applying it.

        Exists so fraud scenarios can seed journal content that a healthy
        command path would refuse (the control agent's whole job is to
        audit such streams). State and counters are left untouched.
        """
        with self._lock:
            ts = self._resolve_timestamp(timestamp)
            event = LedgerEvent(self.head_seq + 1, ts, actor, op, dict(payload))
            if self.journal is not None:
                self.journal.append(event)
            self.events.append(event)
            self.head_seq = event.seq
            self.last_timestamp = ts
            return event

    # ------------------------------------------------------------------
    # replay
    # ------------------------------------------------------------------

    @classmethod
    def replay_events(
        cls,
        events: Sequence[LedgerEvent],
        policy: ClaimPolicy = DEFAULT_POLICY,
        claim_validation_enabled: bool = True,
    ) -> "Ledger":
        """Fold a verified event sequence into a fresh ledger."""
        ledger = cls(policy=policy, claim_validation_enabled=claim_validation_enabled)
        for event in events:
            ledger.apply_event(event)
        return ledger

    def apply_event(self, event: LedgerEvent) -> dict:
        """Validate and apply one replayed event; raises ReplayError on any mismatch."""
        with self._lock:
            if event.seq != self.head_seq + 1:
                raise ReplayError(f"event seq {event.seq}, expected {self.head_seq + 1}", seq=event.seq)
            self._replaying = True
            try:
                return self._execute(event.op, event.actor, dict(event.payload), event.timestamp)
            except ReplayError:
                raise
            except Exception as exc:  # noqa: BLE001 - rewrap with position info
                raise ReplayError(f"event {event.seq} ({event.op}) rejected: {exc}", seq=event.seq) from exc
            finally:
                self._replaying = False

    # ------------------------------------------------------------------
    # queries
    # ------------------------------------------------------------------

    def get_unfrozen_investor_balance(self) -> int:
        with self._lock:
            return sum(t.face_value for t in self.tokens.values() if not t.frozen)

    def frozen_by_link(self) -> dict[str, int]:
        with self._lock:
            totals: dict[str, int] = {}
            for t in self.tokens.values():
                if t.link_id is not None:
                    totals[t.link_id] = totals.get(t.link_id, 0) + t.face_value
            return totals

    def operator_by_link(self) -> dict[str, int]:
        with self._lock:
            totals: dict[str, int] = {}
            for b in self.batches.values():
                totals[b.link_id] = totals.get(b.link_id, 0) + b.amount
            return totals

    def actor_balances(self, actor_id: str) -> dict:
        with self._lock:
            if actor_id not in self.actors:
                raise UnknownActor(f"actor {actor_id} is not registered")
            unfrozen = sum(t.face_value for t in self.tokens.values() if t.owner == actor_id and not t.frozen)
            frozen = sum(t.face_value for t in self.tokens.values() if t.owner == actor_id and t.frozen)
            operator: dict[str, int] = {}
            for b in self.batches.values():
                if b.owner == actor_id:
                    operator[b.credit_code] = operator.get(b.credit_code, 0) + b.amount
            return {
                "actor": actor_id,
                "roles": sorted(r.value for r in self.actors[actor_id]),
                "investor_unfrozen": unfrozen,
                "investor_frozen": frozen,
                "operator": dict(sorted(operator.items())),
                "operator_total": sum(operator.values()),
            }

    def get_credit(self, credit_code: str) -> TaxCredit:
        with self._lock:
            credit = self.credits.get(credit_code)
            if credit is None:
                raise UnknownCreditCode(f"no tax credit recorded under {credit_code}")
            return credit

    def snapshot(self) -> dict:
        """Full state as plain data, for field-by-field comparison."""
        with self._lock:
            return {
                "actors": {a: sorted(r.value for r in roles) for a, roles in self.actors.items()},
                "investor_tokens": {
                    t.token_id: {"owner": t.owner, "face_value": t.face_value, "link_id": t.link_id}
                    for t in self.tokens.values()
                },
                "operator_batches": {
                    b.batch_id: {
                        "link_id": b.link_id,
                        "credit_code": b.credit_code,
                        "owner": b.owner,
                        "amount": b.amount,
                    }
                    for b in self.batches.values()
                },
                "credits": {c.credit_code: _credit_record(c) for c in self.credits.values()},
                "minted_credit_codes": sorted(self.minted_credit_codes),
                "counters": {
                    "token": self._next_token,
                    "batch": self._next_batch,
                    "link": self._next_link,
                    "credit": self._next_credit,
                },
                "closed": self.closed,
                "close_report": self.close_report,
                "head_seq": self.head_seq,
                "last_timestamp": self.last_timestamp,
            }

    def fingerprint(self) -> str:
        """Digest of the canonical snapshot; equal iff states are identical."""
        blob = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def events_since(self, seq: int) -> list[LedgerEvent]:
        with self._lock:
            return [e for e in self.events if e.seq > seq]

    # ------------------------------------------------------------------
    # command pipeline
    # ------------------------------------------------------------------

    def _execute(self, op: str, actor: str, payload: dict, timestamp: int | None) -> dict:
        with self._lock:
            if self.closed:
                raise LedgerClosed("fund is closed; the journal accepts no further events")
            validator = _VALIDATORS.get(op)
            if validator is None:
                raise ReplayError(f"unknown event kind {op!r}")
            ts = self._resolve_timestamp(timestamp)
            enriched, plan = validator(self, payload)
            event = LedgerEvent(self.head_seq + 1, ts, actor, op, enriched)
            if self.journal is not None:
                self.journal.append(event)
            result = _APPLIERS[op](self, event, plan)
            self.events.append(event)
            self.head_seq = event.seq
            self.last_timestamp = ts
            return result

    def _resolve_timestamp(self, timestamp: int | None) -> int:
        if timestamp is None:
            return self.last_timestamp + 1
        if not isinstance(timestamp, int) or isinstance(timestamp, bool) or timestamp < 0:
            raise BadTimestamp(f"timestamp must be a non-negative integer, got {timestamp!r}")
        if timestamp < self.last_timestamp:
            raise BadTimestamp(f"timestamp {timestamp} is behind journal head {self.last_timestamp}")
        return timestamp

    # helpers used by validators -------------------------------------------------

    def _require_role(self, actor_id: str, role: Role, what: str) -> None:
        roles = self.actors.get(actor_id)
        if roles is None or role not in roles:
            raise Unauthorized(f"{what}: {actor_id} lacks role {role.value}")

    def _require_any_role(self, actor_id: str, allowed: frozenset[Role], what: str) -> None:
        roles = self.actors.get(actor_id)
        if roles is None or not (roles & allowed):
            raise Unauthorized(f"{what}: {actor_id} lacks any of {sorted(r.value for r in allowed)}")

    def _select_tokens(self, amount: int, link_id: str | None) -> tuple[list[tuple[str, str, int]], tuple[str, int] | None]:
        """Pick tokens (oldest first) in the given freeze state totaling ``amount``.

        Returns (consumed [(token_id, owner, used)], remainder (owner, left) or None).
        The caller guarantees enough value exists.
        """
        consumed: list[tuple[str, str, int]] = []
        remainder: tuple[str, int] | None = None
        need = amount
        for token in self.tokens.values():
            if token.link_id != link_id:
                continue
            if need <= 0:
                break
            used = min(token.face_value, need)
            consumed.append((token.token_id, token.owner, used))
            if used < token.face_value:
                remainder = (token.owner, token.face_value - used)
            need -= used
        if need > 0:  # callers check balances first; this is a hard internal guard
            raise InsufficientCoverage(f"internal: selection short by {need} cents")
        return consumed, remainder


def _credit_record(c: TaxCredit) -> dict:
    return {
        "credit_code": c.credit_code,
        "customer": c.customer,
        "property": c.property_id,
        "contractor": c.contractor,
        "gross_spend": c.gross_spend,
        "credit_amount": c.credit_amount,
        "vintage_year": c.vintage_year,
        "instalments": list(c.instalments),
    }


def _merge_derived(payload: dict, derived: dict) -> dict:
    """Fill derived fields into the payload; on replay they must already match."""
    for key, value in derived.items():
        if key in payload and payload[key] != value:
            raise ReplayError(f"derived field {key}={payload[key]!r} does not match state ({value!r})")
    merged = dict(payload)
    merged.update(derived)
    return merged


# ---------------------------------------------------------------------------
# validators: pure checks + plan building; they never mutate ledger state
# ---------------------------------------------------------------------------

def _validate_register(ledger: Ledger, p: dict) -> tuple[dict, dict]:
    actor_id = _check_id(p.get("id"), "actor id")
    roles_raw = p.get("roles") or []
    if not roles_raw:
        raise EmptyRoleSet("an actor needs at least one role")
    try:
        roles = frozenset(Role(r) for r in roles_raw)
    except ValueError as exc:
        raise EmptyRoleSet(f"unknown role: {exc}") from None
    if actor_id in ledger.actors:
        raise DuplicateActor(f"actor {actor_id} already registered")
    payload = dict(p)
    payload["roles"] = sorted(r.value for r in roles)  # normalized, idempotent on replay
    return payload, {"actor_id": actor_id, "roles": roles}


def _apply_register(ledger: Ledger, event: LedgerEvent, plan: dict) -> dict:
    ledger.actors[plan["actor_id"]] = plan["roles"]
    return {"id": plan["actor_id"], "roles": sorted(r.value for r in plan["roles"])}


def _validate_investor_mint(ledger: Ledger, p: dict) -> tuple[dict, dict]:
    fi = _check_id(p.get("fi"), "fi")
    beneficiary = _check_id(p.get("beneficiary"), "beneficiary")
    amount = check_amount(p.get("amount"))
    ledger._require_role(fi, Role.FINANCIAL_INSTITUTION, "mint investor tokens")
    ledger._require_any_role(
        beneficiary,
        frozenset({Role.INVESTOR, Role.FINANCIAL_INSTITUTION}),
        "receive investor tokens",
    )
    total_face = sum(t.face_value for t in ledger.tokens.values())
    if total_face + amount > MAX_MONEY:
        raise AmountOverflow("mint would push total investor value past the ceiling")
    token_id = f"T{ledger._next_token}"
    payload = _merge_derived(p, {"token_id": token_id})
    return payload, {"token_id": token_id, "owner": beneficiary, "amount": amount}


def _apply_investor_mint(ledger: Ledger, event: LedgerEvent, plan: dict) -> dict:
    token = InvestorToken(plan["token_id"], plan["owner"], plan["amount"])
    ledger.tokens[token.token_id] = token
    ledger._next_token += 1
    return {"token_id": token.token_id, "owner": token.owner, "amount": token.face_value}


def _validate_operator_mint(ledger: Ledger, p: dict) -> tuple[dict, dict]:
    fi = _check_id(p.get("fi"), "fi")
    to = _check_id(p.get("to"), "to")
    credit_code = _check_id(p.get("credit_code"), "credit_code")
    amount = check_amount(p.get("amount"))
    ledger._require_role(fi, Role.FINANCIAL_INSTITUTION, "mint operator tokens")
    ledger._require_role(to, Role.GENERAL_CONTRACTOR, "receive an operator mint")
    if credit_code in ledger.minted_credit_codes:
        raise DuplicateCreditCode(f"credit {credit_code} already has an operator mint")
    unfrozen = ledger.get_unfrozen_investor_balance()
    if unfrozen < amount:
        raise InsufficientCoverage(
            f"unfrozen investor balance {unfrozen} cannot back a mint of {amount}"
        )
    consumed, remainder = ledger._select_tokens(amount, link_id=None)
    link_id = f"L{ledger._next_link}"
    batch_id = f"B{ledger._next_batch}"
    payload = _merge_derived(p, {"batch_id": batch_id, "link_id": link_id})
    plan = {
        "fi": fi,
        "to": to,
        "amount": amount,
        "credit_code": credit_code,
        "consumed": consumed,
        "remainder": remainder,
        "link_id": link_id,
        "batch_id": batch_id,
    }
    return payload, plan


def _apply_operator_mint(ledger: Ledger, event: LedgerEvent, plan: dict) -> dict:
    # Step 1: burn the unfrozen tokens backing the mint.
    for token_id, _owner, _used in plan["consumed"]:
        del ledger.tokens[token_id]
    ledger._next_link += 1
    ledger._next_batch += 1
    # Step 2: re-mint the split remainder (still unfrozen), then the frozen
    # value carrying the link id, preserving each original owner.
    if plan["remainder"] is not None:
        owner, left = plan["remainder"]
        tid = f"T{ledger._next_token}"
        ledger._next_token += 1
        ledger.tokens[tid] = InvestorToken(tid, owner, left)
    for _token_id, owner, used in plan["consumed"]:
        tid = f"T{ledger._next_token}"
        ledger._next_token += 1
        ledger.tokens[tid] = InvestorToken(tid, owner, used, link_id=plan["link_id"])
    # Step 3: mint the operator batch itself.
    batch = OperatorBatch(plan["batch_id"], plan["link_id"], plan["credit_code"], plan["to"], plan["amount"])
    ledger.batches[batch.batch_id] = batch
    ledger.minted_credit_codes.add(plan["credit_code"])
    return {
        "batch_id": batch.batch_id,
        "link_id": batch.link_id,
        "credit_code": batch.credit_code,
        "owner": batch.owner,
        "amount": batch.amount,
    }


def _validate_transfer(ledger: Ledger, p: dict) -> tuple[dict, dict]:
    from_actor = _check_id(p.get("from"), "from")
    to = _check_id(p.get("to"), "to")
    batch_id = _check_id(p.get("batch_id"), "batch_id")
    amount = check_amount(p.get("amount"))
    batch = ledger.batches.get(batch_id)
    if batch is None or batch.owner != from_actor:
        raise NotOwner(f"{from_actor} does not own batch {batch_id}")
    if amount > batch.amount:
        raise InsufficientBatch(f"batch {batch_id} holds {batch.amount}, cannot move {amount}")
    ledger._require_any_role(to, OPERATOR_GROUP, "receive operator tokens")
    new_batch_id = f"B{ledger._next_batch}"
    payload = _merge_derived(p, {"new_batch_id": new_batch_id})
    plan = {"batch": batch, "to": to, "amount": amount, "new_batch_id": new_batch_id}
    return payload, plan


def _apply_transfer(ledger: Ledger, event: LedgerEvent, plan: dict) -> dict:
    batch: OperatorBatch = plan["batch"]
    amount: int = plan["amount"]
    ledger._next_batch += 1
    if batch.amount == amount:
        del ledger.batches[batch.batch_id]
    else:
        ledger.batches[batch.batch_id] = OperatorBatch(
            batch.batch_id, batch.link_id, batch.credit_code, batch.owner, batch.amount - amount
        )
    new_batch = OperatorBatch(plan["new_batch_id"], batch.link_id, batch.credit_code, plan["to"], amount)
    ledger.batches[new_batch.batch_id] = new_batch
    return {
        "new_batch_id": new_batch.batch_id,
        "link_id": new_batch.link_id,
        "credit_code": new_batch.credit_code,
        "owner": new_batch.owner,
        "amount": new_batch.amount,
    }


def _validate_redeem(ledger: Ledger, p: dict) -> tuple[dict, dict]:
    holder = _check_id(p.get("holder"), "holder")
    fi = _check_id(p.get("fi"), "fi")
    batch_id = _check_id(p.get("batch_id"), "batch_id")
    amount = check_amount(p.get("amount"))
    batch = ledger.batches.get(batch_id)
    if batch is None or batch.owner != holder:
        raise NotOwner(f"{holder} does not own batch {batch_id}")
    ledger._require_role(fi, Role.FINANCIAL_INSTITUTION, "redeem operator tokens")
    if amount > batch.amount:
        raise InsufficientBatch(f"batch {batch_id} holds {batch.amount}, cannot redeem {amount}")
    consumed, remainder = ledger._select_tokens(amount, link_id=batch.link_id)
    plan = {"batch": batch, "amount": amount, "consumed": consumed, "remainder": remainder}
    return dict(p), plan


def _apply_redeem(ledger: Ledger, event: LedgerEvent, plan: dict) -> dict:
    batch: OperatorBatch = plan["batch"]
    amount: int = plan["amount"]
    # Burn the operator value.
    if batch.amount == amount:
        del ledger.batches[batch.batch_id]
    else:
        ledger.batches[batch.batch_id] = OperatorBatch(
            batch.batch_id, batch.link_id, batch.credit_code, batch.owner, batch.amount - amount
        )
    # Release the guarantee: frozen value under the link converts back to
    # unfrozen, original owners preserved; one frozen token may split.
    for token_id, _owner, _used in plan["consumed"]:
        del ledger.tokens[token_id]
    if plan["remainder"] is not None:
        owner, left = plan["remainder"]
        tid = f"T{ledger._next_token}"
        ledger._next_token += 1
        ledger.tokens[tid] = InvestorToken(tid, owner, left, link_id=batch.link_id)
    for _token_id, owner, used in plan["consumed"]:
        tid = f"T{ledger._next_token}"
        ledger._next_token += 1
        ledger.tokens[tid] = InvestorToken(tid, owner, used)
    return {"redeemed": amount, "link_id": batch.link_id, "credit_code": batch.credit_code}


def _validate_credit_claim(ledger: Ledger, p: dict) -> tuple[dict, dict]:
    customer = _check_id(p.get("customer"), "customer")
    property_id = _check_id(p.get("property"), "property")
    contractor = _check_id(p.get("contractor"), "contractor")
    invoice_total = check_amount(p.get("invoice_total"))
    year = p.get("year")
    if not isinstance(year, int) or isinstance(year, bool):
        raise BadIdentifier("year must be an integer")
    ledger._require_role(customer, Role.CUSTOMER, "claim an invoice discount")
    ledger._require_role(contractor, Role.GENERAL_CONTRACTOR, "raise a discounted invoice")
    credit_amount, instalments = fiscal.compute_deduction(invoice_total)
    if ledger.claim_validation_enabled and not ledger._replaying:
        violations = fiscal.validate_claim(
            ledger.credits.values(), customer, property_id, credit_amount, ledger.policy
        )
        if violations:
            raise ClaimRejected(
                "; ".join(v.message for v in violations),
                violations=[v.to_record() for v in violations],
            )
    credit_code = _next_free_credit_code(ledger)
    payload = _merge_derived(
        p,
        {"credit_code": credit_code, "credit_amount": credit_amount, "instalments": instalments},
    )
    plan = {
        "credit": TaxCredit(
            credit_code=credit_code,
            customer=customer,
            property_id=property_id,
            contractor=contractor,
            gross_spend=invoice_total,
            credit_amount=credit_amount,
            vintage_year=year,
            instalments=tuple(instalments),
        )
    }
    return payload, plan


def _next_free_credit_code(ledger: Ledger) -> str:
    # Skip codes already claimed or already used by an ad-hoc operator mint.
    n = ledger._next_credit
    while f"C{n}" in ledger.credits or f"C{n}" in ledger.minted_credit_codes:
        n += 1
    return f"C{n}"


def _apply_credit_claim(ledger: Ledger, event: LedgerEvent, plan: dict) -> dict:
    credit: TaxCredit = plan["credit"]
    ledger.credits[credit.credit_code] = credit
    ledger._next_credit = int(credit.credit_code[1:]) + 1
    return _credit_record(credit)


def _validate_fund_close(ledger: Ledger, p: dict) -> tuple[dict, dict]:
    fi = _check_id(p.get("fi"), "fi")
    ledger._require_role(fi, Role.FINANCIAL_INSTITUTION, "close the fund")
    if ledger.batches:
        raise OpenGuarantees(
            f"{len(ledger.batches)} operator batch(es) still live; redeem them before closing"
        )
    try:
        rate = Fraction(p.get("reward_rate", "0"))
    except (ValueError, ZeroDivisionError, TypeError):
        raise ConfigError(f"reward_rate {p.get('reward_rate')!r} is not a valid ratio") from None
    if rate < 0:
        raise ConfigError("reward_rate must be >= 0")
    principals: dict[str, int] = {}
    for token in ledger.tokens.values():
        principals[token.owner] = principals.get(token.owner, 0) + token.face_value
    report = {
        owner: {"principal": principal, "reward": int(principal * rate)}  # Fraction floor
        for owner, principal in sorted(principals.items())
    }
    payload = _merge_derived(p, {"report": report})
    return payload, {"report": report}


def _apply_fund_close(ledger: Ledger, event: LedgerEvent, plan: dict) -> dict:
    ledger.closed = True
    ledger.close_report = plan["report"]
    return {"report": plan["report"], "reward_rate": event.payload["reward_rate"]}


_VALIDATORS: dict[str, Callable[[Ledger, dict], tuple[dict, dict]]] = {
    OP_REGISTER: _validate_register,
    OP_INVESTOR_MINT: _validate_investor_mint,
    OP_OPERATOR_MINT: _validate_operator_mint,
    OP_TRANSFER: _validate_transfer,
    OP_REDEEM: _validate_redeem,
    OP_CREDIT_CLAIM: _validate_credit_claim,
    OP_FUND_CLOSE: _validate_fund_close,
}

_APPLIERS: dict[str, Callable[[Ledger, LedgerEvent, dict], dict]] = {
    OP_REGISTER: _apply_register,
    OP_INVESTOR_MINT: _apply_investor_mint,
    OP_OPERATOR_MINT: _apply_operator_mint,
    OP_TRANSFER: _apply_transfer,
    OP_REDEEM: _apply_redeem,
    OP_CREDIT_CLAIM: _apply_credit_claim,
    OP_FUND_CLOSE: _apply_fund_close,
}
