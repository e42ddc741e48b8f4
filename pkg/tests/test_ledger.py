"""State-machine behavior: lifecycle examples, authorization, atomicity."""

from __future__ import annotations

import pytest

from credito.errors import (
    AmountOverflow,
    BadTimestamp,
    ClaimRejected,
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
    ZeroAmount,
)
from credito.ledger import Ledger
from credito.model import MAX_MONEY

from conftest import assert_coverage


class TestRegistration:
    def test_base_case(self):
        led = Ledger()
        result = led.register_actor("bank1", ["FinancialInstitution"])
        assert result == {"id": "bank1", "roles": ["FinancialInstitution"]}

    def test_duplicate_rejected(self):
        led = Ledger()
        led.register_actor("bank1", ["FinancialInstitution"])
        with pytest.raises(DuplicateActor):
            led.register_actor("bank1", ["Investor"])

    def test_multi_role_actor(self):
        led = Ledger()
        result = led.register_actor("gc1", ["GeneralContractor", "Supplier"])
        assert result["roles"] == ["GeneralContractor", "Supplier"]

    def test_empty_roles_rejected(self):
        led = Ledger()
        with pytest.raises(EmptyRoleSet):
            led.register_actor("x", [])

    def test_unknown_role_rejected(self):
        led = Ledger()
        with pytest.raises(EmptyRoleSet):
            led.register_actor("x", ["Wizard"])


class TestInvestorMint:
    def test_single_mint(self, ledger):
        result = ledger.mint_investor("bank1", "inv1", 100_000)
        assert result["token_id"] == "T1"
        assert ledger.get_unfrozen_investor_balance() == 100_000

    def test_role_gate(self, ledger):
        with pytest.raises(Unauthorized):
            ledger.mint_investor("gc1", "inv1", 100_000)

    def test_beneficiary_must_be_investor_or_fi(self, ledger):
        with pytest.raises(Unauthorized):
            ledger.mint_investor("bank1", "gc1", 100_000)
        ledger.mint_investor("bank1", "bank1", 1_000)  # FI may hold its own tokens

    def test_balances_are_additive(self, ledger):
        ledger.mint_investor("bank1", "inv1", 60_000)
        ledger.mint_investor("bank1", "inv2", 40_000)
        assert ledger.get_unfrozen_investor_balance() == 100_000

    def test_zero_amount(self, ledger):
        with pytest.raises(ZeroAmount):
            ledger.mint_investor("bank1", "inv1", 0)

    def test_near_ceiling_rejected_not_wrapped(self, ledger):
        ledger.mint_investor("bank1", "inv1", MAX_MONEY - 10)
        with pytest.raises(AmountOverflow):
            ledger.mint_investor("bank1", "inv2", 11)
        assert ledger.get_unfrozen_investor_balance() == MAX_MONEY - 10

    def test_empty_ledger_balance_is_zero(self):
        assert Ledger().get_unfrozen_investor_balance() == 0


class TestOperatorMint:
    def test_listing_trace(self, ledger):
        """Burn unfrozen, mint frozen under the link, mint the batch."""
        ledger.mint_investor("bank1", "inv1", 100_000)
        result = ledger.mint_operator("bank1", "gc1", 40_000, "C1")
        assert result == {
            "batch_id": "B1",
            "link_id": "L1",
            "credit_code": "C1",
            "owner": "gc1",
            "amount": 40_000,
        }
        assert ledger.get_unfrozen_investor_balance() == 60_000
        assert ledger.frozen_by_link() == {"L1": 40_000}
        assert_coverage(ledger)

    def test_insufficient_coverage(self, ledger):
        ledger.mint_investor("bank1", "inv1", 10_000)
        before = ledger.fingerprint()
        with pytest.raises(InsufficientCoverage):
            ledger.mint_operator("bank1", "gc1", 20_000, "C1")
        assert ledger.fingerprint() == before

    def test_zero_amount(self, ledger):
        ledger.mint_investor("bank1", "inv1", 10_000)
        with pytest.raises(ZeroAmount):
            ledger.mint_operator("bank1", "gc1", 0, "C1")

    def test_duplicate_credit_code(self, ledger):
        ledger.mint_investor("bank1", "inv1", 100_000)
        ledger.mint_operator("bank1", "gc1", 10_000, "C1")
        with pytest.raises(DuplicateCreditCode):
            ledger.mint_operator("bank1", "gc1", 10_000, "C1")

    def test_target_must_be_general_contractor(self, ledger):
        ledger.mint_investor("bank1", "inv1", 100_000)
        with pytest.raises(Unauthorized):
            ledger.mint_operator("bank1", "sup1", 10_000, "C1")

    def test_consumes_tokens_oldest_first(self, ledger):
        ledger.mint_investor("bank1", "inv1", 30_000)  # T1
        ledger.mint_investor("bank1", "inv2", 30_000)  # T2
        ledger.mint_operator("bank1", "gc1", 40_000, "C1")
        # T1 fully consumed, T2 split: inv2 keeps a 20k unfrozen remainder.
        unfrozen = [(t.owner, t.face_value) for t in ledger.tokens.values() if not t.frozen]
        frozen = [(t.owner, t.face_value) for t in ledger.tokens.values() if t.frozen]
        assert unfrozen == [("inv2", 20_000)]
        assert frozen == [("inv1", 30_000), ("inv2", 10_000)]
        assert_coverage(ledger)


class TestTransfer:
    @pytest.fixture
    def funded(self, ledger):
        ledger.mint_investor("bank1", "inv1", 100_000)
        ledger.mint_operator("bank1", "gc1", 40_000, "C1")
        return ledger

    def test_conservation_split(self, funded):
        result = funded.transfer_operator("gc1", "sup1", "B1", 15_000)
        assert result["new_batch_id"] == "B2"
        assert funded.batches["B1"].amount == 25_000
        assert funded.batches["B2"].owner == "sup1"
        assert funded.batches["B2"].credit_code == "C1"
        per_code = sum(b.amount for b in funded.batches.values() if b.credit_code == "C1")
        assert per_code == 40_000
        assert_coverage(funded)

    def test_full_move_removes_source(self, funded):
        funded.transfer_operator("gc1", "sup1", "B1", 40_000)
        assert "B1" not in funded.batches
        assert funded.batches["B2"].amount == 40_000

    def test_overdraw(self, funded):
        with pytest.raises(InsufficientBatch):
            funded.transfer_operator("gc1", "sup1", "B1", 40_001)

    def test_not_owner(self, funded):
        with pytest.raises(NotOwner):
            funded.transfer_operator("sup1", "arch1", "B1", 1_000)

    def test_target_roles(self, funded):
        with pytest.raises(Unauthorized):
            funded.transfer_operator("gc1", "inv1", "B1", 1_000)
        with pytest.raises(Unauthorized):
            funded.transfer_operator("gc1", "cust1", "B1", 1_000)
        funded.transfer_operator("gc1", "bank1", "B1", 1_000)  # FI may hold

    def test_zero_amount(self, funded):
        with pytest.raises(ZeroAmount):
            funded.transfer_operator("gc1", "sup1", "B1", 0)


class TestRedeem:
    @pytest.fixture
    def funded(self, ledger):
        ledger.mint_investor("bank1", "inv1", 100_000)
        ledger.mint_operator("bank1", "gc1", 40_000, "C1")
        return ledger

    def test_full_redeem_inverts_mint(self, funded):
        funded.redeem_operator("gc1", "bank1", "B1", 40_000)
        assert funded.frozen_by_link() == {}
        assert funded.get_unfrozen_investor_balance() == 100_000
        assert funded.batches == {}
        assert_coverage(funded)

    def test_partial_redeem(self, funded):
        funded.redeem_operator("gc1", "bank1", "B1", 15_000)
        assert funded.frozen_by_link() == {"L1": 25_000}
        assert funded.get_unfrozen_investor_balance() == 75_000
        assert funded.batches["B1"].amount == 25_000
        assert_coverage(funded)

    def test_not_owner(self, funded):
        with pytest.raises(NotOwner):
            funded.redeem_operator("sup1", "bank1", "B1", 1_000)

    def test_fi_role_required(self, funded):
        with pytest.raises(Unauthorized):
            funded.redeem_operator("gc1", "gc1", "B1", 1_000)

    def test_overdraw(self, funded):
        with pytest.raises(InsufficientBatch):
            funded.redeem_operator("gc1", "bank1", "B1", 40_001)

    def test_unfrozen_value_returns_to_original_owners(self, ledger):
        ledger.mint_investor("bank1", "inv1", 30_000)
        ledger.mint_investor("bank1", "inv2", 30_000)
        ledger.mint_operator("bank1", "gc1", 40_000, "C1")
        ledger.redeem_operator("gc1", "bank1", "B1", 40_000)
        balances = {}
        for t in ledger.tokens.values():
            assert not t.frozen
            balances[t.owner] = balances.get(t.owner, 0) + t.face_value
        assert balances == {"inv1": 30_000, "inv2": 30_000}


class TestFundClose:
    def test_proportional_rewards(self, ledger):
        ledger.mint_investor("bank1", "inv1", 60_000)
        ledger.mint_investor("bank1", "inv2", 40_000)
        result = ledger.close_fund("bank1", "0.10")
        assert result["report"] == {
            "inv1": {"principal": 60_000, "reward": 6_000},
            "inv2": {"principal": 40_000, "reward": 4_000},
        }

    def test_zero_rate(self, ledger):
        ledger.mint_investor("bank1", "inv1", 60_000)
        result = ledger.close_fund("bank1", "0")
        assert result["report"]["inv1"]["reward"] == 0

    def test_open_guarantees_block_close(self, ledger):
        ledger.mint_investor("bank1", "inv1", 100_000)
        ledger.mint_operator("bank1", "gc1", 40_000, "C1")
        with pytest.raises(OpenGuarantees):
            ledger.close_fund("bank1", "0.10")

    def test_reward_floors(self, ledger):
        ledger.mint_investor("bank1", "inv1", 99_999)
        result = ledger.close_fund("bank1", "1/3")
        assert result["report"]["inv1"]["reward"] == 33_333  # floor(99999/3)

    def test_mutations_rejected_after_close(self, ledger):
        ledger.mint_investor("bank1", "inv1", 1_000)
        ledger.close_fund("bank1")
        with pytest.raises(LedgerClosed):
            ledger.mint_investor("bank1", "inv1", 1_000)
        with pytest.raises(LedgerClosed):
            ledger.register_actor("new", ["Investor"])

    def test_unauthorized(self, ledger):
        with pytest.raises(Unauthorized):
            ledger.close_fund("gc1")


class TestClaims:
    def test_customer_pays_nothing_and_contractor_gets_credit(self, ledger):
        result = ledger.claim_invoice_discount("cust1", "prop1", "gc1", 10_000, 2024)
        assert result["credit_code"] == "C1"
        assert result["credit_amount"] == 11_000
        assert result["contractor"] == "gc1"
        # No investor/operator balance involvement at claim time.
        assert ledger.get_unfrozen_investor_balance() == 0
        assert ledger.batches == {}

    def test_cap_rejection_carries_rule(self, policy):
        led = Ledger(policy=policy)
        led.register_actor("bank1", ["FinancialInstitution"])
        led.register_actor("cust1", ["Customer"])
        led.register_actor("gc1", ["GeneralContractor"])
        led.claim_invoice_discount("cust1", "prop1", "gc1", 81_819, 2024)  # credit 90_000
        before = led.fingerprint()
        with pytest.raises(ClaimRejected) as exc:
            led.claim_invoice_discount("cust1", "prop1", "gc1", 18_182, 2024)  # credit 20_000
        assert exc.value.details["violations"][0]["rule"] == "AMOUNT_EXCEEDED"
        assert led.fingerprint() == before

    def test_validation_can_be_disabled(self, policy):
        led = Ledger(policy=policy, claim_validation_enabled=False)
        led.register_actor("cust1", ["Customer"])
        led.register_actor("gc1", ["GeneralContractor"])
        led.claim_invoice_discount("cust1", "prop1", "gc1", 81_819, 2024)
        led.claim_invoice_discount("cust1", "prop1", "gc1", 81_819, 2024)  # over cap, accepted
        assert len(led.credits) == 2

    def test_zero_invoice(self, ledger):
        with pytest.raises(ZeroAmount):
            ledger.claim_invoice_discount("cust1", "prop1", "gc1", 0, 2024)

    def test_role_gates(self, ledger):
        with pytest.raises(Unauthorized):
            ledger.claim_invoice_discount("inv1", "prop1", "gc1", 1_000, 2024)
        with pytest.raises(Unauthorized):
            ledger.claim_invoice_discount("cust1", "prop1", "sup1", 1_000, 2024)

    def test_generated_codes_skip_adhoc_mints(self, ledger):
        ledger.mint_investor("bank1", "inv1", 100_000)
        ledger.mint_operator("bank1", "gc1", 1_000, "C1")  # ad-hoc code occupies C1
        result = ledger.claim_invoice_discount("cust1", "prop1", "gc1", 1_000, 2024)
        assert result["credit_code"] == "C2"


class TestTimestamps:
    def test_defaults_are_monotone(self, ledger):
        ledger.mint_investor("bank1", "inv1", 1_000)
        assert [e.timestamp for e in ledger.events] == list(range(1, len(ledger.events) + 1))

    def test_caller_supplied_must_not_regress(self, ledger):
        ledger.mint_investor("bank1", "inv1", 1_000, timestamp=100)
        with pytest.raises(BadTimestamp):
            ledger.mint_investor("bank1", "inv1", 1_000, timestamp=99)
        ledger.mint_investor("bank1", "inv1", 1_000, timestamp=100)  # equal is fine


class TestDeterminism:
    def test_same_commands_same_fingerprint(self):
        def build() -> Ledger:
            led = Ledger()
            led.register_actor("bank1", ["FinancialInstitution"])
            led.register_actor("inv1", ["Investor"])
            led.register_actor("gc1", ["GeneralContractor"])
            led.register_actor("sup1", ["Supplier"])
            led.mint_investor("bank1", "inv1", 100_000)
            led.mint_operator("bank1", "gc1", 40_000, "C1")
            led.transfer_operator("gc1", "sup1", "B1", 15_000)
            led.redeem_operator("sup1", "bank1", "B2", 15_000)
            return led

        assert build().fingerprint() == build().fingerprint()

    def test_replay_matches_live(self, ledger):
        ledger.mint_investor("bank1", "inv1", 100_000)
        ledger.claim_invoice_discount("cust1", "prop1", "gc1", 10_000, 2024)
        ledger.mint_operator("bank1", "gc1", 11_000, "C1")
        ledger.transfer_operator("gc1", "sup1", "B1", 5_000)
        replayed = Ledger.replay_events(ledger.events)
        assert replayed.snapshot() == ledger.snapshot()

    def test_replay_rejects_gaps(self, ledger):
        ledger.mint_investor("bank1", "inv1", 1_000)
        events = [e for e in ledger.events if e.seq != 2]
        with pytest.raises(ReplayError):
            Ledger.replay_events(events)

    def test_replay_rejects_tampered_derived_ids(self, ledger):
        ledger.mint_investor("bank1", "inv1", 100_000)
        ledger.mint_operator("bank1", "gc1", 40_000, "C1")
        events = list(ledger.events)
        bad_payload = dict(events[-1].payload)
        bad_payload["batch_id"] = "B9"
        events[-1] = type(events[-1])(events[-1].seq, events[-1].timestamp, events[-1].actor, events[-1].op, bad_payload)
        with pytest.raises(ReplayError):
            Ledger.replay_events(events)
