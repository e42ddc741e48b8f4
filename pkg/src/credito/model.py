"""Domain types shared across the ledger, the fiscal rules and the agents.

All monetary values are integer euro cents; nothing in ledger state is ever
a float. Amounts are capped at ``MAX_MONEY`` (signed 64-bit ceiling) so the
journal stays interoperable with other runtimes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import AmountOverflow, ZeroAmount

# Largest representable amount, in cents. Operations that would push any
# balance past this are rejected, never wrapped.
MAX_MONEY = 2**63 - 1

MAX_ACTOR_ID_LEN = 64


class Role(str, Enum):
    INVESTOR = "Investor"
    FINANCIAL_INSTITUTION = "FinancialInstitution"
    CUSTOMER = "Customer"
    GENERAL_CONTRACTOR = "GeneralContractor"
    SUB_CONTRACTOR = "SubContractor"
    SUPPLIER = "Supplier"
    DESIGN_ARCHITECT = "DesignArchitect"
    TAX_AUDITOR = "TaxAuditor"


# Actors allowed to hold operator tokens (transfer targets).
OPERATOR_GROUP = frozenset(
    {
        Role.GENERAL_CONTRACTOR,
        Role.SUB_CONTRACTOR,
        Role.SUPPLIER,
        Role.DESIGN_ARCHITECT,
        Role.TAX_AUDITOR,
        Role.FINANCIAL_INSTITUTION,
    }
)


def check_amount(amount: int, *, allow_zero: bool = False) -> int:
    """Validate an amount in cents; returns it unchanged."""
    if not isinstance(amount, int) or isinstance(amount, bool):
        raise ZeroAmount(f"amount must be an integer number of cents, got {amount!r}")
    if amount < 0:
        raise ZeroAmount(f"negative amount {amount}")
    if amount == 0 and not allow_zero:
        raise ZeroAmount("zero amount")
    if amount > MAX_MONEY:
        raise AmountOverflow(f"amount {amount} exceeds ceiling {MAX_MONEY}")
    return amount


@dataclass(frozen=True)
class InvestorToken:
    """Non-fungible deposit-backed unit on the investors ledger.

    ``link_id`` is set exactly when the token is frozen: it names the
    operator mint whose tokens this value collateralizes.
    """

    token_id: str
    owner: str
    face_value: int
    link_id: str | None = None  # None == unfrozen

    @property
    def frozen(self) -> bool:
        return self.link_id is not None


@dataclass(frozen=True)
class OperatorBatch:
    """Fungible operator-token quantity coupled to one tax credit."""

    batch_id: str
    link_id: str
    credit_code: str
    owner: str
    amount: int


@dataclass(frozen=True)
class TaxCredit:
    """Fiscal asset produced by an invoice-discounted renovation spend."""

    credit_code: str
    customer: str
    property_id: str
    contractor: str
    gross_spend: int
    credit_amount: int
    vintage_year: int
    instalments: tuple[int, ...]


@dataclass(frozen=True)
class LedgerEvent:
    """One journal entry; ledger state is a left-fold of these.

    ``payload`` holds the command arguments plus any ids the command
    derived (token/batch/link ids, computed credit amounts), so downstream
    consumers never have to re-simulate the id counters.
    """

    seq: int
    timestamp: int
    actor: str
    op: str
    payload: dict = field(default_factory=dict)


# Event kinds, in the order they were introduced.
OP_REGISTER = "Register"
OP_INVESTOR_MINT = "InvestorMint"
OP_OPERATOR_MINT = "OperatorMint"
OP_TRANSFER = "Transfer"
OP_REDEEM = "Redeem"
OP_FUND_CLOSE = "FundClose"
OP_CREDIT_CLAIM = "CreditClaim"

ALL_OPS = (
    OP_REGISTER,
    OP_INVESTOR_MINT,
    OP_OPERATOR_MINT,
    OP_TRANSFER,
    OP_REDEEM,
    OP_FUND_CLOSE,
    OP_CREDIT_CLAIM,
)
