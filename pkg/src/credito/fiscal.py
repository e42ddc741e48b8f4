"""Fiscal rules for the 110% renovation incentive.

Every 100 cents spent on qualifying works matures 110 cents of tax credit,
spread over five equal annual instalments. All arithmetic is exact integer
work at cent granularity: the credit is floored, and the cent remainder of
the split goes to the earliest instalments, so the taxpayer is never
over-credited and the parts always sum back to the credit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import ConfigError
from .model import TaxCredit, check_amount

DEDUCTION_NUM = 110
DEDUCTION_DEN = 100
INSTALMENT_COUNT = 5

RULE_AMOUNT_EXCEEDED = "AMOUNT_EXCEEDED"
RULE_PROPERTY_COUNT_EXCEEDED = "PROPERTY_COUNT_EXCEEDED"


@dataclass(frozen=True)
class ClaimPolicy:
    """Caps applied when validating a new credit claim.

    The statute motivates the checks but gives no ceilings, so both values
    come from service configuration.
    """

    max_credit_per_property: int
    max_properties_per_customer: int

    def __post_init__(self) -> None:
        if self.max_credit_per_property <= 0:
            raise ConfigError("max_credit_per_property must be > 0")
        if self.max_properties_per_customer <= 0:
            raise ConfigError("max_properties_per_customer must be > 0")


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str

    def to_record(self) -> dict:
        return {"rule": self.rule, "message": self.message}


def compute_deduction(gross_spend: int) -> tuple[int, list[int]]:
    """Return ``(credit_amount, instalments)`` for a gross spend in cents.

    credit = floor(gross * 110 / 100); instalments are five near-equal
    parts, largest first, differing by at most one cent.
    """
    check_amount(gross_spend, allow_zero=True)
    credit = gross_spend * DEDUCTION_NUM // DEDUCTION_DEN
    base, rem = divmod(credit, INSTALMENT_COUNT)
    instalments = [base + 1 if i < rem else base for i in range(INSTALMENT_COUNT)]
    return credit, instalments


def validate_claim(
    existing_credits: Iterable[TaxCredit],
    customer: str,
    property_id: str,
    proposed_credit: int,
    policy: ClaimPolicy,
) -> list[Violation]:
    """Check a proposed credit against the policy caps.

    Pure function over a snapshot of already-recorded credits; returns the
    (possibly empty) list of violations instead of raising.
    """
    property_total = 0
    customer_properties: set[str] = set()
    for credit in existing_credits:
        if credit.property_id == property_id:
            property_total += credit.credit_amount
        if credit.customer == customer:
            customer_properties.add(credit.property_id)

    violations: list[Violation] = []
    if property_total + proposed_credit > policy.max_credit_per_property:
        violations.append(
            Violation(
                RULE_AMOUNT_EXCEEDED,
                f"property {property_id} would carry {property_total + proposed_credit} cents "
                f"of credit, cap is {policy.max_credit_per_property}",
            )
        )
    if property_id not in customer_properties:
        if len(customer_properties) + 1 > policy.max_properties_per_customer:
            violations.append(
                Violation(
                    RULE_PROPERTY_COUNT_EXCEEDED,
                    f"customer {customer} would claim on {len(customer_properties) + 1} properties, "
                    f"cap is {policy.max_properties_per_customer}",
                )
            )
    return violations
