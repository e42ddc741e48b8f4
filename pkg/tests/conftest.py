from __future__ import annotations

import pytest

from credito.fiscal import ClaimPolicy
from credito.ledger import Ledger


@pytest.fixture
def policy() -> ClaimPolicy:
    return ClaimPolicy(max_credit_per_property=100_000, max_properties_per_customer=2)


@pytest.fixture
def ledger() -> Ledger:
    """Fresh ledger with the cast of actors most tests need."""
    led = Ledger()
    led.register_actor("bank1", ["FinancialInstitution"])
    led.register_actor("inv1", ["Investor"])
    led.register_actor("inv2", ["Investor"])
    led.register_actor("cust1", ["Customer"])
    led.register_actor("gc1", ["GeneralContractor"])
    led.register_actor("sup1", ["Supplier"])
    led.register_actor("arch1", ["DesignArchitect"])
    return led


def assert_coverage(led: Ledger) -> None:
    """The core guarantee: frozen investor value == live operator value, per link and globally."""
    frozen = led.frozen_by_link()
    live = led.operator_by_link()
    assert frozen == live, f"per-link coverage broken: frozen={frozen} live={live}"
    assert sum(frozen.values()) == sum(live.values())
