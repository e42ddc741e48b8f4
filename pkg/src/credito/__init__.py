"""credito: event-sourced tracking of renovation tax credits.

Two coupled ledgers (freezable investor deposits collateralizing fungible,
credit-coupled operator tokens), a hash-chained journal, provenance trees,
and a monitoring agent layer, behind an HTTP gateway and a CLI.
"""

from .agents import DemandForecast, FraudAlert, control_scan, forecast_demand
from .errors import CreditoError
from .fiscal import ClaimPolicy, compute_deduction, validate_claim
from .journal import Journal, load_ledger
from .ledger import Ledger
from .model import InvestorToken, LedgerEvent, OperatorBatch, Role, TaxCredit
from .provenance import CreditTree, build_tree, check_conservation, trace_to_root

__version__ = "0.1.0"

__all__ = [
    "ClaimPolicy",
    "CreditTree",
    "CreditoError",
    "DemandForecast",
    "FraudAlert",
    "InvestorToken",
    "Journal",
    "Ledger",
    "LedgerEvent",
    "OperatorBatch",
    "Role",
    "TaxCredit",
    "build_tree",
    "check_conservation",
    "compute_deduction",
    "control_scan",
    "forecast_demand",
    "load_ledger",
    "trace_to_root",
    "validate_claim",
    "__version__",
]
