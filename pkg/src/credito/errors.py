"""Error hierarchy shared by every layer.

Each error carries a stable machine-readable ``code`` so the gateway, the
CLI and scenario scripts can match on it without parsing messages.
"""

from __future__ import annotations

from typing import Any


class CreditoError(Exception):
    """Base class; ``code`` is the wire-level identifier."""

    code = "InternalError"

    def __init__(self, message: str = "", **details: Any) -> None:
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details

    def to_record(self) -> dict:
        rec: dict[str, Any] = {"code": self.code, "message": self.message}
        if self.details:
            rec["details"] = self.details
        return rec


# --- ledger command rejections -----------------------------------------

class BadIdentifier(CreditoError):
    code = "BadIdentifier"


class DuplicateActor(CreditoError):
    code = "DuplicateActor"


class EmptyRoleSet(CreditoError):
    code = "EmptyRoleSet"


class Unauthorized(CreditoError):
    code = "Unauthorized"


class ZeroAmount(CreditoError):
    code = "ZeroAmount"


class AmountOverflow(CreditoError):
    code = "AmountOverflow"


class BadTimestamp(CreditoError):
    code = "BadTimestamp"


class InsufficientCoverage(CreditoError):
    code = "InsufficientCoverage"


class DuplicateCreditCode(CreditoError):
    code = "DuplicateCreditCode"


class NotOwner(CreditoError):
    code = "NotOwner"


class InsufficientBatch(CreditoError):
    code = "InsufficientBatch"


class OpenGuarantees(CreditoError):
    code = "OpenGuarantees"


class LedgerClosed(CreditoError):
    code = "LedgerClosed"


class ClaimRejected(CreditoError):
    code = "ClaimRejected"


# --- lookups ------------------------------------------------------------

class UnknownCreditCode(CreditoError):
    code = "UnknownCreditCode"


class UnknownNode(CreditoError):
    code = "UnknownNode"


class UnknownActor(CreditoError):
    code = "UnknownActor"


# --- agents -------------------------------------------------------------

class EmptyHistory(CreditoError):
    code = "EmptyHistory"


class BadAlpha(CreditoError):
    code = "BadAlpha"


class BadHorizon(CreditoError):
    code = "BadHorizon"


# --- journal ------------------------------------------------------------

class JournalIntegrityError(CreditoError):
    """Any condition that makes a journal file untrustworthy."""

    code = "JournalIntegrity"


class CorruptChain(JournalIntegrityError):
    code = "CorruptChain"

    def __init__(self, message: str = "", seq: int = 0, **details: Any) -> None:
        super().__init__(message, seq=seq, **details)
        self.seq = seq


class TruncatedFile(JournalIntegrityError):
    code = "TruncatedFile"


class SequenceConflict(CreditoError):
    code = "SequenceConflict"


class StorageFailure(CreditoError):
    code = "StorageFailure"


class ReplayError(CreditoError):
    """A verified journal contains an event the state machine rejects."""

    code = "ReplayError"


# --- configuration and tooling ------------------------------------------

class ConfigError(CreditoError):
    code = "ConfigError"


class ScriptParseError(CreditoError):
    code = "ScriptParseError"


class ExpectationFailed(CreditoError):
    code = "ExpectationFailed"
