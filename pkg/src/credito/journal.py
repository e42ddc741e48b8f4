"""Append-only, hash-chained persistence for ledger events.

File layout: one header line, then one canonical record per line.

    {"format":"credito-journal","version":1,"hash_alg":"sha256"}
    {"actor":...,"hash":...,"op":...,"payload":{...},"prev_hash":...,"seq":"1","timestamp":"1"}

Canonical records sort keys, carry no insignificant whitespace, and write
every integer leaf as a decimal string so digests are identical no matter
which runtime produced them. ``hash`` is the digest of the record without
its own hash field; ``prev_hash`` chains back to a fixed genesis digest.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Sequence

from .errors import (
    CorruptChain,
    SequenceConflict,
    StorageFailure,
    TruncatedFile,
)
from .model import OP_FUND_CLOSE, LedgerEvent

FORMAT_NAME = "credito-journal"
FORMAT_VERSION = 1
HASH_ALG = "sha256"

GENESIS_DIGEST = hashlib.sha256(b"credito-journal:genesis:v1").hexdigest()

HEADER = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "hash_alg": HASH_ALG}
# Header keeps its documented field order; only records are key-sorted.
HEADER_LINE = json.dumps(HEADER, separators=(",", ":"))

_RECORD_KEYS = {"seq", "timestamp", "actor", "op", "payload", "prev_hash", "hash"}

# Payload fields that carry integers on the wire (encoded as decimal strings).
_INT_KEYS = {"amount", "invoice_total", "year", "credit_amount", "gross_spend", "principal", "reward", "vintage_year"}
_INT_LIST_KEYS = {"instalments"}


def canonical_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


def stringify_ints(value):
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return str(value)
    if isinstance(value, dict):
        return {k: stringify_ints(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [stringify_ints(v) for v in value]
    return value


def _restore_ints(value, key: str | None = None):
    if isinstance(value, dict):
        return {k: _restore_ints(v, k) for k, v in value.items()}
    if isinstance(value, list):
        if key in _INT_LIST_KEYS:
            return [int(v) for v in value]
        return [_restore_ints(v) for v in value]
    if key in _INT_KEYS and isinstance(value, str):
        return int(value)
    return value


def record_hash(record_without_hash: dict) -> str:
    return hashlib.sha256(canonical_bytes(record_without_hash)).hexdigest()


def seal_event(event: LedgerEvent, prev_hash: str) -> dict:
    """Build the canonical journal record for one event."""
    record = {
        "seq": str(event.seq),
        "timestamp": str(event.timestamp),
        "actor": event.actor,
        "op": event.op,
        "payload": stringify_ints(event.payload),
        "prev_hash": prev_hash,
    }
    record["hash"] = record_hash(record)
    return record


def seal_events(events: Sequence[LedgerEvent], prev_hash: str = GENESIS_DIGEST) -> list[dict]:
    """Chain-seal a whole event sequence (used when no file backs the ledger)."""
    records = []
    for event in events:
        record = seal_event(event, prev_hash)
        records.append(record)
        prev_hash = record["hash"]
    return records


def decode_record(record: dict) -> LedgerEvent:
    try:
        return LedgerEvent(
            seq=int(record["seq"]),
            timestamp=int(record["timestamp"]),
            actor=record["actor"],
            op=record["op"],
            payload=_restore_ints(record["payload"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        seq = record.get("seq", "?") if isinstance(record, dict) else "?"
        raise CorruptChain(f"record {seq} does not decode: {exc}", seq=int(seq) if str(seq).isdigit() else 0) from exc


def _verify_line(line: str, seq: int, prev_hash: str) -> dict:
    """Parse and integrity-check one record line; returns the record."""
    try:
        record = json.loads(line)
    except json.JSONDecodeError:
        raise CorruptChain(f"record {seq} is not valid JSON", seq=seq) from None
    if not isinstance(record, dict) or set(record) != _RECORD_KEYS:
        raise CorruptChain(f"record {seq} has unexpected fields", seq=seq)
    if record["seq"] != str(seq):
        raise CorruptChain(f"record {seq} carries seq {record['seq']!r}", seq=seq)
    if record["prev_hash"] != prev_hash:
        raise CorruptChain(f"record {seq} breaks the hash chain", seq=seq)
    body = {k: v for k, v in record.items() if k != "hash"}
    if record_hash(body) != record["hash"]:
        raise CorruptChain(f"record {seq} digest mismatch", seq=seq)
    # The canonical form must round-trip byte-identically.
    if canonical_bytes(record).decode() != line:
        raise CorruptChain(f"record {seq} is not in canonical form", seq=seq)
    return record


def verify_file(path: str | Path) -> list[dict]:
    """Verify header and full hash chain; returns all records.

    Raises CorruptChain (with the first bad seq) or TruncatedFile.
    A zero-length file counts as an empty genesis journal.
    """
    raw = Path(path).read_bytes()
    if raw == b"":
        return []
    if not raw.endswith(b"\n"):
        raise TruncatedFile(f"{path} does not end with a complete record")
    lines = raw.decode("utf-8", errors="surrogateescape").split("\n")[:-1]
    if not lines or lines[0] != HEADER_LINE:
        raise CorruptChain("bad or missing journal header", seq=0)
    records = []
    prev_hash = GENESIS_DIGEST
    for i, line in enumerate(lines[1:], start=1):
        record = _verify_line(line, i, prev_hash)
        records.append(record)
        prev_hash = record["hash"]
    return records


class Journal:
    """File-backed journal: verified on open, fsynced on append."""

    def __init__(self, path: str | Path, records: list[dict], fsync: bool = True) -> None:
        self.path = Path(path)
        self.records = records
        self.fsync = fsync
        self.head_seq = len(records)
        self.prev_hash = records[-1]["hash"] if records else GENESIS_DIGEST
        self.closed = any(r["op"] == OP_FUND_CLOSE for r in records)
        self._fh = None

    @classmethod
    def open(cls, path: str | Path, fsync: bool = True) -> "Journal":
        """Open (creating if absent/empty) and verify the whole chain."""
        path = Path(path)
        if not path.exists() or path.stat().st_size == 0:
            path.parent.mkdir(parents=True, exist_ok=True)
            try:
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(HEADER_LINE + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"cannot initialize journal at {path}: {exc}") from exc
            return cls(path, [], fsync=fsync)
        records = verify_file(path)
        return cls(path, records, fsync=fsync)

    def events(self) -> list[LedgerEvent]:
        return [decode_record(r) for r in self.records]

    def append(self, event: LedgerEvent) -> dict:
        if self.closed:
            raise SequenceConflict("journal is fund-closed; no further records accepted")
        if event.seq != self.head_seq + 1:
            raise SequenceConflict(f"event seq {event.seq}, journal head {self.head_seq}")
        record = seal_event(event, self.prev_hash)
        line = canonical_bytes(record) + b"\n"
        try:
            if self._fh is None:
                self._fh = open(self.path, "ab")
            self._fh.write(line)
            self._fh.flush()
            if self.fsync:
                os.fsync(self._fh.fileno())
        except OSError as exc:
            raise StorageFailure(f"append to {self.path} failed: {exc}") from exc
        self.records.append(record)
        self.head_seq = event.seq
        self.prev_hash = record["hash"]
        if event.op == OP_FUND_CLOSE:
            self.closed = True
        return record

    def records_since(self, seq: int) -> list[dict]:
        return self.records[seq:]

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "Journal":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def load_ledger(
    path: str | Path,
    policy=None,
    claim_validation_enabled: bool = True,
    fsync: bool = True,
):
    """Open/verify a journal, replay it, and return the live (ledger, journal) pair."""
    from .ledger import DEFAULT_POLICY, Ledger

    journal = Journal.open(path, fsync=fsync)
    ledger = Ledger.replay_events(
        journal.events(),
        policy=policy or DEFAULT_POLICY,
        claim_validation_enabled=claim_validation_enabled,
    )
    ledger.journal = journal
    return ledger, journal
