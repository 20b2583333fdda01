"""Append-only, hash-chained event ledger.

Record hash preimage::

    prev_hash (32 raw bytes) || encode([index, ts_ms, kind, payload, envelope])

where ``encode`` is :func:`claimsig.encoding.encode`, ``kind`` is the event
kind string, ``payload`` the raw payload bytes and ``envelope`` either None
or ``MultiSigEnvelope.canonical()``. Record 0 links to 32 zero bytes.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterator, Optional, Sequence

from claimsig.encoding import decode, encode
from claimsig.errors import EncodingError, LedgerIntegrityError
from claimsig.identity import MultiSigEnvelope

GENESIS_HASH = bytes(32)


class EventKind(str, Enum):
    IDENTITY_REGISTERED = "IdentityRegistered"
    POLICY_REGISTERED = "PolicyRegistered"
    CLAIM_SUBMITTED = "ClaimSubmitted"
    CLAIM_APPROVED = "ClaimApproved"
    PAYMENT_RECEIVED = "PaymentReceived"
    ACK_RECORDED = "AckRecorded"
    SCENARIO_NOTE = "ScenarioNote"


GATED_KINDS = frozenset(
    {EventKind.CLAIM_SUBMITTED, EventKind.CLAIM_APPROVED, EventKind.ACK_RECORDED}
)


def record_preimage(
    index: int,
    timestamp: int,
    kind: EventKind,
    payload: bytes,
    envelope: Optional[MultiSigEnvelope],
    prev_hash: bytes,
) -> bytes:
    body = [index, timestamp, EventKind(kind).value, payload, envelope.canonical() if envelope else None]
    return prev_hash + encode(body)


@dataclass(frozen=True)
class LedgerRecord:
    index: int
    timestamp: int
    kind: EventKind
    payload: bytes
    envelope: Optional[MultiSigEnvelope]
    prev_hash: bytes
    record_hash: bytes

    def compute_hash(self) -> bytes:
        pre = record_preimage(
            self.index, self.timestamp, self.kind, self.payload, self.envelope, self.prev_hash
        )
        return hashlib.sha256(pre).digest()

    def body(self) -> Any:
        """The decoded payload."""
        return decode(self.payload)

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "ts_ms": self.timestamp,
            "kind": self.kind.value,
            "payload_hex": self.payload.hex(),
            "envelope": self.envelope.to_json() if self.envelope else None,
            "prev_hash_hex": self.prev_hash.hex(),
            "hash_hex": self.record_hash.hex(),
        }

    def to_line(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, obj: dict) -> "LedgerRecord":
        env = obj["envelope"]
        return cls(
            index=int(obj["index"]),
            timestamp=int(obj["ts_ms"]),
            kind=EventKind(obj["kind"]),
            payload=bytes.fromhex(obj["payload_hex"]),
            envelope=MultiSigEnvelope.from_json(env) if env is not None else None,
            prev_hash=bytes.fromhex(obj["prev_hash_hex"]),
            record_hash=bytes.fromhex(obj["hash_hex"]),
        )


def verify_chain(records: Sequence[LedgerRecord]) -> Optional[int]:
    """Return the smallest index whose record fails to recompute or link.

    None means the whole chain is intact.
    """
    prev = GENESIS_HASH
    for i, rec in enumerate(records):
        try:
            ok = (
                rec.index == i
                and rec.prev_hash == prev
                and rec.compute_hash() == rec.record_hash
            )
        except (EncodingError, ValueError):
            ok = False
        if not ok:
            return i
        prev = rec.record_hash
    return None


class LogicalClock:
    """Deterministic millisecond clock: ``start_ms``, then ``+step_ms`` per tick."""

    def __init__(self, start_ms: int = 1_700_000_000_000, step_ms: int = 1000) -> None:
        self._next = start_ms
        self._step = step_ms

    def __call__(self) -> int:
        now = self._next
        self._next += self._step
        return now


def _claim_ref(payload: bytes) -> Optional[bytes]:
    try:
        body = decode(payload)
    except EncodingError:
        return None
    if isinstance(body, dict):
        ref = body.get("claim_id")
        if isinstance(ref, bytes):
            return ref
    return None


class Ledger:
    """Single-writer append-only chain of :class:`LedgerRecord`."""

    def __init__(self, clock: Optional[Callable[[], int]] = None) -> None:
        self._records: list[LedgerRecord] = []
        self._by_claim: dict[bytes, list[int]] = {}
        self._clock = clock or LogicalClock()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[LedgerRecord]:
        return iter(tuple(self._records))

    def __getitem__(self, i: int) -> LedgerRecord:
        return self._records[i]

    @property
    def records(self) -> tuple[LedgerRecord, ...]:
        return tuple(self._records)

    @property
    def head_hash(self) -> bytes:
        return self._records[-1].record_hash if self._records else GENESIS_HASH

    def append_event(
        self,
        kind: EventKind,
        payload: Any,
        envelope: Optional[MultiSigEnvelope] = None,
        timestamp: Optional[int] = None,
    ) -> LedgerRecord:
        """Append one event. ``payload`` may be raw bytes or any encodable value."""
        kind = EventKind(kind)
        raw = bytes(payload) if isinstance(payload, (bytes, bytearray)) else encode(payload)
        with self._lock:
            ts = self._clock() if timestamp is None else timestamp
            index = len(self._records)
            prev = self.head_hash
            h = hashlib.sha256(record_preimage(index, ts, kind, raw, envelope, prev)).digest()
            rec = LedgerRecord(index, ts, kind, raw, envelope, prev, h)
            self._records.append(rec)
            self._index(rec)
            return rec

    def _index(self, rec: LedgerRecord) -> None:
        ref = _claim_ref(rec.payload)
        if ref is not None:
            self._by_claim.setdefault(ref, []).append(rec.index)

    def verify(self) -> Optional[int]:
        return verify_chain(self._records)

    def audit_trail(self, claim_id: bytes) -> list[LedgerRecord]:
        return [self._records[i] for i in self._by_claim.get(bytes(claim_id), [])]

    def to_jsonl(self) -> str:
        return "".join(rec.to_line() + "\n" for rec in self._records)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def from_records(cls, records: Sequence[LedgerRecord], clock=None) -> "Ledger":
        bad = verify_chain(records)
        if bad is not None:
            raise LedgerIntegrityError(f"chain broken at record {bad}", bad)
        ledger = cls(clock)
        for rec in records:
            ledger._records.append(rec)
            ledger._index(rec)
        return ledger

    @classmethod
    def loads(cls, text: str, clock=None) -> "Ledger":
        records = []
        for lineno, line in enumerate(text.splitlines()):
            try:
                records.append(LedgerRecord.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                raise LedgerIntegrityError(
                    f"unparseable record on line {lineno + 1}: {exc}", lineno
                ) from exc
        return cls.from_records(records, clock)

    @classmethod
    def load(cls, path: str | Path, clock=None) -> "Ledger":
        """Read a JSON Lines ledger and re-verify the full chain before accepting it."""
        return cls.loads(Path(path).read_text(encoding="utf-8"), clock)
