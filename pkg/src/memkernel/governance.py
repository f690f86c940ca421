"""Access control, audit trail, redaction, and watermarking.

`decide_access` is the pure ternary decision function used everywhere a
cube must be masked without emitting noise into the log; the kernel wraps
it so that each public API call appends exactly one audit record. The log
itself is append-only with gapless sequence numbers and an optional
persisted file that replays on open.
"""

from __future__ import annotations

import os
import re
import threading
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum

from .core import codec
from .core.clock import format_instant, parse_instant
from .core.types import (
    WILDCARD,
    MemCube,
    MemoryLayer,
    ParameterDeltaPayload,
    PlaintextPayload,
    ShareScope,
    VersionRecord,
)
from .errors import DecodeError, FrozenViolation

MASK = "▩"  # the fixed redaction mask token

DENY_NOT_READER = "NOT_READER"
DENY_READ_ONLY = "READ_ONLY"
DENY_NOT_WRITER = "NOT_WRITER"
DENY_FROZEN = "FROZEN"


class AccessOp(Enum):
    READ = "Read"
    WRITE = "Write"
    EXPORT = "Export"


class AuditOp(Enum):
    CREATE = "Create"
    READ = "Read"
    UPDATE = "Update"
    TRANSITION = "Transition"
    MIGRATE = "Migrate"
    EXPORT = "Export"
    IMPORT = "Import"
    PUBLISH = "Publish"
    PULL = "Pull"
    DENY = "Deny"


@dataclass(frozen=True)
class CallContext:
    session_id: str
    purpose: str = ""
    platform: str = ""
    time: datetime | None = None

    def to_obj(self) -> dict:
        return {
            "platform": self.platform,
            "purpose": self.purpose,
            "session_id": self.session_id,
            "time": format_instant(self.time) if self.time is not None else None,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "CallContext":
        time = obj.get("time")
        return cls(
            session_id=str(obj.get("session_id", "")),
            purpose=str(obj.get("purpose", "")),
            platform=str(obj.get("platform", "")),
            time=parse_instant(time) if time else None,
        )


@dataclass(frozen=True)
class Decision:
    allowed: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.allowed


ALLOW = Decision(True)


def decide_access(actor: str, cube: MemCube, context: CallContext, op: AccessOp) -> Decision:
    """Ternary rule: actor identity x cube policy x operation.

    The owner is always allowed, except writes to a Frozen cube. Reads pass
    for listed readers (or wildcard), or when the share scope opens the cube
    and it sits in a shared or global layer. Writes require writer
    membership, a scope that is not ReadOnly, and an unfrozen cube. Export
    discloses content, so it follows the read rule.
    """
    acl = cube.header.acl
    frozen = cube.state.is_frozen
    if op == AccessOp.WRITE:
        if frozen:
            return Decision(False, DENY_FROZEN)
        if actor == acl.owner:
            return ALLOW
        if acl.share_scope == ShareScope.READ_ONLY:
            return Decision(False, DENY_READ_ONLY)
        if actor in acl.writers:
            return ALLOW
        return Decision(False, DENY_NOT_WRITER)
    # Read and Export
    if actor == acl.owner:
        return ALLOW
    if actor in acl.readers or WILDCARD in acl.readers:
        return ALLOW
    if (
        acl.share_scope in (ShareScope.SHARED, ShareScope.READ_ONLY)
        and cube.header.layer in (MemoryLayer.SHARED, MemoryLayer.GLOBAL)
    ):
        return ALLOW
    return Decision(False, DENY_NOT_READER)


# ---------------------------------------------------------------------------
# audit log

@dataclass(frozen=True)
class AuditRecord:
    seq: int
    at: datetime
    actor: str
    cube_id: str
    op: AuditOp
    context: CallContext
    outcome: str               # "Allow" | "Deny"
    reason: str | None = None

    def to_obj(self) -> dict:
        return {
            "actor": self.actor,
            "at": format_instant(self.at),
            "context": self.context.to_obj(),
            "cube_id": self.cube_id,
            "op": self.op.value,
            "outcome": self.outcome,
            "reason": self.reason,
            "seq": self.seq,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "AuditRecord":
        return cls(
            seq=int(obj["seq"]),
            at=parse_instant(obj["at"]),
            actor=str(obj["actor"]),
            cube_id=str(obj["cube_id"]),
            op=AuditOp(obj["op"]),
            context=CallContext.from_obj(obj.get("context") or {}),
            outcome=str(obj["outcome"]),
            reason=obj.get("reason"),
        )


class AuditLog:
    """Append-only, gapless, optionally file-backed (one record per line)."""

    def __init__(self, path: str | None = None):
        self._records: list[AuditRecord] = []
        self._lock = threading.Lock()
        self._path = path
        self._file = None
        if path is not None:
            if os.path.exists(path):
                self._replay(path)
            self._file = open(path, "ab")

    def _replay(self, path: str) -> None:
        with open(path, "rb") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = codec.decode_json(line)
                    record = AuditRecord.from_obj(obj)
                except (DecodeError, KeyError, ValueError) as exc:
                    raise DecodeError(f"audit line {line_no}: {exc}")
                if record.seq != len(self._records) + 1:
                    raise DecodeError(f"audit line {line_no}: seq gap")
                self._records.append(record)

    def append(
        self,
        *,
        at: datetime,
        actor: str,
        cube_id: str,
        op: AuditOp,
        context: CallContext,
        outcome: str = "Allow",
        reason: str | None = None,
    ) -> int:
        with self._lock:
            record = AuditRecord(
                seq=len(self._records) + 1,
                at=at, actor=actor, cube_id=cube_id, op=op,
                context=context, outcome=outcome, reason=reason,
            )
            self._records.append(record)
            if self._file is not None:
                self._file.write(codec.canonical_json_bytes(record.to_obj()) + b"\n")
                self._file.flush()
            return record.seq

    def query(
        self,
        *,
        actor: str | None = None,
        cube_id: str | None = None,
        op: AuditOp | None = None,
        time_from: datetime | None = None,
        time_to: datetime | None = None,
    ) -> list[AuditRecord]:
        with self._lock:
            records = list(self._records)
        out = []
        for r in records:
            if actor is not None and r.actor != actor:
                continue
            if cube_id is not None and r.cube_id != cube_id:
                continue
            if op is not None and r.op != op:
                continue
            if time_from is not None and r.at < time_from:
                continue
            if time_to is not None and r.at >= time_to:
                continue
            out.append(r)
        return out

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def last_seq(self) -> int:
        return len(self)

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None


# ---------------------------------------------------------------------------
# redaction

@dataclass(frozen=True)
class SensitivityRule:
    tag: str
    pattern: str

    def compiled(self) -> re.Pattern:
        return re.compile(self.pattern)


@dataclass(frozen=True)
class SensitivityPolicy:
    rules: tuple[SensitivityRule, ...] = ()

    def ruleset_id(self) -> str:
        body = codec.canonical_json_bytes([[r.tag, r.pattern] for r in self.rules])
        return codec.sha256_hex(body)[:16]

    def select(self, tags: frozenset[str]) -> "SensitivityPolicy":
        """Rules whose tag appears in `tags` (exact-tag match)."""
        return SensitivityPolicy(tuple(r for r in self.rules if r.tag in tags))


def mask_text(text: str, policy: SensitivityPolicy) -> str:
    for rule in policy.rules:
        text = rule.compiled().sub(MASK, text)
    return text


def redact(cube: MemCube, policy: SensitivityPolicy) -> MemCube:
    """Redacted copy; the original is untouched and re-redaction is a no-op.

    Every matched span in a text-bearing payload field collapses to the mask
    token. If the payload changed, the head version record's snapshot digest
    is recomputed so the copy still validates on its own.
    """
    payload = cube.payload
    if isinstance(payload, PlaintextPayload):
        new_payload = replace(payload, text=mask_text(payload.text, policy))
    elif isinstance(payload, ParameterDeltaPayload):
        new_payload = replace(payload, provenance_note=mask_text(payload.provenance_note, policy))
    else:
        new_payload = payload
    if new_payload == payload:
        return cube
    chain = cube.header.version_chain
    head: VersionRecord = chain[-1]
    fixed = chain[:-1] + (replace(head, snapshot_digest=codec.payload_digest(new_payload)),)
    return cube.evolve(new_payload, version_chain=fixed)


# ---------------------------------------------------------------------------
# watermarking

def watermark_digest(cube: MemCube, provider_id: str, salt: str) -> str:
    body = "\x1f".join([provider_id, codec.payload_digest(cube.payload), salt])
    return codec.sha256_hex(body.encode("utf-8"))


def apply_watermark(cube: MemCube, provider_id: str, salt: str) -> MemCube:
    if cube.state.is_frozen:
        raise FrozenViolation(f"{cube.cube_id} is frozen")
    digest = watermark_digest(cube, provider_id, salt)
    return cube.evolve(compliance=replace(cube.header.compliance, watermark=digest))


def verify_watermark(cube: MemCube, provider_id: str, salt: str) -> bool:
    return cube.header.compliance.watermark == watermark_digest(cube, provider_id, salt)
