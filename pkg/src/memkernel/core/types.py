"""Domain types for memory cubes: header, payloads, versions, lifecycle state.

All types are immutable snapshots; mutation produces new values (see
`cubes.py` and the lifecycle module). Collections are stored as frozensets
and tuples so dataclass equality is exact and hashing works.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import Union

WILDCARD = "*"


class OriginSignature(Enum):
    INFERENCE_EXTRACTED = "InferenceExtracted"
    USER_PROVIDED = "UserProvided"
    EXTERNAL_RETRIEVAL = "ExternalRetrieval"
    PARAMETER_FINETUNE = "ParameterFinetune"


class MemoryLayer(Enum):
    PRIVATE = "Private"
    SHARED = "Shared"
    GLOBAL = "Global"


class ShareScope(Enum):
    PRIVATE = "Private"
    SHARED = "Shared"
    READ_ONLY = "ReadOnly"


class MemoryKind(Enum):
    PLAINTEXT = "Plaintext"
    ACTIVATION = "Activation"
    PARAMETER = "Parameter"


class StateKind(Enum):
    GENERATED = "Generated"
    ACTIVATED = "Activated"
    MERGED = "Merged"
    ARCHIVED = "Archived"
    EXPIRED = "Expired"
    FROZEN = "Frozen"


class VersionOp(Enum):
    CREATE = "Create"
    APPEND = "Append"
    MERGE = "Merge"
    OVERWRITE = "Overwrite"
    ROLLBACK = "Rollback"
    IMPORT = "Import"


class LifespanMode(Enum):
    TTL_SECONDS = "TtlSeconds"
    DECAY_HALF_LIFE_SECONDS = "DecayHalfLifeSeconds"
    PERMANENT = "Permanent"


class Tier(Enum):
    HOT = "Hot"
    COLD = "Cold"


@dataclass(frozen=True)
class LifecycleState:
    """FSM position; `prior` is set only for Frozen and names the resume state."""

    kind: StateKind
    prior: StateKind | None = None

    @classmethod
    def generated(cls) -> "LifecycleState":
        return cls(StateKind.GENERATED)

    @classmethod
    def activated(cls) -> "LifecycleState":
        return cls(StateKind.ACTIVATED)

    @classmethod
    def merged(cls) -> "LifecycleState":
        return cls(StateKind.MERGED)

    @classmethod
    def archived(cls) -> "LifecycleState":
        return cls(StateKind.ARCHIVED)

    @classmethod
    def expired(cls) -> "LifecycleState":
        return cls(StateKind.EXPIRED)

    @classmethod
    def frozen(cls, prior: StateKind) -> "LifecycleState":
        if prior == StateKind.FROZEN:
            raise ValueError("frozen state cannot record Frozen as its prior")
        return cls(StateKind.FROZEN, prior)

    @property
    def is_frozen(self) -> bool:
        return self.kind == StateKind.FROZEN

    @property
    def is_expired(self) -> bool:
        return self.kind == StateKind.EXPIRED


@dataclass(frozen=True)
class LifespanPolicy:
    """TTL / decay / permanent retention plus an optional idle-archive timer."""

    mode: LifespanMode = LifespanMode.PERMANENT
    seconds: int | None = None
    archive_after_idle_seconds: int | None = None

    @classmethod
    def ttl(cls, seconds: int, archive_after_idle_seconds: int | None = None) -> "LifespanPolicy":
        return cls(LifespanMode.TTL_SECONDS, seconds, archive_after_idle_seconds)

    @classmethod
    def decay(cls, half_life_seconds: int, archive_after_idle_seconds: int | None = None) -> "LifespanPolicy":
        return cls(LifespanMode.DECAY_HALF_LIFE_SECONDS, half_life_seconds, archive_after_idle_seconds)

    @classmethod
    def permanent(cls, archive_after_idle_seconds: int | None = None) -> "LifespanPolicy":
        return cls(LifespanMode.PERMANENT, None, archive_after_idle_seconds)


@dataclass(frozen=True)
class AccessPolicy:
    """Who may read and write; `WILDCARD` in readers opens reads to everyone."""

    owner: str
    readers: frozenset[str] = frozenset()
    writers: frozenset[str] = frozenset()
    share_scope: ShareScope = ShareScope.PRIVATE

    @classmethod
    def private(cls, owner: str) -> "AccessPolicy":
        return cls(owner=owner, readers=frozenset({owner}), writers=frozenset({owner}))


@dataclass(frozen=True)
class ProvenanceEvent:
    trigger: str
    context: str
    model_id: str
    external_links: tuple[str, ...]
    at: datetime


@dataclass(frozen=True)
class ComplianceInfo:
    sensitivity: frozenset[str] = frozenset()
    watermark: str | None = None
    provenance_id: str | None = None
    lineage: tuple[ProvenanceEvent, ...] = ()


@dataclass(frozen=True)
class VersionRecord:
    """One step of a cube's history; Create has no parents, Merge has two or more."""

    version: int
    op: VersionOp
    actor: str
    at: datetime
    snapshot_digest: str
    parents: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class MetadataHeader:
    created_at: datetime
    updated_at: datetime
    origin_signature: OriginSignature
    semantic_type: str
    tags: frozenset[str]
    namespace: str
    layer: MemoryLayer
    acl: AccessPolicy
    lifespan: LifespanPolicy
    priority: int
    compliance: ComplianceInfo
    access_count: int
    last_access: datetime
    contextual_fingerprint: tuple[float, ...]
    version_chain: tuple[VersionRecord, ...]
    state: LifecycleState


@dataclass(frozen=True)
class PlaintextPayload:
    text: str
    graph_refs: tuple[tuple[str, str], ...] = ()

    kind = MemoryKind.PLAINTEXT


@dataclass(frozen=True)
class ActivationPayload:
    source_cube: str
    token_count: int
    engine_tag: str
    kv_state: bytes

    kind = MemoryKind.ACTIVATION


@dataclass(frozen=True)
class ParameterDeltaPayload:
    target_module: str
    rank: int
    blob_digest: str
    provenance_note: str

    kind = MemoryKind.PARAMETER


MemoryPayload = Union[PlaintextPayload, ActivationPayload, ParameterDeltaPayload]


@dataclass(frozen=True)
class MemCube:
    cube_id: str
    header: MetadataHeader
    payload: MemoryPayload

    @property
    def kind(self) -> MemoryKind:
        return self.payload.kind

    @property
    def version(self) -> int:
        return self.header.version_chain[-1].version if self.header.version_chain else 0

    @property
    def state(self) -> LifecycleState:
        return self.header.state

    def evolve(self, payload: MemoryPayload | None = None, **header_changes) -> "MemCube":
        """New snapshot with header fields replaced (and optionally the payload)."""
        header = replace(self.header, **header_changes) if header_changes else self.header
        return MemCube(self.cube_id, header, payload if payload is not None else self.payload)
