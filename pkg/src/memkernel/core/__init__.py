"""Shared domain model: cube types, fingerprints, canonical codec, validation."""

from .clock import ManualClock, SystemClock, format_instant, parse_instant, utc_now
from .codec import (
    DIGEST_ALGORITHM,
    canonical_json_bytes,
    decode_cube,
    encode_cube,
    encode_payload,
    payload_digest,
    sha256_hex,
)
from .cubes import append_version, create_cube, fingerprint_source, touch
from .fingerprint import DIM, cosine, fingerprint, tokenize
from .ids import new_cube_id, plausible_cube_id
from .types import (
    WILDCARD,
    AccessPolicy,
    ActivationPayload,
    ComplianceInfo,
    LifecycleState,
    LifespanMode,
    LifespanPolicy,
    MemCube,
    MemoryKind,
    MemoryLayer,
    MemoryPayload,
    MetadataHeader,
    OriginSignature,
    ParameterDeltaPayload,
    PlaintextPayload,
    ProvenanceEvent,
    ShareScope,
    StateKind,
    Tier,
    VersionOp,
    VersionRecord,
)
from .validate import validate

__all__ = [
    "WILDCARD", "DIM", "DIGEST_ALGORITHM",
    "AccessPolicy", "ActivationPayload", "ComplianceInfo", "LifecycleState",
    "LifespanMode", "LifespanPolicy", "ManualClock", "MemCube", "MemoryKind",
    "MemoryLayer", "MemoryPayload", "MetadataHeader", "OriginSignature",
    "ParameterDeltaPayload", "PlaintextPayload", "ProvenanceEvent",
    "ShareScope", "StateKind", "SystemClock", "Tier", "VersionOp",
    "VersionRecord",
    "append_version", "canonical_json_bytes", "cosine", "create_cube",
    "decode_cube", "encode_cube", "encode_payload", "fingerprint",
    "fingerprint_source", "format_instant", "new_cube_id", "parse_instant",
    "payload_digest", "plausible_cube_id", "sha256_hex", "tokenize", "touch",
    "utc_now", "validate",
]
