"""Structural cube validation.

`validate` returns every violated invariant as a stable code string; an
empty list means the cube is well formed. Codes are constants so tests and
callers can match without string comparison on prose.
"""

from __future__ import annotations

import math
import re

from . import codec
from .ids import plausible_cube_id
from .types import (
    ActivationPayload,
    LifespanMode,
    MemCube,
    ParameterDeltaPayload,
    PlaintextPayload,
    ShareScope,
    StateKind,
    VersionOp,
)

CUBE_ID_LENGTH = "CUBE_ID_LENGTH"
NAMESPACE_EMPTY = "NAMESPACE_EMPTY"
TIMESTAMP_ORDER = "TIMESTAMP_ORDER"
PRIORITY_RANGE = "PRIORITY_RANGE"
ACCESS_COUNT_NEGATIVE = "ACCESS_COUNT_NEGATIVE"
FINGERPRINT_DIMENSION = "FINGERPRINT_DIMENSION"
FINGERPRINT_NOT_UNIT = "FINGERPRINT_NOT_UNIT"
VERSION_CHAIN_EMPTY = "VERSION_CHAIN_EMPTY"
VERSION_GAP = "VERSION_GAP"
VERSION_OP_CREATE = "VERSION_OP_CREATE"
VERSION_PARENTS = "VERSION_PARENTS"
SNAPSHOT_DIGEST_MISMATCH = "SNAPSHOT_DIGEST_MISMATCH"
STATE_FROZEN_PRIOR = "STATE_FROZEN_PRIOR"
LIFESPAN_VALUE = "LIFESPAN_VALUE"
ACL_OWNER_NOT_WRITER = "ACL_OWNER_NOT_WRITER"
ACL_READONLY_WRITERS = "ACL_READONLY_WRITERS"
PAYLOAD_TEXT_EMPTY = "PAYLOAD_TEXT_EMPTY"
PAYLOAD_TOKEN_COUNT = "PAYLOAD_TOKEN_COUNT"
PAYLOAD_RANK = "PAYLOAD_RANK"
PAYLOAD_DIGEST_FORMAT = "PAYLOAD_DIGEST_FORMAT"

UNIT_NORM_TOLERANCE = 1e-9

_HEX_DIGEST = re.compile(r"^[0-9a-f]{64}$")


def validate(cube: MemCube, dim: int = 256) -> list[str]:
    violations: list[str] = []
    header = cube.header

    if not plausible_cube_id(cube.cube_id):
        violations.append(CUBE_ID_LENGTH)
    if not header.namespace:
        violations.append(NAMESPACE_EMPTY)
    if header.updated_at < header.created_at or header.last_access < header.created_at:
        violations.append(TIMESTAMP_ORDER)
    if not 0 <= header.priority <= 100:
        violations.append(PRIORITY_RANGE)
    if header.access_count < 0:
        violations.append(ACCESS_COUNT_NEGATIVE)

    if len(header.contextual_fingerprint) != dim:
        violations.append(FINGERPRINT_DIMENSION)
    else:
        norm = math.sqrt(sum(v * v for v in header.contextual_fingerprint))
        if abs(norm - 1.0) > UNIT_NORM_TOLERANCE:
            violations.append(FINGERPRINT_NOT_UNIT)

    chain = header.version_chain
    if not chain:
        violations.append(VERSION_CHAIN_EMPTY)
    else:
        if [r.version for r in chain] != list(range(1, len(chain) + 1)):
            violations.append(VERSION_GAP)
        if any(r.op == VersionOp.CREATE and r.version != 1 for r in chain):
            violations.append(VERSION_OP_CREATE)
        for record in chain:
            if record.op == VersionOp.CREATE:
                expected_ok = len(record.parents) == 0
            elif record.op == VersionOp.MERGE:
                expected_ok = len(record.parents) >= 2
            else:
                expected_ok = len(record.parents) == 1
            if not expected_ok:
                violations.append(VERSION_PARENTS)
                break
        if chain[-1].snapshot_digest != codec.payload_digest(cube.payload):
            violations.append(SNAPSHOT_DIGEST_MISMATCH)

    state = header.state
    if state.kind == StateKind.FROZEN:
        if state.prior is None or state.prior == StateKind.FROZEN:
            violations.append(STATE_FROZEN_PRIOR)
    elif state.prior is not None:
        violations.append(STATE_FROZEN_PRIOR)

    lifespan = header.lifespan
    if lifespan.mode in (LifespanMode.TTL_SECONDS, LifespanMode.DECAY_HALF_LIFE_SECONDS):
        if lifespan.seconds is None or lifespan.seconds <= 0:
            violations.append(LIFESPAN_VALUE)
    elif lifespan.seconds is not None:
        violations.append(LIFESPAN_VALUE)
    if lifespan.archive_after_idle_seconds is not None and lifespan.archive_after_idle_seconds <= 0:
        violations.append(LIFESPAN_VALUE)

    acl = header.acl
    if acl.owner not in acl.writers:
        violations.append(ACL_OWNER_NOT_WRITER)
    if acl.share_scope == ShareScope.READ_ONLY and acl.writers != frozenset({acl.owner}):
        violations.append(ACL_READONLY_WRITERS)

    payload = cube.payload
    if isinstance(payload, PlaintextPayload):
        if not payload.text:
            violations.append(PAYLOAD_TEXT_EMPTY)
    elif isinstance(payload, ActivationPayload):
        if payload.token_count < 0:
            violations.append(PAYLOAD_TOKEN_COUNT)
    elif isinstance(payload, ParameterDeltaPayload):
        if payload.rank < 1:
            violations.append(PAYLOAD_RANK)
        if not _HEX_DIGEST.match(payload.blob_digest):
            violations.append(PAYLOAD_DIGEST_FORMAT)

    return violations
