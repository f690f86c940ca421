"""Cube construction and evolution helpers.

`create_cube` is the only way a cube comes into existence; every later
version goes through `append_version`, which keeps the chain contiguous and
the snapshot digest in step with the payload.
"""

from __future__ import annotations

import random
from dataclasses import replace
from datetime import datetime
from typing import Callable, Iterable

from ..errors import InvalidGovernance, InvalidPayload
from . import codec
from .fingerprint import DIM, fingerprint
from .ids import new_cube_id
from .types import (
    AccessPolicy,
    ActivationPayload,
    ComplianceInfo,
    LifecycleState,
    LifespanPolicy,
    MemCube,
    MemoryLayer,
    MemoryPayload,
    MetadataHeader,
    OriginSignature,
    ParameterDeltaPayload,
    PlaintextPayload,
    VersionOp,
    VersionRecord,
)


def fingerprint_source(payload: MemoryPayload) -> str:
    """Text the fingerprint is computed from, per payload kind."""
    if isinstance(payload, PlaintextPayload):
        return payload.text
    if isinstance(payload, ActivationPayload):
        return payload.source_cube
    return payload.provenance_note


def create_cube(
    payload: MemoryPayload,
    *,
    namespace: str,
    owner: str,
    now: datetime,
    rng: random.Random,
    semantic_type: str = "fact",
    tags: Iterable[str] = (),
    layer: MemoryLayer = MemoryLayer.PRIVATE,
    origin: OriginSignature = OriginSignature.USER_PROVIDED,
    acl: AccessPolicy | None = None,
    lifespan: LifespanPolicy | None = None,
    priority: int = 50,
    sensitivity: Iterable[str] = (),
    resolve_source: Callable[[str], bool] | None = None,
    dim: int = DIM,
) -> MemCube:
    """Build a fresh Generated cube at version 1.

    `resolve_source`, when given, is consulted for Activation payloads to
    confirm the source cube exists at creation time.
    """
    if isinstance(payload, PlaintextPayload) and not payload.text:
        raise InvalidPayload("plaintext payload requires non-empty text")
    if isinstance(payload, ActivationPayload):
        if payload.token_count < 0:
            raise InvalidPayload("activation token_count must be non-negative")
        if resolve_source is not None and not resolve_source(payload.source_cube):
            raise InvalidPayload(f"dangling source_cube {payload.source_cube!r}")
    if isinstance(payload, ParameterDeltaPayload) and payload.rank < 1:
        raise InvalidPayload("parameter rank must be positive")
    if not namespace:
        raise InvalidGovernance("namespace must be non-empty")
    if not 0 <= priority <= 100:
        raise InvalidGovernance(f"priority {priority} outside [0,100]")
    if acl is None:
        acl = AccessPolicy.private(owner)
    if owner != acl.owner:
        raise InvalidGovernance("owner must match acl.owner")
    if acl.owner not in acl.writers:
        raise InvalidGovernance("acl owner must be a writer")
    if lifespan is None:
        lifespan = LifespanPolicy.permanent()

    vec = fingerprint(fingerprint_source(payload), dim)
    header = MetadataHeader(
        created_at=now,
        updated_at=now,
        origin_signature=origin,
        semantic_type=semantic_type,
        tags=frozenset(tags),
        namespace=namespace,
        layer=layer,
        acl=acl,
        lifespan=lifespan,
        priority=priority,
        compliance=ComplianceInfo(sensitivity=frozenset(sensitivity)),
        access_count=0,
        last_access=now,
        contextual_fingerprint=tuple(float(v) for v in vec),
        version_chain=(
            VersionRecord(
                version=1,
                op=VersionOp.CREATE,
                actor=owner,
                at=now,
                snapshot_digest=codec.payload_digest(payload),
            ),
        ),
        state=LifecycleState.generated(),
    )
    return MemCube(new_cube_id(now, rng), header, payload)


def append_version(
    cube: MemCube,
    *,
    op: VersionOp,
    actor: str,
    now: datetime,
    new_payload: MemoryPayload | None = None,
    parents: tuple[tuple[str, int], ...] | None = None,
    state: LifecycleState | None = None,
) -> MemCube:
    """Next version of `cube`, defaulting the parent link to the current head."""
    payload = new_payload if new_payload is not None else cube.payload
    if parents is None:
        parents = ((cube.cube_id, cube.version),)
    record = VersionRecord(
        version=cube.version + 1,
        op=op,
        actor=actor,
        at=now,
        snapshot_digest=codec.payload_digest(payload),
        parents=parents,
    )
    header = replace(
        cube.header,
        updated_at=now,
        version_chain=cube.header.version_chain + (record,),
        state=state if state is not None else cube.header.state,
    )
    return MemCube(cube.cube_id, header, payload)


def touch(cube: MemCube, now: datetime) -> MemCube:
    """Access bump: count and recency move, content and history do not."""
    return cube.evolve(
        access_count=cube.header.access_count + 1,
        last_access=now,
        state=LifecycleState.activated(),
    )
