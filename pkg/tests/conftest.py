"""Shared fixture builders for the test suite."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

import pytest

from memkernel.core import (
    AccessPolicy,
    LifespanPolicy,
    MemoryLayer,
    PlaintextPayload,
    ShareScope,
    create_cube,
)

UTC = timezone.utc

T0 = datetime(2026, 1, 1, 12, 0, 0, tzinfo=UTC)


def at(seconds: float = 0.0) -> datetime:
    return T0 + timedelta(seconds=seconds)


def make_cube(
    text: str = "patient on metformin 500mg",
    *,
    namespace: str = "clinic",
    owner: str = "alice",
    now: datetime | None = None,
    seed: int = 7,
    tags=(),
    semantic_type: str = "fact",
    layer: MemoryLayer = MemoryLayer.PRIVATE,
    acl: AccessPolicy | None = None,
    lifespan: LifespanPolicy | None = None,
    priority: int = 50,
    graph_refs=(),
    sensitivity=(),
):
    return create_cube(
        PlaintextPayload(text=text, graph_refs=tuple(graph_refs)),
        namespace=namespace,
        owner=owner,
        now=now if now is not None else T0,
        rng=random.Random(seed),
        tags=tags,
        semantic_type=semantic_type,
        layer=layer,
        acl=acl,
        lifespan=lifespan,
        priority=priority,
        sensitivity=sensitivity,
    )


def shared_acl(owner: str, readers=(), writers=(), scope: ShareScope = ShareScope.SHARED) -> AccessPolicy:
    return AccessPolicy(
        owner=owner,
        readers=frozenset(readers) | {owner},
        writers=frozenset(writers) | {owner},
        share_scope=scope,
    )


@pytest.fixture
def rng():
    return random.Random(20260101)
