"""Lifecycle state machine: transitions, TTL sweeps, snapshots, rollback.

The transition table is exhaustive; any (state, event) pair not listed
raises IllegalTransition. Tick is the one universal event (a clock sweep is
always legal, possibly a no-op). Expired is absorbing, and Frozen cubes
accept only Unfreeze and Tick, which is what makes them exempt from TTL,
idle archiving, and eviction.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from enum import Enum
from typing import Callable, Iterable

from .core.cubes import append_version, touch
from .core.types import (
    LifecycleState,
    LifespanMode,
    MemCube,
    MemoryPayload,
    StateKind,
    VersionOp,
)
from .errors import AccessDenied, FrozenViolation, IllegalTransition, UnknownVersion


class EventKind(Enum):
    ACCESS = "Access"
    MERGE_INTO = "MergeInto"
    USER_CONFIRM = "UserConfirm"
    ARCHIVE_REQUEST = "ArchiveRequest"
    RESTORE_REQUEST = "RestoreRequest"
    FREEZE = "Freeze"
    UNFREEZE = "Unfreeze"
    TICK = "Tick"


@dataclass(frozen=True)
class LifecycleEvent:
    kind: EventKind
    target: str | None = None        # MergeInto: the consolidated cube id
    version: int | None = None       # RestoreRequest: snapshot version
    now: datetime | None = None      # Tick: sweep instant

    @classmethod
    def access(cls) -> "LifecycleEvent":
        return cls(EventKind.ACCESS)

    @classmethod
    def merge_into(cls, target: str) -> "LifecycleEvent":
        return cls(EventKind.MERGE_INTO, target=target)

    @classmethod
    def archive_request(cls) -> "LifecycleEvent":
        return cls(EventKind.ARCHIVE_REQUEST)

    @classmethod
    def restore_request(cls, version: int) -> "LifecycleEvent":
        return cls(EventKind.RESTORE_REQUEST, version=version)

    @classmethod
    def freeze(cls) -> "LifecycleEvent":
        return cls(EventKind.FREEZE)

    @classmethod
    def unfreeze(cls) -> "LifecycleEvent":
        return cls(EventKind.UNFREEZE)

    @classmethod
    def tick(cls, now: datetime) -> "LifecycleEvent":
        return cls(EventKind.TICK, now=now)


# Legal (state kind, event kind) -> resulting state kind. Tick is handled
# separately (legal everywhere); Frozen and the MergeInto result are handled
# in next_state because they carry extra structure.
_TABLE: dict[tuple[StateKind, EventKind], StateKind] = {
    (StateKind.GENERATED, EventKind.ACCESS): StateKind.ACTIVATED,
    (StateKind.ACTIVATED, EventKind.ACCESS): StateKind.ACTIVATED,
    (StateKind.GENERATED, EventKind.MERGE_INTO): StateKind.MERGED,
    (StateKind.ACTIVATED, EventKind.MERGE_INTO): StateKind.MERGED,
    (StateKind.GENERATED, EventKind.ARCHIVE_REQUEST): StateKind.ARCHIVED,
    (StateKind.ACTIVATED, EventKind.ARCHIVE_REQUEST): StateKind.ARCHIVED,
    (StateKind.MERGED, EventKind.ARCHIVE_REQUEST): StateKind.ARCHIVED,
    (StateKind.ARCHIVED, EventKind.RESTORE_REQUEST): StateKind.ACTIVATED,
    (StateKind.GENERATED, EventKind.FREEZE): StateKind.FROZEN,
    (StateKind.ACTIVATED, EventKind.FREEZE): StateKind.FROZEN,
    (StateKind.MERGED, EventKind.FREEZE): StateKind.FROZEN,
    (StateKind.ARCHIVED, EventKind.FREEZE): StateKind.FROZEN,
}


def next_state(state: LifecycleState, event_kind: EventKind) -> LifecycleState:
    """Pure table lookup; raises IllegalTransition for any unlisted pair."""
    if event_kind == EventKind.TICK:
        return state
    if state.kind == StateKind.FROZEN:
        if event_kind == EventKind.UNFREEZE:
            return LifecycleState(state.prior)
        raise IllegalTransition(f"{state.kind.value} rejects {event_kind.value}")
    key = (state.kind, event_kind)
    if key not in _TABLE:
        raise IllegalTransition(f"{state.kind.value} rejects {event_kind.value}")
    result = _TABLE[key]
    if result == StateKind.FROZEN:
        return LifecycleState.frozen(state.kind)
    return LifecycleState(result)


@dataclass(frozen=True)
class TransitionResult:
    cube: MemCube
    old_state: LifecycleState
    new_state: LifecycleState


SnapshotLookup = Callable[[str, int], MemoryPayload | None]


def transition(
    cube: MemCube,
    event: LifecycleEvent,
    now: datetime,
    *,
    snapshots: SnapshotLookup | None = None,
    actor: str | None = None,
) -> TransitionResult:
    """Apply one event to a cube, producing the evolved snapshot.

    RestoreRequest needs `snapshots` to fetch the historic payload. Unfreeze
    enforces owner identity when `actor` is supplied; the kernel always
    supplies it.
    """
    old_state = cube.state
    new_state = next_state(old_state, event.kind)
    who = actor if actor is not None else cube.header.acl.owner

    if event.kind == EventKind.UNFREEZE and actor is not None and actor != cube.header.acl.owner:
        raise AccessDenied("NOT_WRITER", cube_id=cube.cube_id)

    if event.kind == EventKind.ACCESS:
        return TransitionResult(touch(cube, now), old_state, new_state)

    if event.kind == EventKind.RESTORE_REQUEST:
        if snapshots is None:
            raise UnknownVersion(f"no snapshot store for {cube.cube_id}")
        payload = snapshots(cube.cube_id, event.version or 0)
        if payload is None:
            raise UnknownVersion(f"{cube.cube_id} has no version {event.version}")
        restored = append_version(
            cube, op=VersionOp.ROLLBACK, actor=who, now=now,
            new_payload=payload,
            parents=((cube.cube_id, event.version),),
            state=new_state,
        )
        return TransitionResult(restored, old_state, new_state)

    if event.kind == EventKind.TICK:
        changed = _tick_one(cube, event.now if event.now is not None else now)
        return TransitionResult(changed if changed is not None else cube,
                                old_state,
                                (changed or cube).state)

    return TransitionResult(cube.evolve(state=new_state), old_state, new_state)


def rollback(
    cube: MemCube, version: int, now: datetime, *, snapshots: SnapshotLookup, actor: str | None = None
) -> MemCube:
    """Additive rollback: new head version whose payload is the historic snapshot."""
    if cube.state.is_frozen:
        raise FrozenViolation(f"{cube.cube_id} is frozen")
    payload = snapshots(cube.cube_id, version)
    if payload is None:
        raise UnknownVersion(f"{cube.cube_id} has no version {version}")
    return append_version(
        cube, op=VersionOp.ROLLBACK, actor=actor or cube.header.acl.owner, now=now,
        new_payload=payload, parents=((cube.cube_id, version),),
    )


def _ttl_expired(cube: MemCube, now: datetime) -> bool:
    policy = cube.header.lifespan
    if policy.mode != LifespanMode.TTL_SECONDS:
        return False
    return now > cube.header.created_at + timedelta(seconds=policy.seconds)


def _idle_elapsed(cube: MemCube, now: datetime) -> bool:
    idle = cube.header.lifespan.archive_after_idle_seconds
    if idle is None:
        return False
    return now > cube.header.last_access + timedelta(seconds=idle)


def _tick_one(cube: MemCube, now: datetime) -> MemCube | None:
    """State change for one cube at `now`, or None if nothing fires.

    Frozen and Permanent cubes are untouched; expiry is checked before idle
    archiving so a cube past both deadlines lands in the terminal state.
    """
    state = cube.state
    if state.is_frozen or state.is_expired:
        return None
    if cube.header.lifespan.mode == LifespanMode.PERMANENT:
        return None
    if _ttl_expired(cube, now):
        return cube.evolve(state=LifecycleState.expired())
    if state.kind == StateKind.ARCHIVED:
        return None
    if _idle_elapsed(cube, now):
        return cube.evolve(state=LifecycleState.archived())
    return None


@dataclass(frozen=True)
class TickChange:
    cube_id: str
    old_state: LifecycleState
    new_state: LifecycleState
    cube: MemCube


def tick(cubes: Iterable[MemCube], now: datetime) -> list[TickChange]:
    """One sweep over a store view; result sorted by cube_id, idempotent at fixed now."""
    changes = []
    for cube in sorted(cubes, key=lambda c: c.cube_id):
        updated = _tick_one(cube, now)
        if updated is not None:
            changes.append(TickChange(cube.cube_id, cube.state, updated.state, updated))
    return changes
