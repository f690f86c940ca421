"""Lifecycle FSM tests: transition table, TTL sweeps, time machine, Frozen."""

from __future__ import annotations

import random
from datetime import timedelta

import pytest

from memkernel.core import (
    LifecycleState,
    LifespanPolicy,
    PlaintextPayload,
    StateKind,
    VersionOp,
    payload_digest,
    validate,
)
from memkernel.core.cubes import append_version
from memkernel.errors import AccessDenied, FrozenViolation, IllegalTransition, UnknownVersion
from memkernel.lifecycle import (
    EventKind,
    LifecycleEvent,
    next_state,
    rollback,
    tick,
    transition,
)

from conftest import T0, at, make_cube

BASE_KINDS = [
    StateKind.GENERATED,
    StateKind.ACTIVATED,
    StateKind.MERGED,
    StateKind.ARCHIVED,
    StateKind.EXPIRED,
]

# Independent statement of the legal table, written out pair by pair.
LEGAL: dict[tuple[str, EventKind], str] = {}
for kind, ev, result in [
    ("Generated", EventKind.ACCESS, "Activated"),
    ("Activated", EventKind.ACCESS, "Activated"),
    ("Generated", EventKind.MERGE_INTO, "Merged"),
    ("Activated", EventKind.MERGE_INTO, "Merged"),
    ("Generated", EventKind.ARCHIVE_REQUEST, "Archived"),
    ("Activated", EventKind.ARCHIVE_REQUEST, "Archived"),
    ("Merged", EventKind.ARCHIVE_REQUEST, "Archived"),
    ("Archived", EventKind.RESTORE_REQUEST, "Activated"),
    ("Generated", EventKind.FREEZE, "Frozen"),
    ("Activated", EventKind.FREEZE, "Frozen"),
    ("Merged", EventKind.FREEZE, "Frozen"),
    ("Archived", EventKind.FREEZE, "Frozen"),
]:
    LEGAL[(kind, ev)] = result


def all_states() -> list[LifecycleState]:
    states = [LifecycleState(k) for k in BASE_KINDS]
    states += [LifecycleState.frozen(k) for k in BASE_KINDS]
    return states


def test_transition_table_exhaustive():
    """Every (state, event) pair: listed pairs accepted, the rest rejected."""
    for state in all_states():
        for ev in EventKind:
            if ev == EventKind.TICK:
                assert next_state(state, ev) == state
                continue
            if state.kind == StateKind.FROZEN:
                if ev == EventKind.UNFREEZE:
                    assert next_state(state, ev) == LifecycleState(state.prior)
                else:
                    with pytest.raises(IllegalTransition):
                        next_state(state, ev)
                continue
            key = (state.kind.value, ev)
            if key in LEGAL:
                result = next_state(state, ev)
                assert result.kind.value == LEGAL[key]
                if result.kind == StateKind.FROZEN:
                    assert result.prior == state.kind
            else:
                with pytest.raises(IllegalTransition):
                    next_state(state, ev)


def test_user_confirm_rejected_everywhere():
    for state in all_states():
        with pytest.raises(IllegalTransition):
            next_state(state, EventKind.USER_CONFIRM)


def test_expired_absorbing_under_fuzz():
    rnd = random.Random(404)
    events = [e for e in EventKind]
    state = LifecycleState.expired()
    for _ in range(10_000):
        ev = rnd.choice(events)
        try:
            state = next_state(state, ev)
        except IllegalTransition:
            continue
        assert state == LifecycleState.expired()


def test_random_walk_never_reaches_unlisted_acceptance():
    rnd = random.Random(777)
    events = list(EventKind)
    state = LifecycleState.generated()
    for _ in range(10_000):
        ev = rnd.choice(events)
        try:
            new = next_state(state, ev)
        except IllegalTransition:
            if state.kind == StateKind.FROZEN:
                assert ev not in (EventKind.UNFREEZE, EventKind.TICK)
            continue
        if ev != EventKind.TICK:
            if state.kind == StateKind.FROZEN:
                assert ev == EventKind.UNFREEZE
            else:
                assert (state.kind.value, ev) in LEGAL
        state = new


def test_access_bumps_count_and_recency():
    cube = make_cube()
    result = transition(cube, LifecycleEvent.access(), at(5))
    assert result.new_state == LifecycleState.activated()
    assert result.cube.header.access_count == 1
    assert result.cube.header.last_access == at(5)
    again = transition(result.cube, LifecycleEvent.access(), at(9))
    assert again.cube.header.access_count == 2


def test_access_on_expired_rejected():
    cube = make_cube().evolve(state=LifecycleState.expired())
    with pytest.raises(IllegalTransition):
        transition(cube, LifecycleEvent.access(), at(1))


def test_freeze_unfreeze_round_trip():
    cube = make_cube()
    cube = transition(cube, LifecycleEvent.access(), at(1)).cube
    digest = payload_digest(cube.payload)
    frozen = transition(cube, LifecycleEvent.freeze(), at(2)).cube
    assert frozen.state == LifecycleState.frozen(StateKind.ACTIVATED)
    thawed = transition(frozen, LifecycleEvent.unfreeze(), at(3), actor="alice").cube
    assert thawed.state == LifecycleState.activated()
    assert payload_digest(thawed.payload) == digest
    assert len(thawed.header.version_chain) == len(cube.header.version_chain)


def test_unfreeze_requires_owner():
    frozen = transition(make_cube(owner="alice"), LifecycleEvent.freeze(), at(1)).cube
    with pytest.raises(AccessDenied):
        transition(frozen, LifecycleEvent.unfreeze(), at(2), actor="mallory")


def test_frozen_accepts_only_unfreeze_and_tick():
    frozen = transition(make_cube(), LifecycleEvent.freeze(), at(1)).cube
    for ev in (LifecycleEvent.access(), LifecycleEvent.archive_request(),
               LifecycleEvent.merge_into("mcx"), LifecycleEvent.freeze()):
        with pytest.raises(IllegalTransition):
            transition(frozen, ev, at(2))
    ticked = transition(frozen, LifecycleEvent.tick(at(2)), at(2))
    assert ticked.cube == frozen


# ---------------------------------------------------------------------------
# time machine

def test_rollback_reproduces_historic_payload_byte_exact():
    snapshots = {}
    cube = make_cube("v1 text")
    snapshots[(cube.cube_id, 1)] = cube.payload
    cube = append_version(cube, op=VersionOp.OVERWRITE, actor="alice", now=at(10),
                          new_payload=PlaintextPayload("v2 text"))
    snapshots[(cube.cube_id, 2)] = cube.payload
    rolled = rollback(cube, 1, at(20), snapshots=lambda cid, v: snapshots.get((cid, v)))
    assert rolled.version == 3
    assert len(rolled.header.version_chain) == 3
    assert rolled.payload == PlaintextPayload("v1 text")
    assert payload_digest(rolled.payload) == cube.header.version_chain[0].snapshot_digest
    record = rolled.header.version_chain[-1]
    assert record.op == VersionOp.ROLLBACK
    assert record.parents == ((cube.cube_id, 1),)
    assert validate(rolled) == []


def test_rollback_to_current_version_is_noop_version():
    cube = make_cube("only text")
    snapshots = {(cube.cube_id, 1): cube.payload}
    rolled = rollback(cube, 1, at(5), snapshots=lambda cid, v: snapshots.get((cid, v)))
    assert rolled.version == 2
    assert rolled.payload == cube.payload


def test_rollback_unknown_version():
    cube = make_cube()
    with pytest.raises(UnknownVersion):
        rollback(cube, 9, at(5), snapshots=lambda cid, v: None)


def test_rollback_frozen_rejected():
    cube = transition(make_cube(), LifecycleEvent.freeze(), at(1)).cube
    with pytest.raises(FrozenViolation):
        rollback(cube, 1, at(2), snapshots=lambda cid, v: cube.payload)


def test_restore_request_from_archived():
    snapshots = {}
    cube = make_cube("v1 text")
    snapshots[(cube.cube_id, 1)] = cube.payload
    cube = append_version(cube, op=VersionOp.OVERWRITE, actor="alice", now=at(10),
                          new_payload=PlaintextPayload("v2 text"))
    snapshots[(cube.cube_id, 2)] = cube.payload
    cube = transition(cube, LifecycleEvent.archive_request(), at(11)).cube
    restored = transition(
        cube, LifecycleEvent.restore_request(2), at(12),
        snapshots=lambda cid, v: snapshots.get((cid, v)),
    )
    assert restored.new_state == LifecycleState.activated()
    assert restored.cube.payload == PlaintextPayload("v2 text")
    assert restored.cube.header.version_chain[-1].op == VersionOp.ROLLBACK


# ---------------------------------------------------------------------------
# tick sweeps

def test_ttl_boundary_strict():
    cube = make_cube(lifespan=LifespanPolicy.ttl(60))
    assert tick([cube], at(60)) == []
    changes = tick([cube], at(61))
    assert len(changes) == 1
    assert changes[0].new_state == LifecycleState.expired()


def test_idle_archive_boundary_strict():
    cube = make_cube(lifespan=LifespanPolicy.decay(1000, archive_after_idle_seconds=30))
    assert tick([cube], at(30)) == []
    changes = tick([cube], at(31))
    assert changes[0].new_state == LifecycleState.archived()


def test_permanent_and_frozen_untouched():
    permanent = make_cube(lifespan=LifespanPolicy.permanent(archive_after_idle_seconds=10), seed=1)
    frozen = transition(
        make_cube(lifespan=LifespanPolicy.ttl(10), seed=2), LifecycleEvent.freeze(), at(0)
    ).cube
    assert tick([permanent, frozen], at(1_000_000)) == []


def test_expiry_wins_over_idle():
    cube = make_cube(lifespan=LifespanPolicy.ttl(50, archive_after_idle_seconds=10))
    changes = tick([cube], at(100))
    assert changes[0].new_state == LifecycleState.expired()


def test_archived_can_still_expire():
    cube = make_cube(lifespan=LifespanPolicy.ttl(60))
    cube = transition(cube, LifecycleEvent.archive_request(), at(10)).cube
    changes = tick([cube], at(61))
    assert changes[0].old_state == LifecycleState.archived()
    assert changes[0].new_state == LifecycleState.expired()


def brute_force_tick(cubes, now):
    """Linear-scan oracle: recompute what the sweep must report."""
    expected = []
    for cube in cubes:
        state = cube.state
        if state.is_frozen or state.is_expired:
            continue
        policy = cube.header.lifespan
        if policy.mode.value == "Permanent":
            continue
        ttl_hit = (
            policy.mode.value == "TtlSeconds"
            and now > cube.header.created_at + timedelta(seconds=policy.seconds)
        )
        idle_hit = (
            policy.archive_after_idle_seconds is not None
            and now > cube.header.last_access + timedelta(seconds=policy.archive_after_idle_seconds)
        )
        if ttl_hit:
            expected.append((cube.cube_id, "Expired"))
        elif idle_hit and state.kind.value != "Archived":
            expected.append((cube.cube_id, "Archived"))
    return sorted(expected)


def test_tick_matches_brute_force_oracle():
    rnd = random.Random(31)
    cubes = []
    for i in range(100):
        choice = rnd.randrange(3)
        if choice == 0:
            lifespan = LifespanPolicy.ttl(rnd.randrange(1, 200))
        elif choice == 1:
            lifespan = LifespanPolicy.decay(rnd.randrange(1, 200),
                                            archive_after_idle_seconds=rnd.randrange(1, 100))
        else:
            lifespan = LifespanPolicy.permanent(
                archive_after_idle_seconds=rnd.choice([None, rnd.randrange(1, 100)])
            )
        cube = make_cube(f"cube number {i}", seed=i, lifespan=lifespan,
                         now=at(rnd.randrange(0, 50)))
        if rnd.random() < 0.2:
            cube = transition(cube, LifecycleEvent.freeze(), at(50)).cube
        elif rnd.random() < 0.2:
            cube = cube.evolve(state=LifecycleState.archived())
        cubes.append(cube)
    now = at(120)
    got = sorted((c.cube_id, c.new_state.kind.value) for c in tick(cubes, now))
    assert got == brute_force_tick(cubes, now)


def test_tick_idempotent_and_order_free():
    rnd = random.Random(55)
    cubes = [
        make_cube(f"idempotent {i}", seed=100 + i, lifespan=LifespanPolicy.ttl(10 + i))
        for i in range(20)
    ]
    now = at(25)
    first = tick(cubes, now)
    applied = {c.cube_id: c.cube for c in first}
    after = [applied.get(c.cube_id, c) for c in cubes]
    assert tick(after, now) == []
    shuffled = cubes[:]
    rnd.shuffle(shuffled)
    assert tick(shuffled, now) == first


def test_tick_result_sorted_by_cube_id():
    cubes = [make_cube(f"sorted {i}", seed=200 + i, lifespan=LifespanPolicy.ttl(1)) for i in range(10)]
    changes = tick(cubes, at(10))
    ids = [c.cube_id for c in changes]
    assert ids == sorted(ids)
    assert len(ids) == 10
