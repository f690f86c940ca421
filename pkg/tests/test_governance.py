"""Governance tests: ternary access decisions, audit log, redaction, watermark."""

from __future__ import annotations

import random
import threading

import pytest

from memkernel.core import (
    AccessPolicy,
    LifecycleState,
    MemoryLayer,
    ShareScope,
    StateKind,
    validate,
)
from memkernel.errors import FrozenViolation
from memkernel.governance import (
    ALLOW,
    AccessOp,
    AuditLog,
    AuditOp,
    AuditRecord,
    CallContext,
    SensitivityPolicy,
    SensitivityRule,
    apply_watermark,
    decide_access,
    mask_text,
    redact,
    verify_watermark,
    watermark_digest,
)

from conftest import T0, at, make_cube

CTX = CallContext(session_id="s1", purpose="test", platform="cli")


def oracle_decision(actor, acl, layer, frozen, op):
    """Independent truth-table evaluation of the ternary rule."""
    if op == AccessOp.WRITE:
        if frozen:
            return "FROZEN"
        if actor == acl.owner:
            return None
        if acl.share_scope == ShareScope.READ_ONLY:
            return "READ_ONLY"
        return None if actor in acl.writers else "NOT_WRITER"
    if actor == acl.owner or actor in acl.readers or "*" in acl.readers:
        return None
    shared_scope = acl.share_scope in (ShareScope.SHARED, ShareScope.READ_ONLY)
    shared_layer = layer in (MemoryLayer.SHARED, MemoryLayer.GLOBAL)
    return None if (shared_scope and shared_layer) else "NOT_READER"


def test_owner_always_reads_own_cube():
    cube = make_cube(owner="alice")
    assert decide_access("alice", cube, CTX, AccessOp.READ) == ALLOW


def test_non_reader_denied_on_private_cube():
    cube = make_cube(owner="physician")
    decision = decide_access("intruder", cube, CTX, AccessOp.READ)
    assert not decision.allowed
    assert decision.reason == "NOT_READER"


def test_write_to_readonly_scope_denied():
    acl = AccessPolicy("alice", frozenset({"alice", "bob"}), frozenset({"alice"}), ShareScope.READ_ONLY)
    cube = make_cube(owner="alice", acl=acl, layer=MemoryLayer.SHARED)
    decision = decide_access("bob", cube, CTX, AccessOp.WRITE)
    assert decision.reason == "READ_ONLY"
    assert decide_access("bob", cube, CTX, AccessOp.READ).allowed


def test_owner_write_to_frozen_denied():
    cube = make_cube(owner="alice").evolve(state=LifecycleState.frozen(StateKind.GENERATED))
    decision = decide_access("alice", cube, CTX, AccessOp.WRITE)
    assert decision.reason == "FROZEN"
    assert decide_access("alice", cube, CTX, AccessOp.READ).allowed


def test_shared_scope_requires_shared_layer():
    acl = AccessPolicy("alice", frozenset({"alice"}), frozenset({"alice"}), ShareScope.SHARED)
    private_layer = make_cube(owner="alice", acl=acl, layer=MemoryLayer.PRIVATE)
    shared_layer = make_cube(owner="alice", acl=acl, layer=MemoryLayer.SHARED)
    assert not decide_access("bob", private_layer, CTX, AccessOp.READ).allowed
    assert decide_access("bob", shared_layer, CTX, AccessOp.READ).allowed


def test_wildcard_readers():
    acl = AccessPolicy("alice", frozenset({"*"}), frozenset({"alice"}))
    cube = make_cube(owner="alice", acl=acl)
    assert decide_access("anyone", cube, CTX, AccessOp.READ).allowed


def test_export_follows_read_rule():
    cube = make_cube(owner="alice")
    assert decide_access("alice", cube, CTX, AccessOp.EXPORT).allowed
    assert not decide_access("eve", cube, CTX, AccessOp.EXPORT).allowed


def test_decision_fuzz_matches_truth_table_oracle():
    rnd = random.Random(1003)
    people = ["alice", "bob", "carol", "dave", "eve"]
    for trial in range(1000):
        owner = rnd.choice(people)
        readers = frozenset(rnd.sample(people, rnd.randrange(0, 4))) | (
            frozenset({"*"}) if rnd.random() < 0.15 else frozenset()
        )
        scope = rnd.choice(list(ShareScope))
        writers = (
            frozenset({owner})
            if scope == ShareScope.READ_ONLY
            else frozenset(rnd.sample(people, rnd.randrange(0, 3))) | {owner}
        )
        acl = AccessPolicy(owner, readers, writers, scope)
        layer = rnd.choice(list(MemoryLayer))
        cube = make_cube(f"fuzz {trial}", owner=owner, acl=acl, layer=layer, seed=trial)
        frozen = rnd.random() < 0.2
        if frozen:
            cube = cube.evolve(state=LifecycleState.frozen(StateKind.GENERATED))
        actor = rnd.choice(people)
        op = rnd.choice(list(AccessOp))
        decision = decide_access(actor, cube, CTX, op)
        expected_reason = oracle_decision(actor, acl, layer, frozen, op)
        assert decision.allowed == (expected_reason is None), (trial, actor, acl, op)
        if expected_reason is not None:
            assert decision.reason == expected_reason, (trial, actor, acl, op)


# ---------------------------------------------------------------------------
# audit log

def record_args(i):
    return dict(at=at(i), actor="alice", cube_id=f"cube{i}", op=AuditOp.READ, context=CTX)


def test_audit_append_assigns_gapless_seqs():
    log = AuditLog()
    seqs = [log.append(**record_args(i)) for i in range(3)]
    assert seqs == [1, 2, 3]
    assert [r.seq for r in log.query()] == [1, 2, 3]


def test_audit_query_matches_linear_scan():
    log = AuditLog()
    rnd = random.Random(9)
    actors = ["alice", "bob", "carol"]
    ops = [AuditOp.READ, AuditOp.UPDATE, AuditOp.CREATE]
    for i in range(200):
        log.append(
            at=at(i), actor=rnd.choice(actors), cube_id=f"c{rnd.randrange(5)}",
            op=rnd.choice(ops), context=CTX,
            outcome=rnd.choice(["Allow", "Deny"]),
        )
    everything = log.query()
    got = log.query(actor="bob", op=AuditOp.READ, time_from=at(50), time_to=at(150))
    expected = [
        r for r in everything
        if r.actor == "bob" and r.op == AuditOp.READ and at(50) <= r.at < at(150)
    ]
    assert got == expected


def test_audit_persists_and_replays(tmp_path):
    path = str(tmp_path / "audit.log")
    log = AuditLog(path)
    for i in range(5):
        log.append(**record_args(i))
    log.close()
    reopened = AuditLog(path)
    assert [r.seq for r in reopened.query()] == [1, 2, 3, 4, 5]
    assert reopened.append(**record_args(99)) == 6
    reopened.close()


def test_audit_concurrent_appends_gapless():
    log = AuditLog()
    errors = []

    def work():
        try:
            for i in range(100):
                log.append(**record_args(i))
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    seqs = [r.seq for r in log.query()]
    assert seqs == list(range(1, 801))


# ---------------------------------------------------------------------------
# redaction

ID_RULE = SensitivityRule(tag="id-number", pattern=r"\b\d{3}-\d{2}-\d{4}\b")
POLICY = SensitivityPolicy((ID_RULE,))


def test_redact_masks_national_id_pattern():
    cube = make_cube("patient id 123-45-6789 on metformin")
    redacted = redact(cube, POLICY)
    assert "123-45-6789" not in redacted.payload.text
    assert "▩" in redacted.payload.text
    assert cube.payload.text.count("123-45-6789") == 1  # original untouched
    assert validate(redacted) == []


def test_redact_no_match_identical_copy():
    cube = make_cube("nothing sensitive here")
    assert redact(cube, POLICY) == cube


def test_redact_idempotent():
    cube = make_cube("ids 123-45-6789 and 987-65-4321")
    once = redact(cube, POLICY)
    twice = redact(once, POLICY)
    assert once == twice


def test_mask_text_collapses_each_span():
    masked = mask_text("a 123-45-6789 b 999-88-7777 c", POLICY)
    assert masked == "a ▩ b ▩ c"


def test_policy_select_by_tag():
    extra = SensitivityRule(tag="phone", pattern=r"\b\d{10}\b")
    policy = SensitivityPolicy((ID_RULE, extra))
    narrowed = policy.select(frozenset({"phone"}))
    assert narrowed.rules == (extra,)


def test_ruleset_id_stable_and_content_sensitive():
    a = SensitivityPolicy((ID_RULE,))
    b = SensitivityPolicy((ID_RULE,))
    c = SensitivityPolicy((SensitivityRule("id-number", r"\d+"),))
    assert a.ruleset_id() == b.ruleset_id()
    assert a.ruleset_id() != c.ruleset_id()


# ---------------------------------------------------------------------------
# watermark

def test_watermark_deterministic():
    cube = make_cube("watermark me")
    first = apply_watermark(cube, "provider-a", "salt1")
    second = apply_watermark(cube, "provider-a", "salt1")
    assert first.header.compliance.watermark == second.header.compliance.watermark
    assert verify_watermark(first, "provider-a", "salt1")
    assert not verify_watermark(first, "provider-a", "salt2")


def test_watermark_changes_with_payload():
    a = watermark_digest(make_cube("payload one"), "p", "s")
    b = watermark_digest(make_cube("payload one!"), "p", "s")
    assert a != b


def test_watermark_frozen_rejected():
    cube = make_cube().evolve(state=LifecycleState.frozen(StateKind.GENERATED))
    with pytest.raises(FrozenViolation):
        apply_watermark(cube, "p", "s")


def test_audit_record_round_trips_through_obj():
    record = AuditRecord(
        seq=4, at=T0, actor="alice", cube_id="c1", op=AuditOp.PULL,
        context=CTX, outcome="Deny", reason="NOT_READER",
    )
    assert AuditRecord.from_obj(record.to_obj()) == record
