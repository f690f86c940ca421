"""Canonical cube serialization.

The wire and storage form is UTF-8 JSON with sorted keys, no whitespace,
and base64 byte blobs. Equal cubes produce equal bytes and
decode(encode(c)) == c field for field. The payload section encodes on its
own as well; its SHA-256 hex digest is the snapshot digest recorded in
version records.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
from datetime import datetime

from ..errors import DecodeError
from .clock import format_instant, parse_instant
from .types import (
    AccessPolicy,
    ActivationPayload,
    ComplianceInfo,
    LifecycleState,
    LifespanMode,
    LifespanPolicy,
    MemCube,
    MemoryLayer,
    MemoryPayload,
    MetadataHeader,
    OriginSignature,
    ParameterDeltaPayload,
    PlaintextPayload,
    ProvenanceEvent,
    ShareScope,
    StateKind,
    VersionOp,
    VersionRecord,
)

DIGEST_ALGORITHM = "sha256"


def canonical_json_bytes(obj) -> bytes:
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


# ---------------------------------------------------------------------------
# encoding (cube -> plain objects -> bytes)

def payload_to_obj(payload: MemoryPayload) -> dict:
    if isinstance(payload, PlaintextPayload):
        return {
            "Plaintext": {
                "graph_refs": [[rel, dst] for rel, dst in payload.graph_refs],
                "text": payload.text,
            }
        }
    if isinstance(payload, ActivationPayload):
        return {
            "Activation": {
                "engine_tag": payload.engine_tag,
                "kv_state": base64.b64encode(payload.kv_state).decode("ascii"),
                "source_cube": payload.source_cube,
                "token_count": payload.token_count,
            }
        }
    return {
        "ParameterDelta": {
            "blob_digest": payload.blob_digest,
            "provenance_note": payload.provenance_note,
            "rank": payload.rank,
            "target_module": payload.target_module,
        }
    }


def encode_payload(payload: MemoryPayload) -> bytes:
    return canonical_json_bytes(payload_to_obj(payload))


def payload_digest(payload: MemoryPayload) -> str:
    return sha256_hex(encode_payload(payload))


def state_to_obj(state: LifecycleState):
    if state.kind == StateKind.FROZEN:
        return {"Frozen": state.prior.value}
    return state.kind.value


def _lifespan_to_obj(policy: LifespanPolicy) -> dict:
    if policy.mode == LifespanMode.PERMANENT:
        mode = "Permanent"
    else:
        mode = {policy.mode.value: policy.seconds}
    return {
        "archive_after_idle_seconds": policy.archive_after_idle_seconds,
        "mode": mode,
    }


def acl_to_obj(acl: AccessPolicy) -> dict:
    return {
        "owner": acl.owner,
        "readers": sorted(acl.readers),
        "share_scope": acl.share_scope.value,
        "writers": sorted(acl.writers),
    }


def _compliance_to_obj(info: ComplianceInfo) -> dict:
    return {
        "lineage": [
            {
                "at": format_instant(ev.at),
                "context": ev.context,
                "external_links": list(ev.external_links),
                "model_id": ev.model_id,
                "trigger": ev.trigger,
            }
            for ev in info.lineage
        ],
        "provenance_id": info.provenance_id,
        "sensitivity": sorted(info.sensitivity),
        "watermark": info.watermark,
    }


def version_record_to_obj(record: VersionRecord) -> dict:
    return {
        "actor": record.actor,
        "at": format_instant(record.at),
        "op": record.op.value,
        "parents": [[cid, ver] for cid, ver in record.parents],
        "snapshot_digest": record.snapshot_digest,
        "version": record.version,
    }


def header_to_obj(header: MetadataHeader) -> dict:
    return {
        "access_count": header.access_count,
        "acl": acl_to_obj(header.acl),
        "compliance": _compliance_to_obj(header.compliance),
        "contextual_fingerprint": list(header.contextual_fingerprint),
        "created_at": format_instant(header.created_at),
        "last_access": format_instant(header.last_access),
        "layer": header.layer.value,
        "lifespan": _lifespan_to_obj(header.lifespan),
        "namespace": header.namespace,
        "origin_signature": header.origin_signature.value,
        "priority": header.priority,
        "semantic_type": header.semantic_type,
        "state": state_to_obj(header.state),
        "tags": sorted(header.tags),
        "updated_at": format_instant(header.updated_at),
        "version_chain": [version_record_to_obj(r) for r in header.version_chain],
    }


def cube_to_obj(cube: MemCube) -> dict:
    return {
        "cube_id": cube.cube_id,
        "header": header_to_obj(cube.header),
        "payload": payload_to_obj(cube.payload),
    }


def encode_cube(cube: MemCube) -> bytes:
    return canonical_json_bytes(cube_to_obj(cube))


# ---------------------------------------------------------------------------
# decoding (bytes -> plain objects -> cube), strict and total

def _fail(path: str, why: str) -> DecodeError:
    return DecodeError(f"{path}: {why}")


def _get(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise _fail(path, "expected object")
    if key not in obj:
        raise _fail(f"{path}.{key}", "missing")
    return obj[key]


def _string(value, path: str) -> str:
    if not isinstance(value, str):
        raise _fail(path, "expected string")
    return value


def _integer(value, path: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise _fail(path, "expected integer")
    return value


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, "expected number")
    return float(value)


def _array(value, path: str) -> list:
    if not isinstance(value, list):
        raise _fail(path, "expected array")
    return value


def _instant(value, path: str) -> datetime:
    try:
        return parse_instant(_string(value, path))
    except ValueError as exc:
        raise _fail(path, f"bad instant: {exc}")


def _enum(enum_cls, value, path: str):
    text = _string(value, path)
    for member in enum_cls:
        if member.value == text:
            return member
    raise _fail(path, f"unknown value {text!r}")


def payload_from_obj(obj, path: str = "payload") -> MemoryPayload:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise _fail(path, "expected single-key payload object")
    tag, body = next(iter(obj.items()))
    if tag == "Plaintext":
        refs = []
        for i, pair in enumerate(_array(_get(body, "graph_refs", path), f"{path}.graph_refs")):
            pair = _array(pair, f"{path}.graph_refs[{i}]")
            if len(pair) != 2:
                raise _fail(f"{path}.graph_refs[{i}]", "expected [relation, cube_id]")
            refs.append((_string(pair[0], f"{path}.graph_refs[{i}][0]"),
                         _string(pair[1], f"{path}.graph_refs[{i}][1]")))
        return PlaintextPayload(
            text=_string(_get(body, "text", path), f"{path}.text"),
            graph_refs=tuple(refs),
        )
    if tag == "Activation":
        blob = _string(_get(body, "kv_state", path), f"{path}.kv_state")
        try:
            kv_state = base64.b64decode(blob, validate=True)
        except (binascii.Error, ValueError):
            raise _fail(f"{path}.kv_state", "invalid base64")
        return ActivationPayload(
            source_cube=_string(_get(body, "source_cube", path), f"{path}.source_cube"),
            token_count=_integer(_get(body, "token_count", path), f"{path}.token_count"),
            engine_tag=_string(_get(body, "engine_tag", path), f"{path}.engine_tag"),
            kv_state=kv_state,
        )
    if tag == "ParameterDelta":
        return ParameterDeltaPayload(
            target_module=_string(_get(body, "target_module", path), f"{path}.target_module"),
            rank=_integer(_get(body, "rank", path), f"{path}.rank"),
            blob_digest=_string(_get(body, "blob_digest", path), f"{path}.blob_digest"),
            provenance_note=_string(_get(body, "provenance_note", path), f"{path}.provenance_note"),
        )
    raise _fail(path, f"unknown payload kind {tag!r}")


def state_from_obj(obj, path: str = "state") -> LifecycleState:
    if isinstance(obj, str):
        kind = _enum(StateKind, obj, path)
        if kind == StateKind.FROZEN:
            raise _fail(path, "Frozen requires a prior state")
        return LifecycleState(kind)
    if isinstance(obj, dict) and set(obj) == {"Frozen"}:
        prior = _enum(StateKind, obj["Frozen"], f"{path}.Frozen")
        if prior == StateKind.FROZEN:
            raise _fail(f"{path}.Frozen", "prior cannot be Frozen")
        return LifecycleState(StateKind.FROZEN, prior)
    raise _fail(path, "expected state name or {Frozen: prior}")


def _lifespan_from_obj(obj, path: str) -> LifespanPolicy:
    idle = _get(obj, "archive_after_idle_seconds", path)
    if idle is not None:
        idle = _integer(idle, f"{path}.archive_after_idle_seconds")
    mode = _get(obj, "mode", path)
    if mode == "Permanent":
        return LifespanPolicy(LifespanMode.PERMANENT, None, idle)
    if isinstance(mode, dict) and len(mode) == 1:
        tag, seconds = next(iter(mode.items()))
        for member in (LifespanMode.TTL_SECONDS, LifespanMode.DECAY_HALF_LIFE_SECONDS):
            if tag == member.value:
                return LifespanPolicy(member, _integer(seconds, f"{path}.mode.{tag}"), idle)
    raise _fail(f"{path}.mode", "expected Permanent or {TtlSeconds|DecayHalfLifeSeconds: n}")


def acl_from_obj(obj, path: str = "acl") -> AccessPolicy:
    return AccessPolicy(
        owner=_string(_get(obj, "owner", path), f"{path}.owner"),
        readers=frozenset(
            _string(v, f"{path}.readers[{i}]")
            for i, v in enumerate(_array(_get(obj, "readers", path), f"{path}.readers"))
        ),
        writers=frozenset(
            _string(v, f"{path}.writers[{i}]")
            for i, v in enumerate(_array(_get(obj, "writers", path), f"{path}.writers"))
        ),
        share_scope=_enum(ShareScope, _get(obj, "share_scope", path), f"{path}.share_scope"),
    )


def _compliance_from_obj(obj, path: str) -> ComplianceInfo:
    lineage = []
    for i, ev in enumerate(_array(_get(obj, "lineage", path), f"{path}.lineage")):
        p = f"{path}.lineage[{i}]"
        lineage.append(ProvenanceEvent(
            trigger=_string(_get(ev, "trigger", p), f"{p}.trigger"),
            context=_string(_get(ev, "context", p), f"{p}.context"),
            model_id=_string(_get(ev, "model_id", p), f"{p}.model_id"),
            external_links=tuple(
                _string(v, f"{p}.external_links[{j}]")
                for j, v in enumerate(_array(_get(ev, "external_links", p), f"{p}.external_links"))
            ),
            at=_instant(_get(ev, "at", p), f"{p}.at"),
        ))
    provenance_id = _get(obj, "provenance_id", path)
    if provenance_id is not None:
        provenance_id = _string(provenance_id, f"{path}.provenance_id")
    watermark = _get(obj, "watermark", path)
    if watermark is not None:
        watermark = _string(watermark, f"{path}.watermark")
    return ComplianceInfo(
        sensitivity=frozenset(
            _string(v, f"{path}.sensitivity[{i}]")
            for i, v in enumerate(_array(_get(obj, "sensitivity", path), f"{path}.sensitivity"))
        ),
        watermark=watermark,
        provenance_id=provenance_id,
        lineage=tuple(lineage),
    )


def version_record_from_obj(obj, path: str) -> VersionRecord:
    parents = []
    for i, pair in enumerate(_array(_get(obj, "parents", path), f"{path}.parents")):
        pair = _array(pair, f"{path}.parents[{i}]")
        if len(pair) != 2:
            raise _fail(f"{path}.parents[{i}]", "expected [cube_id, version]")
        parents.append((_string(pair[0], f"{path}.parents[{i}][0]"),
                        _integer(pair[1], f"{path}.parents[{i}][1]")))
    return VersionRecord(
        version=_integer(_get(obj, "version", path), f"{path}.version"),
        op=_enum(VersionOp, _get(obj, "op", path), f"{path}.op"),
        actor=_string(_get(obj, "actor", path), f"{path}.actor"),
        at=_instant(_get(obj, "at", path), f"{path}.at"),
        snapshot_digest=_string(_get(obj, "snapshot_digest", path), f"{path}.snapshot_digest"),
        parents=tuple(parents),
    )


def header_from_obj(obj, path: str = "header") -> MetadataHeader:
    fingerprint = tuple(
        _number(v, f"{path}.contextual_fingerprint[{i}]")
        for i, v in enumerate(
            _array(_get(obj, "contextual_fingerprint", path), f"{path}.contextual_fingerprint")
        )
    )
    chain = tuple(
        version_record_from_obj(r, f"{path}.version_chain[{i}]")
        for i, r in enumerate(_array(_get(obj, "version_chain", path), f"{path}.version_chain"))
    )
    return MetadataHeader(
        created_at=_instant(_get(obj, "created_at", path), f"{path}.created_at"),
        updated_at=_instant(_get(obj, "updated_at", path), f"{path}.updated_at"),
        origin_signature=_enum(
            OriginSignature, _get(obj, "origin_signature", path), f"{path}.origin_signature"
        ),
        semantic_type=_string(_get(obj, "semantic_type", path), f"{path}.semantic_type"),
        tags=frozenset(
            _string(v, f"{path}.tags[{i}]")
            for i, v in enumerate(_array(_get(obj, "tags", path), f"{path}.tags"))
        ),
        namespace=_string(_get(obj, "namespace", path), f"{path}.namespace"),
        layer=_enum(MemoryLayer, _get(obj, "layer", path), f"{path}.layer"),
        acl=acl_from_obj(_get(obj, "acl", path), f"{path}.acl"),
        lifespan=_lifespan_from_obj(_get(obj, "lifespan", path), f"{path}.lifespan"),
        priority=_integer(_get(obj, "priority", path), f"{path}.priority"),
        compliance=_compliance_from_obj(_get(obj, "compliance", path), f"{path}.compliance"),
        access_count=_integer(_get(obj, "access_count", path), f"{path}.access_count"),
        last_access=_instant(_get(obj, "last_access", path), f"{path}.last_access"),
        contextual_fingerprint=fingerprint,
        version_chain=chain,
        state=state_from_obj(_get(obj, "state", path), f"{path}.state"),
    )


def cube_from_obj(obj, path: str = "cube") -> MemCube:
    return MemCube(
        cube_id=_string(_get(obj, "cube_id", path), f"{path}.cube_id"),
        header=header_from_obj(_get(obj, "header", path), f"{path}.header"),
        payload=payload_from_obj(_get(obj, "payload", path), f"{path}.payload"),
    )


def decode_json(data: bytes):
    """Parse canonical JSON bytes; malformed input raises DecodeError with offset."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"invalid utf-8: {exc.reason}", offset=exc.start)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"invalid json: {exc.msg}", offset=exc.pos)


def decode_cube(data: bytes) -> MemCube:
    return cube_from_obj(decode_json(data), "cube")
