"""Namespaced cube storage with pluggable adapters and hot/cold tiers.

A namespace is a single-writer map of cube_id to the cube's latest snapshot
plus a payload snapshot per version (the time machine's backing store). The
InMemory adapter keeps everything in dicts; the FileLog adapter additionally
appends every mutation to a length-prefixed record log that replays on open,
so any clean prefix of the log is a valid store state. Tier bookkeeping is
store metadata: Archived and Expired cubes are forced Cold.
"""

from __future__ import annotations

import os
import struct
import threading
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Callable, Iterable

from .core import codec
from .core.clock import format_instant
from .core.types import MemCube, MemoryPayload, StateKind, Tier
from .errors import (
    AccessDenied,
    AdapterUnavailable,
    CorruptLog,
    IllegalTier,
    ReadOnlyNamespace,
    UnknownCube,
    VersionConflict,
)
from .governance import AccessOp, CallContext, decide_access

LOG_FORMAT_VERSION = 1

_LEN = struct.Struct(">I")  # big-endian record length prefix


class NamespaceKind(Enum):
    USER_PRIVATE = "UserPrivate"
    EXPERT_KNOWLEDGE = "ExpertKnowledge"
    INDUSTRY_SHARED = "IndustryShared"
    CONTEXT_POOL = "ContextPool"
    PIPELINE_CACHE = "PipelineCache"


class NamespaceMode(Enum):
    READ_ONLY_CACHE = "ReadOnlyCache"
    WRITE_ENABLED = "WriteEnabled"


class Backend(Enum):
    IN_MEMORY = "InMemory"
    FILE_LOG = "FileLog"


class FlushPolicy(Enum):
    EVERY_WRITE = "EveryWrite"
    PERIODIC = "Periodic"


@dataclass(frozen=True)
class AdapterConfig:
    backend: Backend = Backend.IN_MEMORY
    path: str | None = None
    flush_policy: FlushPolicy = FlushPolicy.EVERY_WRITE
    flush_seconds: int = 30


@dataclass(frozen=True)
class NamespaceDescriptor:
    name: str
    kind: NamespaceKind = NamespaceKind.USER_PRIVATE
    adapter: AdapterConfig = AdapterConfig()
    mode: NamespaceMode = NamespaceMode.WRITE_ENABLED
    capacity_cubes: int | None = None


def default_tier(cube: MemCube) -> Tier:
    if cube.state.kind in (StateKind.ARCHIVED, StateKind.EXPIRED):
        return Tier.COLD
    return Tier.HOT


class _FileLog:
    """Append-only record file: 4-byte length prefix + canonical JSON body."""

    def __init__(self, path: str, flush_policy: FlushPolicy, flush_seconds: int):
        self.path = path
        self.flush_policy = flush_policy
        self.flush_seconds = flush_seconds
        self._fh = None
        self._pending = 0

    def open_for_append(self) -> None:
        try:
            self._fh = open(self.path, "ab")
        except OSError as exc:
            raise AdapterUnavailable(f"cannot open log {self.path}: {exc}")

    def append(self, obj: dict) -> None:
        body = codec.canonical_json_bytes(obj)
        self._fh.write(_LEN.pack(len(body)) + body)
        self._pending += 1
        if self.flush_policy == FlushPolicy.EVERY_WRITE:
            self._fh.flush()
            self._pending = 0

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            self._pending = 0

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            self._fh.close()
            self._fh = None

    @staticmethod
    def read_records(path: str) -> tuple[list[dict], int | None]:
        """All clean records plus the byte offset of a torn tail (None if clean)."""
        records: list[dict] = []
        try:
            with open(path, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise AdapterUnavailable(f"cannot read log {path}: {exc}")
        pos = 0
        total = len(data)
        while pos < total:
            if pos + _LEN.size > total:
                return records, pos
            (length,) = _LEN.unpack_from(data, pos)
            body_start = pos + _LEN.size
            if body_start + length > total:
                return records, pos
            try:
                obj = codec.decode_json(data[body_start:body_start + length])
            except Exception:
                return records, pos
            if not isinstance(obj, dict) or "kind" not in obj:
                return records, pos
            records.append(obj)
            pos = body_start + length
        return records, None


class VaultNamespace:
    """One namespace: raw storage plus the governance-checked surface.

    raw_* methods bypass access control and are what the kernel composes
    inside an already-authorized operation; get/put/list enforce the ACL.
    """

    def __init__(self, descriptor: NamespaceDescriptor, admin_actors: frozenset[str] = frozenset()):
        self.descriptor = descriptor
        self.admin_actors = admin_actors
        self._cubes: dict[str, MemCube] = {}
        self._tiers: dict[str, Tier] = {}
        self._snapshots: dict[tuple[str, int], MemoryPayload] = {}
        self._lock = threading.RLock()
        self._log: _FileLog | None = None

    @property
    def name(self) -> str:
        return self.descriptor.name

    # -- adapter lifecycle -------------------------------------------------

    def open(self, recover: bool = False) -> "VaultNamespace":
        cfg = self.descriptor.adapter
        if cfg.backend == Backend.IN_MEMORY:
            return self
        if cfg.path is None:
            raise AdapterUnavailable("FileLog adapter requires a path")
        log_path = os.path.join(cfg.path, f"{self.name}.log")
        os.makedirs(cfg.path, exist_ok=True)
        self._log = _FileLog(log_path, cfg.flush_policy, cfg.flush_seconds)
        if os.path.exists(log_path):
            records, torn_at = _FileLog.read_records(log_path)
            self._replay(records)
            if torn_at is not None:
                if not recover:
                    raise CorruptLog(offset=torn_at)
                with open(log_path, "r+b") as fh:
                    fh.truncate(torn_at)
        else:
            self._log = self._log
        self._log.open_for_append()
        if not os.path.exists(log_path) or os.path.getsize(log_path) == 0:
            self._log.append(self._manifest_record())
        return self

    def _manifest_record(self) -> dict:
        return {
            "kind": "manifest",
            "format_version": LOG_FORMAT_VERSION,
            "namespace": self.name,
            "digest_algorithm": codec.DIGEST_ALGORITHM,
        }

    def _replay(self, records: list[dict]) -> None:
        for obj in records:
            kind = obj.get("kind")
            if kind == "manifest":
                continue
            if kind == "put":
                cube = codec.cube_from_obj(obj["cube"])
                self._cubes[cube.cube_id] = cube
                self._snapshots[(cube.cube_id, cube.version)] = cube.payload
                self._tiers[cube.cube_id] = default_tier(cube)
            elif kind == "tier":
                if obj["cube_id"] in self._cubes:
                    self._tiers[obj["cube_id"]] = Tier(obj["tier"])
            elif kind == "remove":
                self._cubes.pop(obj["cube_id"], None)
                self._tiers.pop(obj["cube_id"], None)

    def close(self) -> None:
        if self._log is not None:
            self._log.close()

    def compact(self) -> None:
        """Rewrite the log with latest versions only (drops historic snapshots)."""
        if self._log is None:
            return
        with self._lock:
            self._log.close()
            tmp = self._log.path + ".compact"
            compacted = _FileLog(tmp, self._log.flush_policy, self._log.flush_seconds)
            compacted.open_for_append()
            compacted.append(self._manifest_record())
            for cube_id in sorted(self._cubes):
                compacted.append({"kind": "put", "cube": codec.cube_to_obj(self._cubes[cube_id])})
                compacted.append({"kind": "tier", "cube_id": cube_id,
                                  "tier": self._tiers[cube_id].value})
            compacted.close()
            os.replace(tmp, self._log.path)
            self._snapshots = {
                (cid, cube.version): cube.payload for cid, cube in self._cubes.items()
            }
            self._log.open_for_append()

    # -- raw surface -------------------------------------------------------

    def raw_get(self, cube_id: str) -> MemCube:
        with self._lock:
            cube = self._cubes.get(cube_id)
        if cube is None:
            raise UnknownCube(f"{cube_id} not in namespace {self.name}")
        return cube

    def has(self, cube_id: str) -> bool:
        with self._lock:
            return cube_id in self._cubes

    def raw_put(self, cube: MemCube) -> int:
        """Store a cube snapshot; the chain may only stay put or grow by one."""
        with self._lock:
            current = self._cubes.get(cube.cube_id)
            if current is not None:
                if cube.version == current.version:
                    if cube.header.version_chain != current.header.version_chain:
                        raise VersionConflict(expected=current.version + 1, actual=cube.version)
                elif cube.version != current.version + 1:
                    raise VersionConflict(expected=current.version + 1, actual=cube.version)
            self._cubes[cube.cube_id] = cube
            self._snapshots[(cube.cube_id, cube.version)] = cube.payload
            tier = self._tiers.get(cube.cube_id, Tier.HOT)
            if default_tier(cube) == Tier.COLD:
                tier = Tier.COLD
            self._tiers[cube.cube_id] = tier
            if self._log is not None:
                self._log.append({"kind": "put", "cube": codec.cube_to_obj(cube)})
                if tier != default_tier(cube):
                    self._log.append({"kind": "tier", "cube_id": cube.cube_id, "tier": tier.value})
            return cube.version

    def raw_remove(self, cube_id: str) -> None:
        with self._lock:
            if cube_id not in self._cubes:
                raise UnknownCube(f"{cube_id} not in namespace {self.name}")
            del self._cubes[cube_id]
            self._tiers.pop(cube_id, None)
            if self._log is not None:
                self._log.append({"kind": "remove", "cube_id": cube_id})

    def all_cubes(self) -> list[MemCube]:
        with self._lock:
            return list(self._cubes.values())

    def all_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._cubes)

    def snapshot_payload(self, cube_id: str, version: int) -> MemoryPayload | None:
        with self._lock:
            return self._snapshots.get((cube_id, version))

    def tier(self, cube_id: str) -> Tier:
        with self._lock:
            if cube_id not in self._cubes:
                raise UnknownCube(f"{cube_id} not in namespace {self.name}")
            return self._tiers[cube_id]

    def migrate_tier(self, cube_id: str, target: Tier) -> None:
        with self._lock:
            cube = self._cubes.get(cube_id)
            if cube is None:
                raise UnknownCube(f"{cube_id} not in namespace {self.name}")
            if target == Tier.HOT and cube.state.kind in (StateKind.ARCHIVED, StateKind.EXPIRED):
                raise IllegalTier(f"{cube.state.kind.value} cube cannot move to Hot")
            self._tiers[cube_id] = target
            if self._log is not None:
                self._log.append({"kind": "tier", "cube_id": cube_id, "tier": target.value})

    # -- governed surface --------------------------------------------------

    def get(self, cube_id: str, actor: str, ctx: CallContext) -> MemCube:
        cube = self.raw_get(cube_id)
        decision = decide_access(actor, cube, ctx, AccessOp.READ)
        if not decision:
            raise AccessDenied(decision.reason or "", cube_id=cube_id)
        return cube

    def put(self, cube: MemCube, actor: str, ctx: CallContext) -> int:
        if self.descriptor.mode == NamespaceMode.READ_ONLY_CACHE and actor not in self.admin_actors:
            raise ReadOnlyNamespace(f"namespace {self.name} is a read-only cache")
        with self._lock:
            current = self._cubes.get(cube.cube_id)
            if current is not None:
                decision = decide_access(actor, current, ctx, AccessOp.WRITE)
                if not decision:
                    raise AccessDenied(decision.reason or "", cube_id=cube.cube_id)
            return self.raw_put(cube)

    def list(
        self,
        actor: str,
        ctx: CallContext,
        predicate: Callable[[MemCube], bool] | None = None,
    ) -> list[str]:
        out = []
        for cube in self.all_cubes():
            if predicate is not None and not predicate(cube):
                continue
            if decide_access(actor, cube, ctx, AccessOp.READ):
                out.append(cube.cube_id)
        return sorted(out)

    def observable_state(self) -> dict:
        """Comparable snapshot used by the adapter-equivalence tests."""
        with self._lock:
            return {
                "cubes": {cid: codec.encode_cube(c).decode() for cid, c in self._cubes.items()},
                "tiers": {cid: t.value for cid, t in self._tiers.items()},
                "snapshots": sorted(f"{cid}@{v}" for (cid, v) in self._snapshots),
            }


class Vault:
    """Registry of open namespaces; open is idempotent per name."""

    def __init__(self, admin_actors: Iterable[str] = ()):
        self.admin_actors = frozenset(admin_actors)
        self._namespaces: dict[str, VaultNamespace] = {}
        self._lock = threading.Lock()

    def open_namespace(self, descriptor: NamespaceDescriptor, recover: bool = False) -> VaultNamespace:
        with self._lock:
            existing = self._namespaces.get(descriptor.name)
            if existing is not None:
                return existing
            ns = VaultNamespace(descriptor, self.admin_actors).open(recover=recover)
            self._namespaces[descriptor.name] = ns
            return ns

    def namespace(self, name: str) -> VaultNamespace:
        with self._lock:
            ns = self._namespaces.get(name)
        if ns is None:
            raise UnknownCube(f"namespace {name} not open")
        return ns

    def names(self) -> list[str]:
        with self._lock:
            return sorted(self._namespaces)

    def find_cube(self, cube_id: str) -> tuple[VaultNamespace, MemCube]:
        with self._lock:
            spaces = list(self._namespaces.values())
        for ns in spaces:
            if ns.has(cube_id):
                return ns, ns.raw_get(cube_id)
        raise UnknownCube(cube_id)

    def close(self) -> None:
        with self._lock:
            for ns in self._namespaces.values():
                ns.close()
