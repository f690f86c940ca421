"""Stable error catalogue shared by the library, the gateway, and the CLI.

Every raisable condition maps to a fixed wire code so that clients can switch
on `code` without parsing messages. The set of codes is closed: tests
enumerate `ERROR_CODES` and the gateway refuses to emit anything outside it.
"""

from __future__ import annotations


class MemkernelError(Exception):
    """Base class; `code` is the stable wire identifier."""

    code = "INTERNAL"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details


class InvalidPayload(MemkernelError):
    code = "INVALID_PAYLOAD"


class InvalidGovernance(MemkernelError):
    code = "INVALID_GOVERNANCE"


class DecodeError(MemkernelError):
    code = "DECODE_ERROR"

    def __init__(self, message: str = "", offset: int = 0, **details):
        super().__init__(message, offset=offset, **details)
        self.offset = offset


class IllegalTransition(MemkernelError):
    code = "ILLEGAL_TRANSITION"


class FrozenViolation(MemkernelError):
    code = "FROZEN_VIOLATION"


class UnknownVersion(MemkernelError):
    code = "UNKNOWN_VERSION"


class MalformedFilter(MemkernelError):
    code = "MALFORMED_FILTER"


class EmptyTask(MemkernelError):
    code = "EMPTY_TASK"


class PreconditionNotMet(MemkernelError):
    code = "PRECONDITION_NOT_MET"

    def __init__(self, rule: str, observed, threshold, **details):
        super().__init__(
            f"{rule}: observed {observed}, threshold {threshold}",
            rule=rule, observed=observed, threshold=threshold, **details,
        )
        self.rule = rule
        self.observed = observed
        self.threshold = threshold


class AccessDenied(MemkernelError):
    code = "ACCESS_DENIED"

    def __init__(self, reason: str = "", cube_id: str = "", **details):
        super().__init__(
            f"access denied: {reason}" + (f" ({cube_id})" if cube_id else ""),
            reason=reason, cube_id=cube_id, **details,
        )
        self.reason = reason
        self.cube_id = cube_id


class ReadOnlyNamespace(MemkernelError):
    code = "READ_ONLY_NAMESPACE"


class UnknownCube(MemkernelError):
    code = "UNKNOWN_CUBE"


class VersionConflict(MemkernelError):
    code = "VERSION_CONFLICT"

    def __init__(self, expected: int, actual: int, **details):
        super().__init__(
            f"expected version {expected}, actual {actual}",
            expected=expected, actual=actual, **details,
        )
        self.expected = expected
        self.actual = actual


class IllegalForPayloadKind(MemkernelError):
    code = "ILLEGAL_FOR_PAYLOAD_KIND"


class EmptyPrompt(MemkernelError):
    code = "EMPTY_PROMPT"


class UnresolvableTime(MemkernelError):
    code = "UNRESOLVABLE_TIME"


class StepFailed(MemkernelError):
    code = "STEP_FAILED"

    def __init__(self, step: str, cause: str = "", **details):
        super().__init__(f"step {step!r} failed: {cause}", step=step, cause=cause, **details)
        self.step = step
        self.cause = cause


class AuthorizationFailed(MemkernelError):
    code = "AUTHORIZATION_FAILED"

    def __init__(self, step: str, message: str = "", **details):
        super().__init__(message or f"step {step!r} not authorized", step=step, **details)
        self.step = step


class UnsupportedVersion(MemkernelError):
    code = "UNSUPPORTED_VERSION"


class ManifestMismatch(MemkernelError):
    code = "MANIFEST_MISMATCH"


class ValidationFailed(MemkernelError):
    code = "VALIDATION_FAILED"

    def __init__(self, entry_index: int, violations=(), **details):
        super().__init__(
            f"entry {entry_index} invalid: {', '.join(violations)}",
            entry_index=entry_index, violations=list(violations), **details,
        )
        self.entry_index = entry_index
        self.violations = list(violations)


class LicenseExhausted(MemkernelError):
    code = "LICENSE_EXHAUSTED"


class LicenseExpired(MemkernelError):
    code = "LICENSE_EXPIRED"


class UnknownListing(MemkernelError):
    code = "UNKNOWN_LISTING"


class AdapterUnavailable(MemkernelError):
    code = "ADAPTER_UNAVAILABLE"


class CorruptLog(MemkernelError):
    code = "CORRUPT_LOG"

    def __init__(self, message: str = "", offset: int = 0, **details):
        super().__init__(message or f"corrupt log record at byte {offset}", offset=offset, **details)
        self.offset = offset


class IllegalTier(MemkernelError):
    code = "ILLEGAL_TIER"


class DegenerateFit(MemkernelError):
    code = "DEGENERATE_FIT"


class TraceInvalid(MemkernelError):
    code = "TRACE_INVALID"


class UnknownOp(MemkernelError):
    code = "UNKNOWN_OP"


class BadArgs(MemkernelError):
    code = "BAD_ARGS"

    def __init__(self, field: str, message: str = "", **details):
        super().__init__(message or f"bad argument: {field}", field=field, **details)
        self.field = field


ERROR_CODES = frozenset(
    cls.code
    for cls in [
        MemkernelError, InvalidPayload, InvalidGovernance, DecodeError,
        IllegalTransition, FrozenViolation, UnknownVersion, MalformedFilter,
        EmptyTask, PreconditionNotMet, AccessDenied, ReadOnlyNamespace,
        UnknownCube, VersionConflict, IllegalForPayloadKind, EmptyPrompt,
        UnresolvableTime, StepFailed, AuthorizationFailed, UnsupportedVersion,
        ManifestMismatch, ValidationFailed, LicenseExhausted, LicenseExpired,
        UnknownListing, AdapterUnavailable, CorruptLog, IllegalTier,
        DegenerateFit, TraceInvalid, UnknownOp, BadArgs,
    ]
)
