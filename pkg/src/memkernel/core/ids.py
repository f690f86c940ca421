"""Time-ordered random cube identifiers.

An id is "mc" + 11 base32 chars of microseconds-since-epoch + 15 random
base32 chars (28 chars total, inside the required 26..36 band). The
fixed-width time prefix makes lexicographic order approximate creation
order, which the retrieval tie-break chain relies on.
"""

from __future__ import annotations

import random
from datetime import datetime

from .clock import EPOCH

ALPHABET = "0123456789abcdefghjkmnpqrstvwxyz"

ID_PREFIX = "mc"
TIME_CHARS = 11
RANDOM_CHARS = 15

ID_MIN_LEN = 26
ID_MAX_LEN = 36


def _base32(value: int, width: int) -> str:
    chars = []
    for _ in range(width):
        chars.append(ALPHABET[value & 31])
        value >>= 5
    return "".join(reversed(chars))


def new_cube_id(now: datetime, rng: random.Random) -> str:
    micros = max(0, int((now - EPOCH).total_seconds() * 1_000_000))
    time_part = _base32(micros, TIME_CHARS)
    rand_part = "".join(rng.choice(ALPHABET) for _ in range(RANDOM_CHARS))
    return ID_PREFIX + time_part + rand_part


def plausible_cube_id(value: str) -> bool:
    return ID_MIN_LEN <= len(value) <= ID_MAX_LEN
