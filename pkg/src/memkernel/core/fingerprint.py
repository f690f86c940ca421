"""Deterministic contextual fingerprints: signed hashed bag-of-words.

Each token is lowercased and hashed; the first 8 bytes of the hash pick a
bucket (mod D) and the top bit picks the sign. Token contributions
accumulate and the vector is L2-normalized, so the result depends only on
the token multiset (word order never matters). Text with no tokens maps to
the fixed basis vector e_0 so every fingerprint is unit length.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

DIM = 256

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")


def tokenize(text: str) -> list[str]:
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def _token_hash(token: str) -> int:
    return int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big")


def fingerprint(text: str, dim: int = DIM) -> np.ndarray:
    vec = np.zeros(dim, dtype=np.float64)
    for token in tokenize(text):
        h = _token_hash(token)
        sign = -1.0 if h >> 63 else 1.0
        vec[h % dim] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        vec[0] = 1.0
        return vec
    return vec / norm


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
