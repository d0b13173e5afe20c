"""Deterministic JSON bytes and the digest helpers built on them."""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(obj: Any) -> bytes:
    """UTF-8 JSON, keys sorted, no insignificant whitespace."""
    return json.dumps(
        obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    ).encode("utf-8")


def digest(data: bytes) -> bytes:
    return hashlib.sha3_256(data).digest()


def hex32(data: bytes) -> str:
    """0x-prefixed hex of the 32-byte digest of ``data``."""
    return "0x" + digest(data).hex()


def key_of(identifier: str) -> str:
    """32-byte hash representation of a UUID string (wine_key / tag_key)."""
    return hex32(identifier.encode("utf-8"))
