"""Content-addressed blob store with IPFS CIDv0-style addresses.

An address is ``base58(0x12 || 0x20 || sha256(blob))``: a sha2-256
multihash rendered in the bitcoin base58 alphabet. Every such address is 46
characters long and starts with ``Qm``.
"""

from __future__ import annotations

import hashlib
import os
import threading
from pathlib import Path

from .errors import InvalidHash, NotFound

ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
_INDEX = {c: i for i, c in enumerate(ALPHABET)}

MULTIHASH_SHA2_256 = 0x12
DIGEST_LENGTH = 32
HASH_LENGTH = 46


def b58encode(data: bytes) -> str:
    pad = len(data) - len(data.lstrip(b"\0"))
    num = int.from_bytes(data, "big")
    out = []
    while num:
        num, rem = divmod(num, 58)
        out.append(ALPHABET[rem])
    return "1" * pad + "".join(reversed(out))


def b58decode(text: str) -> bytes:
    num = 0
    for ch in text:
        try:
            num = num * 58 + _INDEX[ch]
        except KeyError:
            raise InvalidHash(f"{ch!r} is not a base58 character") from None
    pad = len(text) - len(text.lstrip("1"))
    body = num.to_bytes((num.bit_length() + 7) // 8, "big") if num else b""
    return b"\0" * pad + body


def content_hash(blob: bytes) -> str:
    """Address ``blob`` would be stored under."""
    mh = bytes([MULTIHASH_SHA2_256, DIGEST_LENGTH]) + hashlib.sha256(blob).digest()
    return b58encode(mh)


def parse_hash(value: str) -> bytes:
    """Decode and validate an address, returning the 32-byte digest."""
    if not isinstance(value, str) or len(value) != HASH_LENGTH:
        raise InvalidHash(f"content hash must be {HASH_LENGTH} characters: {value!r}")
    raw = b58decode(value)
    if len(raw) != 2 + DIGEST_LENGTH or raw[0] != MULTIHASH_SHA2_256 or raw[1] != DIGEST_LENGTH:
        raise InvalidHash(f"not a sha2-256 multihash: {value!r}")
    return raw[2:]


class ContentStore:
    """In-memory content-addressed store.

    Blobs are immutable ``bytes`` published with a single dict assignment, so
    a concurrent ``get`` either sees the whole blob or nothing.
    """

    def __init__(self) -> None:
        self._blobs: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def put(self, blob: bytes) -> str:
        blob = bytes(blob)
        address = content_hash(blob)
        with self._lock:
            self._blobs.setdefault(address, blob)
        return address

    def get(self, address: str) -> bytes:
        parse_hash(address)
        try:
            return self._blobs[address]
        except KeyError:
            raise NotFound(address) from None

    def verify(self, address: str, blob: bytes) -> bool:
        return parse_hash(address) == hashlib.sha256(blob).digest()

    def copy(self) -> "ContentStore":
        clone = ContentStore()
        clone._blobs = dict(self._blobs)
        return clone

    def __contains__(self, address: str) -> bool:
        return address in self._blobs

    def __len__(self) -> int:
        return len(self._blobs)

    def hashes(self) -> list[str]:
        return sorted(self._blobs)

    def corrupt(self, address: str, blob: bytes) -> None:
        """Fault injection: replace stored bytes behind the store's back."""
        if address not in self._blobs:
            raise NotFound(address)
        self._blobs[address] = bytes(blob)

    def export_dir(self, directory: str | os.PathLike) -> int:
        """Write one file per hash (filename = hash). Returns the file count."""
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        for address in self.hashes():
            (path / address).write_bytes(self._blobs[address])
        return len(self._blobs)

    @classmethod
    def import_dir(cls, directory: str | os.PathLike) -> "ContentStore":
        store = cls()
        for item in sorted(Path(directory).iterdir()):
            blob = item.read_bytes()
            if store.put(blob) != item.name:
                raise InvalidHash(f"{item.name} does not address its contents")
        return store
