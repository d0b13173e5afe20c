"""Key pairs, recoverable signatures and the per-member key vault.

Signatures are deterministic (RFC 6979) ECDSA over secp256k1. To make them
recoverable without a native recovery routine the 33-byte compressed public
key travels inside the signature::

    signature = r (32) || s (32) || compressed_pubkey (33)

``recover_address`` checks the ECDSA equation against the embedded key and
returns the address it derives to; a signature that does not verify raises
:class:`InvalidSignature`, so a tampered message can never recover to the
original signer.
"""

from __future__ import annotations

import hashlib
import hmac
import threading
from dataclasses import dataclass, field
from functools import lru_cache

from cryptography.exceptions import InvalidSignature as _CryptoInvalidSignature
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)

from .errors import InvalidKey, InvalidSignature, Unauthorized, UnknownMember

CURVE = ec.SECP256K1()
CURVE_ORDER = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
SIGNATURE_LENGTH = 97
ADDRESS_BYTES = 20

_ECDSA = ec.ECDSA(hashes.SHA256(), deterministic_signing=True)


@dataclass(frozen=True)
class KeyPair:
    private: bytes = field(repr=False)
    public: bytes

    @property
    def address(self) -> str:
        return derive_address(self.public)


def generate_keypair(seed: bytes) -> KeyPair:
    """Deterministic key pair from a 32-byte seed. Any seed is valid."""
    if len(seed) != 32:
        raise InvalidKey(f"seed must be 32 bytes, got {len(seed)}")
    scalar = int.from_bytes(hashlib.sha3_256(b"winetrace/key/" + seed).digest(), "big")
    scalar = scalar % (CURVE_ORDER - 1) + 1
    private = ec.derive_private_key(scalar, CURVE)
    public = private.public_key().public_bytes(
        serialization.Encoding.X962, serialization.PublicFormat.CompressedPoint
    )
    return KeyPair(private=scalar.to_bytes(32, "big"), public=public)


@lru_cache(maxsize=4096)
def _load_public(pubkey: bytes) -> ec.EllipticCurvePublicKey:
    try:
        return ec.EllipticCurvePublicKey.from_encoded_point(CURVE, pubkey)
    except (ValueError, TypeError) as exc:
        raise InvalidKey(f"not a secp256k1 point ({len(pubkey)} bytes)") from exc


@lru_cache(maxsize=4096)
def derive_address(pubkey: bytes) -> str:
    """Final 20 bytes of SHA3-256 over the uncompressed point (sans 0x04)."""
    key = _load_public(bytes(pubkey))
    raw = key.public_bytes(
        serialization.Encoding.X962, serialization.PublicFormat.UncompressedPoint
    )
    return "0x" + hashlib.sha3_256(raw[1:]).digest()[-ADDRESS_BYTES:].hex()


@lru_cache(maxsize=256)
def _load_private(private: bytes) -> ec.EllipticCurvePrivateKey:
    scalar = int.from_bytes(private, "big")
    if not 0 < scalar < CURVE_ORDER:
        raise InvalidKey("private scalar out of range")
    return ec.derive_private_key(scalar, CURVE)


def sign(message: bytes, keypair: KeyPair) -> bytes:
    der = _load_private(keypair.private).sign(message, _ECDSA)
    r, s = decode_dss_signature(der)
    return r.to_bytes(32, "big") + s.to_bytes(32, "big") + keypair.public


@lru_cache(maxsize=65536)
def recover_address(message: bytes, signature: bytes) -> str:
    if len(signature) != SIGNATURE_LENGTH:
        raise InvalidSignature(f"expected {SIGNATURE_LENGTH} bytes, got {len(signature)}")
    r = int.from_bytes(signature[:32], "big")
    s = int.from_bytes(signature[32:64], "big")
    if not (0 < r < CURVE_ORDER and 0 < s < CURVE_ORDER):
        raise InvalidSignature("r or s out of range")
    try:
        key = _load_public(signature[64:])
    except InvalidKey as exc:
        raise InvalidSignature("embedded public key is not on the curve") from exc
    try:
        key.verify(encode_dss_signature(r, s), message, _ECDSA)
    except _CryptoInvalidSignature as exc:
        raise InvalidSignature("signature does not verify") from exc
    return derive_address(signature[64:])


def is_address(value: str) -> bool:
    if not isinstance(value, str) or len(value) != 2 + 2 * ADDRESS_BYTES:
        return False
    if not value.startswith("0x"):
        return False
    try:
        bytes.fromhex(value[2:])
    except ValueError:
        return False
    return True


class KeyVault:
    """Token-guarded key store, one entry per member.

    Reads are lock-free; stores are serialized.
    """

    def __init__(self) -> None:
        self._entries: dict[str, tuple[KeyPair, bytes]] = {}
        self._lock = threading.Lock()

    def store(self, member_id: str, keypair: KeyPair, token: bytes) -> None:
        with self._lock:
            current = self._entries.get(member_id)
            if current is not None and not hmac.compare_digest(current[1], token):
                raise Unauthorized(f"token does not own {member_id!r}")
            self._entries = {**self._entries, member_id: (keypair, bytes(token))}

    def fetch(self, member_id: str, token: bytes) -> KeyPair:
        entry = self._entries.get(member_id)
        if entry is None:
            raise UnknownMember(member_id)
        keypair, owner_token = entry
        if not hmac.compare_digest(owner_token, token):
            raise Unauthorized(f"token does not own {member_id!r}")
        return keypair

    def __contains__(self, member_id: str) -> bool:
        return member_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)
