"""Simulated NFC tags and three-layer validation of wine records.

A validation reads the tag (password protected), checks the tag against the
chain, then cross-checks three stores of the same wine:

1. on-chain slot   : tag key, content hash of the database subset, write count
2. content store   : blob at the on-chain hash matches the database subset
3. database record : internal consistency, tag signer owns the wine on chain,
                     and each logged step matches the subset its transaction
                     anchored (when a ledger is supplied)

Exactly one reason is reported per failure, by precedence::

    UNAUTHORIZED_ROLE > TAG_AUTH_FAILED > CLONE > MODIFICATION > REAPPLICATION
    > HASH_MISMATCH_ONCHAIN > HASH_MISMATCH_STORE > DB_MISMATCH
"""

from __future__ import annotations

import copy
import hmac
from dataclasses import dataclass, field, replace
from typing import Callable

from .canonical import canonical_json
from .crypto import recover_address
from .errors import InvalidSignature, MalformedRecord, NotFound, PayloadTooLarge, TagAuthFailed, UnknownField
from .ledger.engines import Ledger
from .records import (
    GeoPoint,
    RejectionEntry,
    RejectionReason,
    SeededIds,
    WineRecord,
    append_rejection,
    decode_subset,
    encode_subset,
    extract_subset,
)
from .registry import APPEND, CREATE, Registry, signed_message, tag_key_of, wine_key_of
from .store import ContentStore, content_hash

TAG_CAPACITY = 888  # NTAG 216 user memory, bytes


@dataclass(frozen=True)
class TagPayload:
    wine_id: str
    signature: bytes
    write_count: int

    def encode(self) -> bytes:
        return canonical_json(
            {"wine_id": self.wine_id, "signature": self.signature.hex(), "write_count": self.write_count}
        )


@dataclass
class NfcTag:
    tag_id: str
    password: bytes = field(repr=False)
    read_counter: int = 0
    write_count: int = 0
    payload: TagPayload | None = None


def tag_message(wine_id: str, tag_id: str, write_count: int) -> bytes:
    return signed_message("nfcTag", wine_key_of(wine_id), tag_key_of(tag_id), write_count)


def _auth(tag: NfcTag, password: bytes) -> None:
    if not hmac.compare_digest(tag.password, password):
        raise TagAuthFailed(tag.tag_id)


def tag_read(tag: NfcTag, password: bytes) -> TagPayload | None:
    _auth(tag, password)
    tag.read_counter += 1
    return tag.payload


def tag_write(tag: NfcTag, password: bytes, payload: TagPayload) -> NfcTag:
    _auth(tag, password)
    size = len(payload.encode())
    if size > TAG_CAPACITY:
        raise PayloadTooLarge(f"{size} > {TAG_CAPACITY} bytes")
    tag.payload = payload
    tag.write_count += 1
    return tag


@dataclass(frozen=True)
class ScanContext:
    """Where and when a scan happened, and by which node and device."""

    supply_chain_id: str
    scan_device_id: str
    timestamp: int
    gps: GeoPoint
    validator: str | None = None


@dataclass
class ValidationResult:
    passed: bool
    reason: RejectionReason | None
    layer_evidence: dict[str, bool]
    tag_checks: dict[str, bool]
    wine_id: str | None = None
    rejection_id: str | None = None

    @property
    def outcome(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_doc(self) -> dict:
        return {
            "outcome": self.outcome,
            "reason": self.reason.value if self.reason else None,
            "layer_evidence": dict(self.layer_evidence),
            "tag_checks": dict(self.tag_checks),
            "wine_id": self.wine_id,
            "rejection_id": self.rejection_id,
        }


def _recover(message: bytes, signature: bytes) -> str | None:
    try:
        return recover_address(message, signature)
    except InvalidSignature:
        return None


def _history_matches(record: WineRecord, wine_key: str, store: ContentStore, ledger: Ledger) -> bool:
    """Every logged step equals the subset its creating/appending tx anchored."""
    for entry, ref in zip(record.supply_chain_data, record.transaction_data):
        loc = ledger.find_transaction(ref.transaction_hash)
        if loc is None or loc.block_number != ref.block_number or not loc.receipt.success:
            return False
        tx = loc.tx
        if tx.method not in (CREATE, APPEND) or tx.args.get("wine_key") != wine_key:
            return False
        try:
            anchored = decode_subset(store.get(tx.args["content_hash"]))
        except (NotFound, MalformedRecord):
            return False
        if anchored.latest_entry != entry or anchored.wine_id != record.wine_id:
            return False
    return True


def _record_consistent(record: WineRecord, tag_id: str) -> bool:
    entries = record.supply_chain_data
    if not entries or len(record.transaction_data) != len(entries):
        return False
    if any(b.timestamp < a.timestamp for a, b in zip(entries, entries[1:])):
        return False
    status = record.status
    return (
        status.latest_supply_chain_id == entries[-1].supply_chain_id
        and status.latest_tag_id == tag_id
        and status.tag_read_count == max(e.tag_read_count for e in entries)
    )


def three_layer_validate(
    tag: NfcTag,
    password: bytes,
    db_record: WineRecord,
    registry: Registry,
    store: ContentStore,
    scan: ScanContext,
    ledger: Ledger | None = None,
    new_id: Callable[[], str] | None = None,
) -> tuple[ValidationResult, WineRecord]:
    """Validate and return the (possibly rejection-extended) record.

    Chain and store are only read. On failure one RejectionEntry carrying
    the scan context is appended to the returned record.
    """
    # True means the check passed
    tag_checks = {"validator_registered": True, "tag_auth": True, "tag_key_matches": False,
                  "payload_authentic": False, "counts_fresh": False}
    layers = {"on_chain": False, "content_store": False, "database": False}
    reason: RejectionReason | None = None

    if scan.validator is not None and registry.role_of(scan.validator) is None:
        tag_checks["validator_registered"] = False
        reason = RejectionReason.UNAUTHORIZED_ROLE

    payload = None
    if reason is None:
        try:
            payload = tag_read(tag, password)
        except TagAuthFailed:
            tag_checks["tag_auth"] = False
            reason = RejectionReason.TAG_AUTH_FAILED

    if reason is None:
        wine_key = wine_key_of(payload.wine_id) if payload else None
        slot = registry.state.records.get(wine_key) if payload else None
        if slot is not None:
            slot = copy.copy(slot)
        this_tag_key = tag_key_of(tag.tag_id)

        tag_checks["tag_key_matches"] = slot is None or slot.tag_key == this_tag_key
        signer = _recover(tag_message(payload.wine_id, tag.tag_id, payload.write_count), payload.signature) if payload else None
        tag_checks["payload_authentic"] = (
            slot is not None
            and payload.wine_id == db_record.wine_id
            and signer is not None
            and registry.role_of(signer) is not None
        )
        tag_checks["counts_fresh"] = (
            slot is not None
            and payload.write_count == slot.write_count
            and tag.read_counter > db_record.status.tag_read_count
        )

        try:
            subset_bytes = encode_subset(extract_subset(db_record))
        except MalformedRecord:
            subset_bytes = None
        if slot is not None and subset_bytes is not None:
            layers["on_chain"] = registry.validate_on_chain(
                wine_key, this_tag_key, content_hash(subset_bytes), payload.write_count
            )
            try:
                blob = store.get(slot.content_hash)
            except NotFound:
                blob = None
            layers["content_store"] = (
                blob is not None and store.verify(slot.content_hash, blob) and blob == subset_bytes
            )
            layers["database"] = (
                _record_consistent(db_record, tag.tag_id)
                and signer == slot.owner
                and (ledger is None or _history_matches(db_record, wine_key, store, ledger))
            )

        for ok, why in (
            (tag_checks["tag_key_matches"], RejectionReason.CLONE_DETECTED),
            (tag_checks["payload_authentic"], RejectionReason.MODIFICATION_DETECTED),
            (tag_checks["counts_fresh"], RejectionReason.REAPPLICATION_DETECTED),
            (layers["on_chain"], RejectionReason.HASH_MISMATCH_ONCHAIN),
            (layers["content_store"], RejectionReason.HASH_MISMATCH_STORE),
            (layers["database"], RejectionReason.DB_MISMATCH),
        ):
            if not ok:
                reason = why
                break

    result = ValidationResult(reason is None, reason, layers, tag_checks, db_record.wine_id)
    if reason is None:
        return result, db_record
    rejection = RejectionEntry(
        rejection_id=(new_id or SeededIds(db_record.wine_id + str(len(db_record.unsuccessful_validation_data))))(),
        reason=reason,
        supply_chain_id=scan.supply_chain_id,
        scan_device_id=scan.scan_device_id,
        tag_id=tag.tag_id,
        timestamp=scan.timestamp,
        gps=scan.gps,
    )
    result.rejection_id = rejection.rejection_id
    return result, append_rejection(db_record, rejection)
