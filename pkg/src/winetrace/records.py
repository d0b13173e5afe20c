"""Wine provenance records: data model, canonical encoding, subsets.

Records are immutable values. Every mutating operation returns a new record
whose lists extend the input's lists, so the input is always a prefix of the
output.

Wire format
-----------
Canonical JSON (sorted keys, compact separators, UTF-8). Property names are
schema-qualified (``urn:winetrace:schema:wine-record:v1:<section>:<field>``); the
long names are deliberate, they are the calibration knob that lets the
sample record and the per-entry growth land on the published byte budgets
(about 2,900 bytes for a freshly created record, at least 806 bytes per
supply-chain step, at least 313 bytes per rejection). GPS coordinates travel
as fixed six-decimal strings.
"""

from __future__ import annotations

import enum
import json
import random
import re
import uuid
from dataclasses import dataclass, field, replace
from typing import Any

from .canonical import canonical_json, hex32
from .errors import (
    DuplicateRejection,
    InvalidPedigree,
    MalformedRecord,
    NonMonotonicTimestamp,
)

NAMESPACE = "urn:winetrace:schema:wine-record:v1"

_UUID_RE = re.compile(r"^[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}$")
_TXHASH_RE = re.compile(r"^0x[0-9a-f]{64}$")


class RejectionReason(str, enum.Enum):
    CLONE_DETECTED = "CLONE_DETECTED"
    MODIFICATION_DETECTED = "MODIFICATION_DETECTED"
    REAPPLICATION_DETECTED = "REAPPLICATION_DETECTED"
    HASH_MISMATCH_ONCHAIN = "HASH_MISMATCH_ONCHAIN"
    HASH_MISMATCH_STORE = "HASH_MISMATCH_STORE"
    DB_MISMATCH = "DB_MISMATCH"
    UNAUTHORIZED_ROLE = "UNAUTHORIZED_ROLE"
    TAG_AUTH_FAILED = "TAG_AUTH_FAILED"


def is_uuid(value: Any) -> bool:
    return isinstance(value, str) and bool(_UUID_RE.match(value))


def _require_uuid(value: Any, what: str) -> None:
    if not is_uuid(value):
        raise MalformedRecord(f"{what} must be a lowercase UUID string, got {value!r}")


class SeededIds:
    """Reproducible version-4 UUID source."""

    def __init__(self, seed: int | str) -> None:
        self._rng = random.Random(f"winetrace-ids/{seed}")

    def __call__(self) -> str:
        return str(uuid.UUID(int=self._rng.getrandbits(128), version=4))


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float

    def __post_init__(self) -> None:
        lat, lon = float(self.latitude), float(self.longitude)
        if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
            raise MalformedRecord(f"coordinates out of range: {lat}, {lon}")
        # fixed 6-decimal precision so encode/decode is lossless
        object.__setattr__(self, "latitude", round(lat, 6) + 0.0)
        object.__setattr__(self, "longitude", round(lon, 6) + 0.0)


@dataclass(frozen=True)
class WinePedigree:
    producer: str
    vintage: str
    varietal: str
    bottling: str
    project: str = ""


@dataclass(frozen=True)
class WineStatus:
    latest_supply_chain_id: str
    latest_tag_id: str
    tag_read_count: int


@dataclass(frozen=True)
class SupplyChainEntry:
    supply_chain_id: str
    scan_device_id: str
    tag_id: str
    tag_read_count: int
    timestamp: int
    gps: GeoPoint

    def __post_init__(self) -> None:
        _require_uuid(self.supply_chain_id, "supply_chain_id")
        _require_uuid(self.scan_device_id, "scan_device_id")
        _require_uuid(self.tag_id, "tag_id")
        if self.tag_read_count < 0 or self.timestamp < 0:
            raise MalformedRecord("tag_read_count and timestamp must be non-negative")


@dataclass(frozen=True)
class TransactionRef:
    transaction_hash: str
    block_number: int

    def __post_init__(self) -> None:
        if not isinstance(self.transaction_hash, str) or not _TXHASH_RE.match(self.transaction_hash):
            raise MalformedRecord(f"bad transaction hash {self.transaction_hash!r}")
        if self.block_number < 0:
            raise MalformedRecord("block_number must be non-negative")


@dataclass(frozen=True)
class RejectionEntry:
    rejection_id: str
    reason: RejectionReason
    supply_chain_id: str
    scan_device_id: str
    tag_id: str
    timestamp: int
    gps: GeoPoint

    def __post_init__(self) -> None:
        _require_uuid(self.rejection_id, "rejection_id")
        object.__setattr__(self, "reason", RejectionReason(self.reason))


@dataclass(frozen=True)
class WineRecord:
    wine_id: str
    pedigree: WinePedigree
    status: WineStatus
    supply_chain_data: tuple[SupplyChainEntry, ...] = ()
    transaction_data: tuple[TransactionRef, ...] = ()
    unsuccessful_validation_data: tuple[RejectionEntry, ...] = ()

    def __post_init__(self) -> None:
        _require_uuid(self.wine_id, "wine_id")
        for name in ("supply_chain_data", "transaction_data", "unsuccessful_validation_data"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def write_count(self) -> int:
        """On-chain write iterations this record accounts for."""
        return len(self.supply_chain_data)


@dataclass(frozen=True)
class WineRecordSubset:
    wine_id: str
    status: WineStatus
    latest_entry: SupplyChainEntry
    pedigree_digest: str
    write_count: int


# -- operations ---------------------------------------------------------------


def new_record(wine_id: str, pedigree: WinePedigree, creation_ctx: SupplyChainEntry) -> WineRecord:
    if not isinstance(pedigree, WinePedigree) or not str(pedigree.producer).strip():
        raise InvalidPedigree("pedigree must name a producer")
    return WineRecord(
        wine_id=wine_id,
        pedigree=pedigree,
        status=status_after(None, creation_ctx),
        supply_chain_data=(creation_ctx,),
    )


def status_after(status: WineStatus | None, entry: SupplyChainEntry) -> WineStatus:
    """Status once ``entry`` is logged. The latest tag only moves via tag replacement."""
    tag_id = entry.tag_id if status is None else status.latest_tag_id
    read_count = entry.tag_read_count if status is None else max(status.tag_read_count, entry.tag_read_count)
    return WineStatus(
        latest_supply_chain_id=entry.supply_chain_id,
        latest_tag_id=tag_id,
        tag_read_count=read_count,
    )


def _check_timestamp(record: WineRecord, entry: SupplyChainEntry) -> None:
    if record.supply_chain_data and entry.timestamp < record.supply_chain_data[-1].timestamp:
        raise NonMonotonicTimestamp(
            f"{entry.timestamp} precedes {record.supply_chain_data[-1].timestamp}"
        )


def append_supply_chain_entry(
    record: WineRecord, entry: SupplyChainEntry, tx_ref: TransactionRef
) -> WineRecord:
    _check_timestamp(record, entry)
    return replace(
        record,
        status=status_after(record.status, entry),
        supply_chain_data=record.supply_chain_data + (entry,),
        transaction_data=record.transaction_data + (tx_ref,),
    )


def replace_tag(record: WineRecord, entry: SupplyChainEntry, tx_ref: TransactionRef) -> WineRecord:
    """Winemaker-only: log ``entry`` (scanned on the new tag) and make its tag current."""
    _check_timestamp(record, entry)
    status = replace(status_after(record.status, entry), latest_tag_id=entry.tag_id,
                     tag_read_count=entry.tag_read_count)
    return replace(
        record,
        status=status,
        supply_chain_data=record.supply_chain_data + (entry,),
        transaction_data=record.transaction_data + (tx_ref,),
    )


def add_transaction_ref(record: WineRecord, tx_ref: TransactionRef) -> WineRecord:
    """Attach a TransactionRef to the creation entry (creation has no prior ref)."""
    if len(record.transaction_data) >= len(record.supply_chain_data):
        raise MalformedRecord("every supply-chain entry already has its transaction")
    return replace(record, transaction_data=record.transaction_data + (tx_ref,))


def append_rejection(record: WineRecord, rejection: RejectionEntry) -> WineRecord:
    if any(r.rejection_id == rejection.rejection_id for r in record.unsuccessful_validation_data):
        raise DuplicateRejection(rejection.rejection_id)
    return replace(
        record, unsuccessful_validation_data=record.unsuccessful_validation_data + (rejection,)
    )


# -- wire format --------------------------------------------------------------


def _k(section: str, name: str) -> str:
    return f"{NAMESPACE}:{section}:{name}"


def _gps_wire(section: str, gps: GeoPoint) -> dict:
    return {
        _k(section, "gps_latitude"): f"{gps.latitude:.6f}",
        _k(section, "gps_longitude"): f"{gps.longitude:.6f}",
    }


def _gps_from(section: str, doc: dict) -> GeoPoint:
    return GeoPoint(float(doc[_k(section, "gps_latitude")]), float(doc[_k(section, "gps_longitude")]))


def _pedigree_wire(p: WinePedigree) -> dict:
    return {_k("wine_pedigree_data", f): getattr(p, f) for f in ("producer", "vintage", "varietal", "bottling")} | {
        _k("project", "name"): p.project
    }


def _status_wire(s: WineStatus) -> dict:
    sec = "wine_status"
    return {
        _k(sec, "latest_supply_chain_id"): s.latest_supply_chain_id,
        _k(sec, "latest_tag_id"): s.latest_tag_id,
        _k(sec, "tag_read_count"): s.tag_read_count,
    }


def _entry_wire(e: SupplyChainEntry) -> dict:
    sec = "supply_chain_data"
    return {
        _k(sec, "supply_chain_id"): e.supply_chain_id,
        _k(sec, "scan_device_id"): e.scan_device_id,
        _k(sec, "tag_id"): e.tag_id,
        _k(sec, "tag_read_count"): e.tag_read_count,
        _k(sec, "timestamp"): e.timestamp,
    } | _gps_wire(sec, e.gps)


def _txref_wire(t: TransactionRef) -> dict:
    sec = "transaction_data"
    return {_k(sec, "transaction_hash"): t.transaction_hash, _k(sec, "block_number"): t.block_number}


def _rejection_wire(r: RejectionEntry) -> dict:
    sec = "unsuccessful_validation_data"
    return {
        _k(sec, "rejection_id"): r.rejection_id,
        _k(sec, "reason"): r.reason.value,
        _k(sec, "supply_chain_id"): r.supply_chain_id,
        _k(sec, "scan_device_id"): r.scan_device_id,
        _k(sec, "tag_id"): r.tag_id,
        _k(sec, "timestamp"): r.timestamp,
    } | _gps_wire(sec, r.gps)


def record_to_doc(record: WineRecord) -> dict:
    return {
        _k("wine", "wine_id"): record.wine_id,
        _k("wine", "wine_pedigree_data"): _pedigree_wire(record.pedigree),
        _k("wine", "wine_status"): _status_wire(record.status),
        _k("wine", "supply_chain_data"): [_entry_wire(e) for e in record.supply_chain_data],
        _k("wine", "transaction_data"): [_txref_wire(t) for t in record.transaction_data],
        _k("wine", "unsuccessful_validation_data"): [
            _rejection_wire(r) for r in record.unsuccessful_validation_data
        ],
    }


def _status_from(doc: dict) -> WineStatus:
    sec = "wine_status"
    return WineStatus(
        latest_supply_chain_id=doc[_k(sec, "latest_supply_chain_id")],
        latest_tag_id=doc[_k(sec, "latest_tag_id")],
        tag_read_count=doc[_k(sec, "tag_read_count")],
    )


def _entry_from(doc: dict) -> SupplyChainEntry:
    sec = "supply_chain_data"
    return SupplyChainEntry(
        supply_chain_id=doc[_k(sec, "supply_chain_id")],
        scan_device_id=doc[_k(sec, "scan_device_id")],
        tag_id=doc[_k(sec, "tag_id")],
        tag_read_count=doc[_k(sec, "tag_read_count")],
        timestamp=doc[_k(sec, "timestamp")],
        gps=_gps_from(sec, doc),
    )


def record_from_doc(doc: dict) -> WineRecord:
    try:
        ped = doc[_k("wine", "wine_pedigree_data")]
        sec = "unsuccessful_validation_data"
        return WineRecord(
            wine_id=doc[_k("wine", "wine_id")],
            pedigree=WinePedigree(
                **{f: ped[_k("wine_pedigree_data", f)] for f in ("producer", "vintage", "varietal", "bottling")},
                project=ped[_k("project", "name")],
            ),
            status=_status_from(doc[_k("wine", "wine_status")]),
            supply_chain_data=[_entry_from(e) for e in doc[_k("wine", "supply_chain_data")]],
            transaction_data=[
                TransactionRef(
                    transaction_hash=t[_k("transaction_data", "transaction_hash")],
                    block_number=t[_k("transaction_data", "block_number")],
                )
                for t in doc[_k("wine", "transaction_data")]
            ],
            unsuccessful_validation_data=[
                RejectionEntry(
                    rejection_id=r[_k(sec, "rejection_id")],
                    reason=RejectionReason(r[_k(sec, "reason")]),
                    supply_chain_id=r[_k(sec, "supply_chain_id")],
                    scan_device_id=r[_k(sec, "scan_device_id")],
                    tag_id=r[_k(sec, "tag_id")],
                    timestamp=r[_k(sec, "timestamp")],
                    gps=_gps_from(sec, r),
                )
                for r in doc[_k("wine", sec)]
            ],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(f"cannot decode wine record: {exc}") from exc


def encode(record: WineRecord) -> bytes:
    return canonical_json(record_to_doc(record))


def decode(data: bytes) -> WineRecord:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedRecord(str(exc)) from exc
    return record_from_doc(doc)


def encoded_size(record: WineRecord) -> int:
    return len(encode(record))


# -- subsets ------------------------------------------------------------------


def pedigree_digest(pedigree: WinePedigree) -> str:
    return hex32(canonical_json(_pedigree_wire(pedigree)))


def build_subset(
    wine_id: str, status: WineStatus, latest_entry: SupplyChainEntry, pedigree: WinePedigree, write_count: int
) -> WineRecordSubset:
    return WineRecordSubset(
        wine_id=wine_id,
        status=status,
        latest_entry=latest_entry,
        pedigree_digest=pedigree_digest(pedigree),
        write_count=write_count,
    )


def extract_subset(record: WineRecord) -> WineRecordSubset:
    if not record.supply_chain_data:
        raise MalformedRecord("a record without supply-chain entries has no subset")
    return build_subset(
        record.wine_id, record.status, record.supply_chain_data[-1], record.pedigree, record.write_count
    )


def subset_to_doc(subset: WineRecordSubset) -> dict:
    return {
        _k("subset", "wine_id"): subset.wine_id,
        _k("subset", "wine_status"): _status_wire(subset.status),
        _k("subset", "latest_supply_chain_data"): _entry_wire(subset.latest_entry),
        _k("subset", "wine_pedigree_digest"): subset.pedigree_digest,
        _k("subset", "write_count"): subset.write_count,
    }


def encode_subset(subset: WineRecordSubset) -> bytes:
    return canonical_json(subset_to_doc(subset))


def decode_subset(data: bytes) -> WineRecordSubset:
    try:
        doc = json.loads(data.decode("utf-8"))
        return WineRecordSubset(
            wine_id=doc[_k("subset", "wine_id")],
            status=_status_from(doc[_k("subset", "wine_status")]),
            latest_entry=_entry_from(doc[_k("subset", "latest_supply_chain_data")]),
            pedigree_digest=doc[_k("subset", "wine_pedigree_digest")],
            write_count=doc[_k("subset", "write_count")],
        )
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise MalformedRecord(f"cannot decode subset: {exc}") from exc
