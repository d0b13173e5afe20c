"""Single-point tamper injection against a consistent validation fixture.

``MUTATION_POINTS`` names every place an attacker (or a fault) can change one
thing: a tag field, an on-chain slot field, the stored subset bytes, or a
field of the off-chain record. ``classify_tamper`` applies one of them to a
private copy of the fixture and reports the rejection reason validation
produces.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, fields, replace
from typing import Callable

from .consortium import Consortium, default_scenario, form_consortium
from .errors import UnknownField
from .records import GeoPoint, RejectionReason, SupplyChainEntry, TransactionRef, WinePedigree, WineRecord
from .registry import Registry, wine_key_of
from .store import ContentStore, content_hash
from .validation import NfcTag, TagPayload, ValidationResult, three_layer_validate


@dataclass
class ValidationFixture:
    """Everything one validation touches, plus the material attacks reuse."""

    ctx: Consortium
    wine_id: str
    other_wine_id: str
    stale_payload: TagPayload
    validator: str = "retailer"

    @property
    def tag(self) -> NfcTag:
        return self.ctx.tags[self.wine_id]

    @property
    def record(self) -> WineRecord:
        return self.ctx.db[self.wine_id]


def consistent_fixture(seed: int = 0) -> ValidationFixture:
    """A wine created and handed on once (two logged steps), and a second wine."""
    ctx = form_consortium(default_scenario(seed).roster, seed=seed)
    record, _ = ctx.op_create("winemaker")
    stale = ctx.tags[record.wine_id].payload
    ctx.op_transfer("winemaker", "distributor", record.wine_id)
    other, _ = ctx.op_create("winemaker")
    return ValidationFixture(ctx, record.wine_id, other.wine_id, stale)


@dataclass
class TamperTarget:
    tag: NfcTag
    record: WineRecord
    registry: Registry
    store: ContentStore
    wine_key: str
    fixture: ValidationFixture


Mutation = Callable[[TamperTarget], None]


def _bump_uuid(value: str) -> str:
    last = "0" if value[-1] != "0" else "1"
    return value[:-1] + last


def _flip_hex(value: str) -> str:
    last = "0" if value[-1] != "0" else "1"
    return value[:-1] + last


def _set_payload(t: TamperTarget, **changes) -> None:
    t.tag.payload = replace(t.tag.payload, **changes)


def _set_slot(t: TamperTarget, **changes) -> None:
    slot = t.registry.state.records[t.wine_key]
    for name, value in changes.items():
        setattr(slot, name, value)


def _set_status(t: TamperTarget, **changes) -> None:
    t.record = replace(t.record, status=replace(t.record.status, **changes))


def _set_pedigree(t: TamperTarget, name: str) -> None:
    ped = t.record.pedigree
    t.record = replace(t.record, pedigree=replace(ped, **{name: getattr(ped, name) + "*"}))


def _mutated_entry(entry: SupplyChainEntry, name: str) -> SupplyChainEntry:
    value = getattr(entry, name)
    if name == "gps":
        return replace(entry, gps=GeoPoint(value.latitude + 0.000001, value.longitude))
    if isinstance(value, int):
        return replace(entry, **{name: value + 1})
    return replace(entry, **{name: _bump_uuid(value)})


def _set_entry(t: TamperTarget, index: int, name: str) -> None:
    entries = list(t.record.supply_chain_data)
    entries[index] = _mutated_entry(entries[index], name)
    t.record = replace(t.record, supply_chain_data=tuple(entries))


def _set_txref(t: TamperTarget, index: int, name: str) -> None:
    refs = list(t.record.transaction_data)
    ref = refs[index]
    if name == "transaction_hash":
        refs[index] = TransactionRef(_flip_hex(ref.transaction_hash), ref.block_number)
    else:
        refs[index] = TransactionRef(ref.transaction_hash, ref.block_number + 1)
    t.record = replace(t.record, transaction_data=tuple(refs))


def _other_member(t: TamperTarget) -> str:
    owner = t.registry.state.records[t.wine_key].owner
    return next(a for a in sorted(t.registry.state.members) if a != owner)


def _corrupt_store(t: TamperTarget) -> None:
    address = t.registry.state.records[t.wine_key].content_hash
    blob = t.store.get(address)
    t.store.corrupt(address, blob[:-2] + b" }")


def _build_points() -> dict[str, Mutation]:
    points: dict[str, Mutation] = {
        # the tag
        "tag.tag_id": lambda t: setattr(t.tag, "tag_id", _bump_uuid(t.tag.tag_id)),
        "tag.password": lambda t: setattr(t.tag, "password", b"\xde\xad\xbe\xef"),
        "tag.read_counter": lambda t: setattr(t.tag, "read_counter", 0),
        "tag.payload.wine_id": lambda t: _set_payload(t, wine_id=_bump_uuid(t.tag.payload.wine_id)),
        "tag.payload.signature": lambda t: _set_payload(
            t, signature=t.tag.payload.signature[:10] + bytes([t.tag.payload.signature[10] ^ 1])
            + t.tag.payload.signature[11:]),
        "tag.payload.write_count": lambda t: _set_payload(t, write_count=t.tag.payload.write_count + 1),
        "tag.payload.replayed": lambda t: setattr(t.tag, "payload", t.fixture.stale_payload),
        "tag.payload.other_wine": lambda t: setattr(
            t.tag, "payload", t.fixture.ctx.tags[t.fixture.other_wine_id].payload),
        # the on-chain slot
        "slot.content_hash": lambda t: _set_slot(t, content_hash=content_hash(b"forged subset")),
        "slot.tag_key": lambda t: _set_slot(t, tag_key=_flip_hex(t.registry.state.records[t.wine_key].tag_key)),
        "slot.write_count": lambda t: _set_slot(t, write_count=t.registry.state.records[t.wine_key].write_count + 1),
        "slot.owner": lambda t: _set_slot(t, owner=_other_member(t)),
        # the content store
        "store.subset_bytes": _corrupt_store,
        # the off-chain record
        "db.wine_id": lambda t: setattr(t, "record", replace(t.record, wine_id=_bump_uuid(t.record.wine_id))),
        "db.status.latest_supply_chain_id": lambda t: _set_status(
            t, latest_supply_chain_id=_bump_uuid(t.record.status.latest_supply_chain_id)),
        "db.status.latest_tag_id": lambda t: _set_status(t, latest_tag_id=_bump_uuid(t.record.status.latest_tag_id)),
        "db.status.tag_read_count": lambda t: _set_status(t, tag_read_count=t.record.status.tag_read_count + 1000),
    }
    for f in fields(WinePedigree):
        points[f"db.pedigree.{f.name}"] = lambda t, n=f.name: _set_pedigree(t, n)
    return points


_STATIC_POINTS = _build_points()
ENTRY_FIELDS = [f.name for f in fields(SupplyChainEntry)]
TXREF_FIELDS = ["transaction_hash", "block_number"]


def mutation_points(fixture: ValidationFixture) -> dict[str, Mutation]:
    """Every single-point mutation applicable to ``fixture``'s record."""
    points = dict(_STATIC_POINTS)
    record = fixture.record
    for i in range(len(record.supply_chain_data)):
        for name in ENTRY_FIELDS:
            points[f"db.supply_chain_data[{i}].{name}"] = lambda t, i=i, n=name: _set_entry(t, i, n)
    for i in range(len(record.transaction_data)):
        for name in TXREF_FIELDS:
            points[f"db.transaction_data[{i}].{name}"] = lambda t, i=i, n=name: _set_txref(t, i, n)
    return points


def validate_with(fixture: ValidationFixture, mutation: Mutation | None = None) -> ValidationResult:
    """Validate a private copy of the fixture, optionally after one mutation."""
    ctx = fixture.ctx
    target = TamperTarget(
        tag=copy.deepcopy(fixture.tag),
        record=fixture.record,
        registry=ctx.registry.copy(),
        store=ctx.store.copy(),
        wine_key=wine_key_of(fixture.wine_id),
        fixture=fixture,
    )
    if mutation is not None:
        mutation(target)
    validator = ctx.member(fixture.validator)
    password = ctx.password_for(fixture.tag.tag_id)
    result, _ = three_layer_validate(
        target.tag, password, target.record, target.registry, target.store,
        ctx._scan(validator), ctx.ledger, ctx.ids,
    )
    return result


def classify_tamper(fixture: ValidationFixture, tampered_field: str) -> RejectionReason | None:
    """Reason validation gives after tampering ``tampered_field``; None means PASS."""
    points = mutation_points(fixture)
    if tampered_field not in points:
        raise UnknownField(tampered_field)
    return validate_with(fixture, points[tampered_field]).reason
