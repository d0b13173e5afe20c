import json
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from winetrace.errors import DuplicateRejection, InvalidPedigree, MalformedRecord, NonMonotonicTimestamp
from winetrace.fixtures import SAMPLE_CREATION_ENTRY, SAMPLE_PEDIGREE, SAMPLE_TX_REF, SAMPLE_WINE_ID, sample_record
from winetrace.records import (
    GeoPoint,
    RejectionEntry,
    RejectionReason,
    SeededIds,
    SupplyChainEntry,
    TransactionRef,
    WinePedigree,
    WineRecord,
    WineStatus,
    append_rejection,
    append_supply_chain_entry,
    decode,
    decode_subset,
    encode,
    encode_subset,
    encoded_size,
    extract_subset,
    new_record,
    subset_to_doc,
)

ids = SeededIds("records-test")
TARGET, TOLERANCE = 2900, 0.15
APPEND_FLOOR, REJECTION_FLOOR = 806, 313


def entry(ts: int, reads: int = 1, lat: float = -34.5, lon: float = 138.9) -> SupplyChainEntry:
    return SupplyChainEntry(ids(), ids(), ids(), reads, ts, GeoPoint(lat, lon))


def txref(n: int) -> TransactionRef:
    return TransactionRef("0x" + f"{n:064x}", n)


def rejection(reason=RejectionReason.CLONE_DETECTED, ts: int = 10) -> RejectionEntry:
    return RejectionEntry(ids(), reason, ids(), ids(), ids(), ts, GeoPoint(1.5, 2.5))


# -- construction ------------------------------------------------------------------


def test_new_record_has_one_entry_and_status_from_context():
    ctx = entry(0, reads=3)
    record = new_record(SAMPLE_WINE_ID, SAMPLE_PEDIGREE, ctx)
    assert record.supply_chain_data == (ctx,)
    assert record.unsuccessful_validation_data == ()
    assert record.status == WineStatus(ctx.supply_chain_id, ctx.tag_id, 3)


@pytest.mark.parametrize("producer", ["", "   "])
def test_pedigree_without_producer_is_rejected(producer):
    with pytest.raises(InvalidPedigree):
        new_record(SAMPLE_WINE_ID, replace(SAMPLE_PEDIGREE, producer=producer), entry(0))


def test_wine_id_must_be_uuid():
    with pytest.raises(MalformedRecord):
        new_record("not-a-uuid", SAMPLE_PEDIGREE, entry(0))


def test_transaction_hash_shape_is_enforced():
    with pytest.raises(MalformedRecord):
        TransactionRef("0x1234", 1)


def test_seeded_ids_are_reproducible_v4_uuids():
    a, b = SeededIds(7), SeededIds(7)
    first = [a() for _ in range(5)]
    assert first == [b() for _ in range(5)]
    assert all(u[14] == "4" for u in first)


def test_gps_is_fixed_to_six_decimals():
    assert GeoPoint(1.23456789, -2.0000004) == GeoPoint(1.234568, -2.0)


# -- appends and sizes ----------------------------------------------------------------------


def test_sample_record_size_is_near_target():
    size = encoded_size(sample_record())
    assert abs(size - TARGET) <= TOLERANCE * TARGET, size


def test_append_adds_entry_ref_and_at_least_floor_bytes():
    record = sample_record()
    e = entry(SAMPLE_CREATION_ENTRY.timestamp + 60)
    grown = append_supply_chain_entry(record, e, txref(2))
    assert len(grown.supply_chain_data) == len(record.supply_chain_data) + 1
    assert len(grown.transaction_data) == len(record.transaction_data) + 1
    assert grown.status.latest_supply_chain_id == e.supply_chain_id
    assert encoded_size(grown) - encoded_size(record) >= APPEND_FLOOR


def test_append_with_earlier_timestamp_is_rejected():
    record = sample_record()
    with pytest.raises(NonMonotonicTimestamp):
        append_supply_chain_entry(record, entry(SAMPLE_CREATION_ENTRY.timestamp - 1), txref(2))


def test_identical_appends_are_distinct_entries_with_equal_deltas():
    record = sample_record()
    e = entry(SAMPLE_CREATION_ENTRY.timestamp + 5)
    once = append_supply_chain_entry(record, e, txref(2))
    twice = append_supply_chain_entry(once, e, txref(3))
    assert len(twice.supply_chain_data) == 3
    assert encoded_size(once) - encoded_size(record) == encoded_size(twice) - encoded_size(once)


def test_rejection_adds_at_least_floor_bytes():
    record = sample_record()
    grown = append_rejection(record, rejection())
    assert len(grown.unsuccessful_validation_data) == 1
    assert encoded_size(grown) - encoded_size(record) >= REJECTION_FLOOR


def test_duplicate_rejection_id_is_rejected():
    r = rejection()
    record = append_rejection(sample_record(), r)
    with pytest.raises(DuplicateRejection):
        append_rejection(record, replace(r, reason=RejectionReason.DB_MISMATCH))


def test_clone_reason_round_trips():
    record = append_rejection(sample_record(), rejection(RejectionReason.CLONE_DETECTED))
    back = decode(encode(record))
    assert back.unsuccessful_validation_data[0].reason is RejectionReason.CLONE_DETECTED


def test_empty_lists_record_has_fixed_baseline_size():
    status = WineStatus(ids(), ids(), 0)
    a = WineRecord(SAMPLE_WINE_ID, SAMPLE_PEDIGREE, status)
    b = WineRecord(SAMPLE_WINE_ID, SAMPLE_PEDIGREE, status)
    assert encoded_size(a) == encoded_size(b) == len(encode(a))
    assert decode(encode(a)) == a


def test_encoding_is_sorted_compact_utf8_json():
    data = encode(sample_record())
    doc = json.loads(data)
    assert data == json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode()


def test_decode_rejects_garbage():
    with pytest.raises(MalformedRecord):
        decode(b"{not json")
    with pytest.raises(MalformedRecord):
        decode(b"{}")


# -- subsets -----------------------------------------------------------------------------


def test_subset_is_deterministic_bytes():
    assert encode_subset(extract_subset(sample_record())) == encode_subset(extract_subset(sample_record()))


def test_subset_ignores_rejections():
    record = sample_record()
    assert encode_subset(extract_subset(record)) == encode_subset(
        extract_subset(append_rejection(record, rejection()))
    )


def test_subset_field_set():
    doc = subset_to_doc(extract_subset(sample_record()))
    names = {key.rsplit(":", 1)[1] for key in doc}
    assert names == {"wine_id", "wine_status", "latest_supply_chain_data", "wine_pedigree_digest", "write_count"}


def test_subset_round_trips():
    subset = extract_subset(sample_record())
    assert decode_subset(encode_subset(subset)) == subset
    assert subset.write_count == 1


# -- properties --------------------------------------------------------------------------

uuids = st.uuids(version=4).map(str)
texts = st.text(min_size=0, max_size=40)
points = st.builds(GeoPoint, st.floats(-90, 90, allow_nan=False), st.floats(-180, 180, allow_nan=False))


@st.composite
def records(draw):
    pedigree = WinePedigree(draw(texts.filter(lambda s: s.strip())), draw(texts), draw(texts), draw(texts),
                            draw(texts))
    ts = draw(st.integers(0, 10**9))
    steps = draw(st.lists(st.tuples(st.integers(0, 10**4), st.integers(0, 50)), max_size=4))
    first = SupplyChainEntry(draw(uuids), draw(uuids), draw(uuids), 0, ts, draw(points))
    record = new_record(draw(uuids), pedigree, first)
    for i, (gap, reads) in enumerate(steps):
        ts += gap
        e = SupplyChainEntry(draw(uuids), draw(uuids), draw(uuids), reads, ts, draw(points))
        record = append_supply_chain_entry(record, e, TransactionRef("0x" + draw(st.binary(min_size=32, max_size=32)).hex(), i))
    for _ in range(draw(st.integers(0, 3))):
        try:
            record = append_rejection(record, RejectionEntry(draw(uuids), draw(st.sampled_from(RejectionReason)),
                                                             draw(uuids), draw(uuids), draw(uuids), ts, draw(points)))
        except DuplicateRejection:
            pass
    return record


@given(records())
def test_encoding_round_trips(record):
    assert decode(encode(record)) == record


@given(records(), st.integers(0, 10**4), st.integers(0, 100))
def test_appends_are_prefix_preserving_and_size_monotone(record, gap, reads):
    ts = record.supply_chain_data[-1].timestamp + gap
    grown = append_supply_chain_entry(record, entry(ts, reads), txref(99))
    assert grown.supply_chain_data[: len(record.supply_chain_data)] == record.supply_chain_data
    assert grown.transaction_data[: len(record.transaction_data)] == record.transaction_data
    assert grown.unsuccessful_validation_data == record.unsuccessful_validation_data
    assert grown.status.tag_read_count >= record.status.tag_read_count
    assert encoded_size(grown) - encoded_size(record) >= APPEND_FLOOR


@given(records())
def test_rejection_delta_floor_holds(record):
    grown = append_rejection(record, rejection(ts=0))
    assert grown.unsuccessful_validation_data[:-1] == record.unsuccessful_validation_data
    assert encoded_size(grown) - encoded_size(record) >= REJECTION_FLOOR


@given(records())
def test_status_tracks_last_entry(record):
    assert record.status.latest_supply_chain_id == record.supply_chain_data[-1].supply_chain_id


def test_sample_constants_are_consistent():
    assert sample_record().transaction_data == (SAMPLE_TX_REF,)
    assert sample_record().wine_id == SAMPLE_WINE_ID
