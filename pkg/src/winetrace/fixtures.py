"""Reference data: the sample wine record used for size and gas calibration."""

from __future__ import annotations

from .records import (
    GeoPoint,
    SupplyChainEntry,
    TransactionRef,
    WinePedigree,
    WineRecord,
    add_transaction_ref,
    new_record,
)

SAMPLE_WINE_ID = "c11d44f4-3024-4fe6-a237-d236720867dc"

SAMPLE_PEDIGREE = WinePedigree(
    producer=(
        "Hollow Creek Estate Winery Pty Ltd (ABN 51 824 753 556), 148 Vineyard Road, "
        "Barossa Valley SA 5352, Australia; licensed producer no. LP-5352-0147; "
        "winemaker of record: estate winemaking team, Hollow Creek vineyard blocks 3 and 7"
    ),
    vintage="2018",
    varietal=(
        "Shiraz 92%, Viognier 8%; dry-grown bush vines planted 1962 on red-brown earth over "
        "ironstone; hand-picked 2018-03-02 to 2018-03-09 at 14.2 Baume; 20% whole bunch, "
        "open-fermented with wild yeast, basket-pressed; matured 18 months in French oak "
        "hogsheads (35% new, 300 L); unfined and unfiltered; alcohol 14.5% v/v"
    ),
    bottling=(
        "750 mL antique-green Bordeaux glass; bottled 2020-03-14 on estate line 2; batch "
        "L2003-14; 6,480 bottles across 540 cases of 12; natural cork closure with tamper "
        "capsule; NTAG 216 tag embedded beneath the capsule at bottling; cellar release 2021"
    ),
    project=(
        "Barossa single-vineyard provenance trial under the consortium export programme "
        "2020: NFC-tagged allocation for distributors and retailers in Hong Kong, "
        "Singapore and Shanghai with scan-on-receipt at every custody change"
    ),
)

SAMPLE_CREATION_ENTRY = SupplyChainEntry(
    supply_chain_id="7f9e2c1a-5b3d-4e8f-9a6b-1c2d3e4f5a6b",
    scan_device_id="3a8b9c0d-1e2f-4a5b-8c7d-9e0f1a2b3c4d",
    tag_id="e4d3c2b1-a0f9-4e8d-b7c6-5b4a3f2e1d0c",
    tag_read_count=1,
    timestamp=1584162000,
    gps=GeoPoint(-34.533200, 138.950700),
)

SAMPLE_TX_REF = TransactionRef(
    transaction_hash="0x5c504ed432cb51138bcf09aa5e8a410dd4a1e204ef84bfed1be16dfba1b22060",
    block_number=1284,
)


def sample_record() -> WineRecord:
    """Freshly created record: one production step and its transaction."""
    record = new_record(SAMPLE_WINE_ID, SAMPLE_PEDIGREE, SAMPLE_CREATION_ENTRY)
    return add_transaction_ref(record, SAMPLE_TX_REF)
