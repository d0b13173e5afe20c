"""Consortium formation and the end-to-end wine-record operations.

One :class:`Consortium` hosts every service of the hybrid deployment in a
single process: per-member keys in a vault, the ledger (with the registry as
its state machine), the content store, the off-chain record database and the
physical tags. Every operation is traced stage by stage against a simulated
latency model so decentralized and centralized runs can be compared.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from typing import Iterable

from .crypto import KeyPair, KeyVault, generate_keypair, sign
from .errors import (
    ConsortiumNotFormed,
    MissingAdmin,
    MissingWinemaker,
    Unauthorized,
    UnknownMember,
    UnknownWine,
    ValidationFailed,
)
from .ledger.chain import ChainConfig, DEFAULT_GAS_LIMIT, DEFAULT_INTERVAL, Engine, export_jsonl
from .ledger.engines import Ledger
from .records import (
    GeoPoint,
    SeededIds,
    SupplyChainEntry,
    TransactionRef,
    WinePedigree,
    WineRecord,
    add_transaction_ref,
    append_supply_chain_entry,
    build_subset,
    encode,
    encode_subset,
    extract_subset,
    new_record,
    status_after,
)
from .registry import (
    GasReceipt,
    Registry,
    Role,
    append_message,
    append_tx,
    create_message,
    create_tx,
    register_tx,
    tag_key_of,
    transfer_message,
    transfer_tx,
    wine_key_of,
)
from .store import ContentStore, content_hash
from .validation import NfcTag, ScanContext, TagPayload, ValidationResult, tag_message, tag_write, three_layer_validate


def _derive(*parts: object) -> bytes:
    return hashlib.sha3_256("/".join(str(p) for p in parts).encode()).digest()


# -- latency model -----------------------------------------------------------


@dataclass(frozen=True)
class StageCosts:
    """Simulated seconds per pipeline stage.

    Defaults put decentralized creation near 1.34x the centralized baseline;
    they are a calibration, not a measurement.
    """

    request: float = 0.120
    db_read: float = 0.012
    db_write: float = 0.025
    tag_read: float = 0.015
    tag_write: float = 0.015
    sign: float = 0.006
    recover: float = 0.004
    store_put: float = 0.018
    store_get: float = 0.010
    chain_read: float = 0.008
    tx_submit: float = 0.025

    def cost(self, stages: Iterable[str]) -> float:
        return sum(getattr(self, s) for s in stages)


CREATE_STAGES = {
    "decentralized": ("request", "db_write", "tag_write", "sign", "sign", "store_put", "tx_submit"),
    "baseline": ("request", "db_write", "tag_write"),
}
VALIDATE_STAGES = {
    "decentralized": ("request", "tag_read", "db_read", "recover", "chain_read", "store_get"),
    "baseline": ("request", "tag_read", "db_read"),
}
APPEND_STAGES = {
    "decentralized": VALIDATE_STAGES["decentralized"]
    + ("sign", "sign", "store_put", "tx_submit", "db_write", "tag_write"),
    "baseline": VALIDATE_STAGES["baseline"] + ("db_write", "tag_write"),
}
TRANSFER_STAGES = {
    "decentralized": VALIDATE_STAGES["decentralized"]
    + ("sign", "sign", "sign", "store_put", "tx_submit", "tx_submit", "db_write", "tag_write"),
    "baseline": VALIDATE_STAGES["baseline"] + ("db_write", "tag_write"),
}


@dataclass(frozen=True)
class OpTrace:
    op: str
    mode: str
    stages: tuple[str, ...]
    latency: float
    ok: bool = True
    chain_txs: int = 0


# -- members -----------------------------------------------------------------


@dataclass(frozen=True)
class MemberSpec:
    member_id: str
    role: Role

    def __post_init__(self) -> None:
        object.__setattr__(self, "role", Role(self.role))


@dataclass(frozen=True)
class Member:
    member_id: str
    role: Role
    address: str
    token: bytes = field(repr=False)
    node_id: str = ""
    device_id: str = ""
    gps: GeoPoint = GeoPoint(0.0, 0.0)

    @property
    def is_authority(self) -> bool:
        return self.role is not Role.WINE_CONSUMER


@dataclass(frozen=True)
class ChainSettings:
    engine: Engine = Engine.CLIQUE
    block_interval: int = DEFAULT_INTERVAL
    gas_limit: int = DEFAULT_GAS_LIMIT

    def __post_init__(self) -> None:
        object.__setattr__(self, "engine", Engine(self.engine))


DEFAULT_PEDIGREE = WinePedigree(
    producer="Hollow Creek Estate",
    vintage="2018",
    varietal="Shiraz",
    bottling="750 mL, cork",
    project="export programme",
)


class Consortium:
    """A running scenario. Call :meth:`form` before any data operation."""

    mode = "decentralized"

    def __init__(self, roster: Iterable[MemberSpec], settings: ChainSettings = ChainSettings(),
                 seed: int = 0, costs: StageCosts = StageCosts()) -> None:
        self.roster = [m if isinstance(m, MemberSpec) else MemberSpec(*m) for m in roster]
        self.settings = settings
        self.seed = seed
        self.costs = costs
        self.ids = SeededIds(f"consortium/{seed}")
        self.vault = KeyVault()
        self.members: dict[str, Member] = {}
        self.store = ContentStore()
        self.db: dict[str, WineRecord] = {}
        self.tags: dict[str, NfcTag] = {}
        self._tag_passwords: dict[str, bytes] = {}
        self.traces: list[OpTrace] = []
        self.validation_reports: list[dict] = []
        self.ledger: Ledger | None = None
        self.registry: Registry | None = None
        self.formed = False

    # -- initialization phase -------------------------------------------

    def form(self) -> "Consortium":
        roles = [m.role for m in self.roster]
        if Role.CONSORTIUM_ADMIN not in roles:
            raise MissingAdmin("roster needs a consortium administrator")
        if Role.WINEMAKER not in roles:
            raise MissingWinemaker("roster needs at least one winemaker")
        rng = random.Random(f"gps/{self.seed}")
        keys: dict[str, KeyPair] = {}
        for spec in self.roster:
            if spec.member_id in self.members:
                raise ValueError(f"duplicate member id {spec.member_id!r}")
            keypair = generate_keypair(_derive("key", self.seed, spec.member_id))
            token = _derive("vault-token", self.seed, spec.member_id)
            self.vault.store(spec.member_id, keypair, token)
            member = Member(
                member_id=spec.member_id,
                role=spec.role,
                address=keypair.address,
                token=token,
                node_id=self.ids(),
                device_id=self.ids(),
                gps=GeoPoint(rng.uniform(-45, 45), rng.uniform(-180, 180)),
            )
            self.members[spec.member_id] = member
            if member.is_authority:
                keys[member.address] = keypair

        admin = next(m for m in self.members.values() if m.role is Role.CONSORTIUM_ADMIN)
        authorities = tuple(m.address for m in self.members.values() if m.is_authority)
        config = ChainConfig(authorities, self.settings.block_interval, self.settings.gas_limit,
                             self.settings.engine)
        self.registry = Registry(admin.address)
        self.ledger = Ledger(config, keys, self.registry)
        for member in self.members.values():
            if member is not admin:
                self.ledger.submit(register_tx(admin.address, member.address, member.role))
        self._seal()
        self.formed = True
        return self

    # -- helpers --------------------------------------------------------------

    def _require_formed(self) -> None:
        if not self.formed:
            raise ConsortiumNotFormed("form the consortium before processing data")

    def member(self, member_id: str) -> Member:
        try:
            return self.members[member_id]
        except KeyError:
            raise UnknownMember(member_id) from None

    def _key(self, member: Member) -> KeyPair:
        return self.vault.fetch(member.member_id, member.token)

    def _seal(self):
        block = self.ledger.seal_block()
        if block is None:  # IBFT round failure; try the next height
            block = self.ledger.seal_block()
        failed = [r for r in block.receipts if not r.success]
        if failed:
            raise RuntimeError(f"sealed transaction reverted: {failed[0].error}")
        return block

    def _next_timestamp(self) -> int:
        return self.ledger.clock + self.ledger.config.block_interval

    def _scan(self, member: Member) -> ScanContext:
        return ScanContext(member.node_id, member.device_id, self._next_timestamp(), member.gps, member.address)

    def _trace(self, op: str, stages: tuple[str, ...], ok: bool = True, chain_txs: int = 0) -> None:
        self.traces.append(OpTrace(op, self.mode, stages, self.costs.cost(stages), ok, chain_txs))

    def password_for(self, tag_id: str) -> bytes:
        return self._tag_passwords[tag_id]

    def new_tag(self) -> NfcTag:
        tag_id = self.ids()
        password = _derive("tag-password", self.seed, tag_id)[:4]  # NTAG PWD is 32 bits
        self._tag_passwords[tag_id] = password
        return NfcTag(tag_id=tag_id, password=password)

    def record(self, wine_id: str) -> WineRecord:
        try:
            return self.db[wine_id]
        except KeyError:
            raise UnknownWine(wine_id) from None

    # -- data processing phase ------------------------------------------------

    def op_create(self, winemaker_id: str, pedigree: WinePedigree = DEFAULT_PEDIGREE,
                  tag: NfcTag | None = None) -> tuple[WineRecord, GasReceipt]:
        self._require_formed()
        maker = self.member(winemaker_id)
        if maker.role is not Role.WINEMAKER:
            raise Unauthorized(f"{winemaker_id} is not a winemaker")
        tag = tag or self.new_tag()
        self._tag_passwords.setdefault(tag.tag_id, tag.password)
        wine_id = self.ids()
        entry = SupplyChainEntry(maker.node_id, maker.device_id, tag.tag_id, tag.read_counter,
                                 self._next_timestamp(), maker.gps)
        record = new_record(wine_id, pedigree, entry)
        blob = encode_subset(extract_subset(record))
        address = content_hash(blob)
        key = self._key(maker)
        wine_key, tag_key = wine_key_of(wine_id), tag_key_of(tag.tag_id)
        tx = create_tx(maker.address, wine_key, tag_key, address, sign(create_message(wine_key, tag_key, address), key))
        self.ledger.submit(tx)
        block = self._seal()

        self.store.put(blob)
        tag_write(tag, tag.password, TagPayload(wine_id, sign(tag_message(wine_id, tag.tag_id, 1), key), 1))
        record = add_transaction_ref(record, TransactionRef(tx.hash, block.number))
        self.db[wine_id] = record
        self.tags[wine_id] = tag
        self._trace("create", CREATE_STAGES[self.mode], chain_txs=1)
        return record, GasReceipt("createWineRecord", tx.gas_used, tx.hash, block.number)

    def _validate(self, member: Member, wine_id: str, tag: NfcTag | None = None) -> ValidationResult:
        record = self.record(wine_id)
        tag = tag or self.tags[wine_id]
        password = self._tag_passwords.get(tag.tag_id, b"")
        result, updated = three_layer_validate(
            tag, password, record, self.registry, self.store, self._scan(member), self.ledger, self.ids
        )
        self.db[wine_id] = updated
        self.validation_reports.append(result.to_doc() | {"validator": member.member_id})
        return result

    def op_validate(self, member_id: str, wine_id: str, tag: NfcTag | None = None) -> ValidationResult:
        self._require_formed()
        member = self.member(member_id)
        self.record(wine_id)
        result = self._validate(member, wine_id, tag)
        self._trace("validate", VALIDATE_STAGES[self.mode], ok=result.passed)
        return result

    def op_transfer(self, from_id: str, to_id: str, wine_id: str,
                    tag: NfcTag | None = None) -> tuple[WineRecord, GasReceipt]:
        """Receiver validates, then append (new subset) and transfer are sealed
        together and the receiver rewrites the tag with the next write count."""
        self._require_formed()
        sender, receiver = self.member(from_id), self.member(to_id)
        self.record(wine_id)
        appender = receiver if receiver.role is Role.SUPPLY_CHAIN_PARTICIPANT else sender
        return self._advance("transfer", receiver, appender, receiver, wine_id, tag, handed_by=sender)

    def op_append(self, member_id: str, wine_id: str, tag: NfcTag | None = None) -> tuple[WineRecord, GasReceipt]:
        """The current owner logs a supply-chain step without handing the wine on."""
        self._require_formed()
        member = self.member(member_id)
        self.record(wine_id)
        if self.registry.slot(wine_key_of(wine_id)).owner != member.address:
            raise Unauthorized(f"{member_id} does not hold {wine_id}")
        return self._advance("append", member, member, member, wine_id, tag)

    def _advance(self, op: str, scanner: Member, appender: Member, tag_signer: Member, wine_id: str,
                 tag: NfcTag | None, handed_by: Member | None = None) -> tuple[WineRecord, GasReceipt]:
        tag = tag or self.tags[wine_id]
        result = self._validate(scanner, wine_id, tag)
        if not result.passed:
            self._trace(op, VALIDATE_STAGES[self.mode], ok=False)
            raise ValidationFailed(result.reason)

        record = self.db[wine_id]
        wine_key = wine_key_of(wine_id)
        count = self.registry.slot(wine_key).write_count
        entry = SupplyChainEntry(scanner.node_id, scanner.device_id, tag.tag_id, tag.read_counter,
                                 self._next_timestamp(), scanner.gps)
        status = status_after(record.status, entry)
        blob = encode_subset(build_subset(wine_id, status, entry, record.pedigree, count + 1))
        address = content_hash(blob)

        append = append_tx(appender.address, wine_key, address, count,
                           sign(append_message(wine_key, address, count), self._key(appender)))
        txs = [append]
        if handed_by is not None:
            txs.append(transfer_tx(handed_by.address, wine_key, tag_signer.address,
                                   sign(transfer_message(wine_key, tag_signer.address), self._key(handed_by))))
        submitted = []
        try:
            for tx in txs:
                self.ledger.submit(tx)
                submitted.append(tx)
        except Exception:
            for tx in submitted:
                self.ledger.withdraw(tx)
            raise
        block = self._seal()

        self.store.put(blob)
        record = append_supply_chain_entry(record, entry, TransactionRef(append.hash, block.number))
        self.db[wine_id] = record
        tag_write(tag, tag.password, TagPayload(
            wine_id, sign(tag_message(wine_id, tag.tag_id, count + 1), self._key(tag_signer)), count + 1))
        self.tags[wine_id] = tag
        stages = TRANSFER_STAGES[self.mode] if handed_by else APPEND_STAGES[self.mode]
        self._trace(op, stages, chain_txs=len(txs))
        return record, GasReceipt("appendWineRecord", append.gas_used, append.hash, block.number)

    # -- checks and exports ---------------------------------------------------

    def agreement(self, wine_id: str) -> dict[str, bool]:
        """Four-way agreement for one wine: db subset, store, chain, tag."""
        record = self.record(wine_id)
        blob = encode_subset(extract_subset(record))
        slot = self.registry.slot(wine_key_of(wine_id))
        tag = self.tags[wine_id]
        stored = self.store.get(slot.content_hash) if slot.content_hash in self.store else None
        return {
            "subset_equals_store": stored == blob,
            "store_hash_on_chain": content_hash(blob) == slot.content_hash,
            "tag_count_on_chain": tag.payload is not None and tag.payload.write_count == slot.write_count,
            "tag_key_on_chain": tag_key_of(tag.tag_id) == slot.tag_key,
        }

    def export_chain(self) -> str:
        return export_jsonl(self.ledger.blocks, self.ledger.config)

    def export_records(self) -> dict[str, str]:
        return {wine_id: encode(record).decode() for wine_id, record in sorted(self.db.items())}

    def latency_by_op(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for t in self.traces:
            out[t.op] = out.get(t.op, 0.0) + t.latency
        return out


def form_consortium(roster: Iterable[MemberSpec | tuple[str, str]], settings: ChainSettings = ChainSettings(),
                    seed: int = 0, costs: StageCosts = StageCosts()) -> Consortium:
    return Consortium(roster, settings, seed, costs).form()


class CentralizedBaseline:
    """The legacy flow: the same operations against the database only.

    No ledger, no content store, no signatures; tags carry the wine id and a
    write count so the operation shape matches.
    """

    mode = "baseline"

    def __init__(self, roster: Iterable[MemberSpec | tuple[str, str]], seed: int = 0,
                 costs: StageCosts = StageCosts()) -> None:
        self.costs = costs
        self.ids = SeededIds(f"baseline/{seed}")
        self.members = {}
        for spec in roster:
            spec = spec if isinstance(spec, MemberSpec) else MemberSpec(*spec)
            self.members[spec.member_id] = Member(spec.member_id, spec.role, "", b"", self.ids(), self.ids())
        self.db: dict[str, WineRecord] = {}
        self.tags: dict[str, NfcTag] = {}
        self.traces: list[OpTrace] = []
        self.clock = 0
        self.chain_transactions = 0

    def _tick(self) -> int:
        self.clock += 1
        return self.clock

    def _trace(self, op: str, stages: tuple[str, ...]) -> None:
        self.traces.append(OpTrace(op, self.mode, stages, self.costs.cost(stages)))

    def op_create(self, winemaker_id: str, pedigree: WinePedigree = DEFAULT_PEDIGREE) -> WineRecord:
        maker = self.members[winemaker_id]
        if maker.role is not Role.WINEMAKER:
            raise Unauthorized(f"{winemaker_id} is not a winemaker")
        tag = NfcTag(self.ids(), b"pwd0")
        wine_id = self.ids()
        entry = SupplyChainEntry(maker.node_id, maker.device_id, tag.tag_id, 0, self._tick(), maker.gps)
        record = new_record(wine_id, pedigree, entry)
        tag_write(tag, tag.password, TagPayload(wine_id, b"", 1))
        self.db[wine_id], self.tags[wine_id] = record, tag
        self._trace("create", CREATE_STAGES[self.mode])
        return record

    def op_validate(self, member_id: str, wine_id: str) -> bool:
        tag = self.tags[wine_id]
        tag.read_counter += 1
        ok = tag.payload is not None and tag.payload.wine_id == wine_id
        self._trace("validate", VALIDATE_STAGES[self.mode])
        return ok

    def op_transfer(self, from_id: str, to_id: str, wine_id: str) -> WineRecord:
        return self._advance("transfer", self.members[to_id], wine_id, TRANSFER_STAGES[self.mode])

    def op_append(self, member_id: str, wine_id: str) -> WineRecord:
        return self._advance("append", self.members[member_id], wine_id, APPEND_STAGES[self.mode])

    def _advance(self, op: str, scanner: Member, wine_id: str, stages: tuple[str, ...]) -> WineRecord:
        tag = self.tags[wine_id]
        tag.read_counter += 1
        record = self.db[wine_id]
        entry = SupplyChainEntry(scanner.node_id, scanner.device_id, tag.tag_id, tag.read_counter,
                                 self._tick(), scanner.gps)
        ref = TransactionRef("0x" + hashlib.sha3_256(f"{wine_id}/{self.clock}".encode()).hexdigest(), 0)
        record = append_supply_chain_entry(record, entry, ref)
        tag_write(tag, tag.password, TagPayload(wine_id, b"", record.write_count))
        self.db[wine_id] = record
        self._trace(op, stages)
        return record

    def latency_by_op(self) -> dict[str, float]:
        out: dict[str, float] = {}
        for t in self.traces:
            out[t.op] = out.get(t.op, 0.0) + t.latency
        return out


def centralized_baseline(ctx: Consortium) -> CentralizedBaseline:
    return CentralizedBaseline(ctx.roster, ctx.seed, ctx.costs)


# -- scenario files -------------------------------------------------------------


@dataclass
class Scenario:
    roster: list[MemberSpec]
    settings: ChainSettings = ChainSettings()
    operations: list[dict] = field(default_factory=list)
    seed: int = 0

    @classmethod
    def from_doc(cls, doc: dict) -> "Scenario":
        cfg = doc.get("config", {})
        return cls(
            roster=[MemberSpec(m["member_id"], m["role"]) for m in doc["roster"]],
            settings=ChainSettings(
                engine=Engine(cfg.get("engine", "clique")),
                block_interval=cfg.get("block_interval", DEFAULT_INTERVAL),
                gas_limit=cfg.get("gas_limit", DEFAULT_GAS_LIMIT),
            ),
            operations=list(doc.get("operations", [])),
            seed=doc.get("seed", 0),
        )

    def to_doc(self) -> dict:
        return {
            "seed": self.seed,
            "config": {"engine": self.settings.engine.value, "block_interval": self.settings.block_interval,
                       "gas_limit": self.settings.gas_limit},
            "roster": [{"member_id": m.member_id, "role": m.role.value} for m in self.roster],
            "operations": list(self.operations),
        }

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_doc(json.load(fh))


def default_scenario(seed: int = 0) -> Scenario:
    """Administrator, one winemaker, two participants, one consumer."""
    return Scenario(
        roster=[
            MemberSpec("admin", Role.CONSORTIUM_ADMIN),
            MemberSpec("winemaker", Role.WINEMAKER),
            MemberSpec("distributor", Role.SUPPLY_CHAIN_PARTICIPANT),
            MemberSpec("retailer", Role.SUPPLY_CHAIN_PARTICIPANT),
            MemberSpec("consumer", Role.WINE_CONSUMER),
        ],
        seed=seed,
    )


def apply_operation(ctx: Consortium, op: dict, aliases: dict[str, str]) -> dict:
    """Run one scenario operation; wines are referred to by alias."""
    kind = op["op"]
    if kind == "create":
        pedigree = WinePedigree(**op["pedigree"]) if "pedigree" in op else DEFAULT_PEDIGREE
        record, receipt = ctx.op_create(op["member"], pedigree)
        aliases[op.get("wine", record.wine_id)] = record.wine_id
        return {"op": kind, "wine_id": record.wine_id, "gas": receipt.gas, "block": receipt.block_number}
    wine_id = aliases.get(op["wine"], op["wine"])
    if kind == "transfer":
        record, receipt = ctx.op_transfer(op["from"], op["to"], wine_id)
        return {"op": kind, "wine_id": wine_id, "gas": receipt.gas, "block": receipt.block_number,
                "write_count": record.write_count}
    if kind == "append":
        record, receipt = ctx.op_append(op["member"], wine_id)
        return {"op": kind, "wine_id": wine_id, "gas": receipt.gas, "block": receipt.block_number,
                "write_count": record.write_count}
    if kind == "validate":
        return {"op": kind, "wine_id": wine_id} | ctx.op_validate(op["member"], wine_id).to_doc()
    raise ValueError(f"unknown operation {kind!r}")


def run_scenario(scenario: Scenario) -> tuple[Consortium, list[dict]]:
    ctx = form_consortium(scenario.roster, scenario.settings, scenario.seed)
    aliases: dict[str, str] = {}
    results = [apply_operation(ctx, op, aliases) for op in scenario.operations]
    return ctx, results
