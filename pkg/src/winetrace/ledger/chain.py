"""Transactions, blocks, chain configuration and structural validation."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Callable, Iterable, Sequence

from ..canonical import canonical_json, hex32
from ..crypto import recover_address
from ..errors import InvalidSignature
from .clique import recency_limit
from .gas import DEFAULT_SCHEDULE, GasSchedule

ZERO_HASH = "0x" + "00" * 32
ZERO_ADDRESS = "0x" + "00" * 20
DEFAULT_GAS_LIMIT = 12_500_000_000
DEFAULT_INTERVAL = 5

UNSIGNED_HISTORY = "unsigned history"


class Engine(str, enum.Enum):
    CLIQUE = "clique"
    RAFT = "raft"
    IBFT = "ibft"

    @property
    def signed(self) -> bool:
        return self is not Engine.RAFT


@dataclass(frozen=True)
class ChainConfig:
    authorities: tuple[str, ...]
    block_interval: int = DEFAULT_INTERVAL
    gas_limit: int = DEFAULT_GAS_LIMIT
    engine: Engine = Engine.CLIQUE
    genesis_timestamp: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "authorities", tuple(self.authorities))
        object.__setattr__(self, "engine", Engine(self.engine))
        if not self.authorities:
            raise ValueError("authority set must be non-empty")
        if len(set(self.authorities)) != len(self.authorities):
            raise ValueError("authorities must be unique")
        if self.block_interval <= 0 or self.gas_limit <= 0:
            raise ValueError("block_interval and gas_limit must be positive")

    def to_doc(self) -> dict:
        return {
            "authorities": list(self.authorities),
            "block_interval": self.block_interval,
            "gas_limit": self.gas_limit,
            "engine": self.engine.value,
            "genesis_timestamp": self.genesis_timestamp,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ChainConfig":
        return cls(
            authorities=tuple(doc["authorities"]),
            block_interval=doc["block_interval"],
            gas_limit=doc["gas_limit"],
            engine=Engine(doc["engine"]),
            genesis_timestamp=doc.get("genesis_timestamp", 0),
        )

    def genesis_extra(self) -> str:
        return hex32(canonical_json(self.to_doc()))


def payload_bytes(method: str, args: dict) -> bytes:
    """Calldata: method name followed by canonical JSON arguments."""
    return method.encode("utf-8") + canonical_json(args)


@dataclass(frozen=True)
class Transaction:
    sender: str
    method: str
    args: dict
    gas_used: int
    hash: str

    @staticmethod
    def compute_hash(sender: str, method: str, args: dict, gas_used: int) -> str:
        return hex32(canonical_json({"sender": sender, "method": method, "args": args, "gas_used": gas_used}))

    @classmethod
    def create(cls, sender: str, method: str, args: dict, gas_used: int) -> "Transaction":
        return cls(sender, method, args, gas_used, cls.compute_hash(sender, method, args, gas_used))

    @property
    def payload(self) -> bytes:
        return payload_bytes(self.method, self.args)

    # transactions are never mutated in place, so the checks below are memoized
    @cached_property
    def hash_matches(self) -> bool:
        return self.hash == self.compute_hash(self.sender, self.method, self.args, self.gas_used)

    @cached_property
    def model_gas(self) -> int:
        """Gas under the registry's method table."""
        from ..registry import transaction_gas

        return transaction_gas(self.method, self.args)

    def to_doc(self) -> dict:
        return {"sender": self.sender, "method": self.method, "args": self.args,
                "gas_used": self.gas_used, "hash": self.hash}

    @classmethod
    def from_doc(cls, doc: dict) -> "Transaction":
        return cls(doc["sender"], doc["method"], doc["args"], doc["gas_used"], doc["hash"])


@dataclass(frozen=True)
class Receipt:
    tx_hash: str
    success: bool
    error: str | None = None
    events: tuple[dict, ...] = ()

    def to_doc(self) -> dict:
        return {"tx_hash": self.tx_hash, "success": self.success, "error": self.error,
                "events": list(self.events)}

    @classmethod
    def from_doc(cls, doc: dict) -> "Receipt":
        return cls(doc["tx_hash"], doc["success"], doc["error"], tuple(doc["events"]))


@dataclass(frozen=True)
class Block:
    number: int
    parent_hash: str
    timestamp: int
    signer: str
    signature: str
    transactions: tuple[Transaction, ...]
    receipts: tuple[Receipt, ...]
    gas_used: int
    gas_limit: int
    in_turn: bool
    extra: str = ""

    def header_doc(self) -> dict:
        return {
            "number": self.number,
            "parent_hash": self.parent_hash,
            "timestamp": self.timestamp,
            "signer": self.signer,
            "tx_root": hex32(canonical_json([tx.hash for tx in self.transactions])),
            "receipts_root": hex32(canonical_json([r.to_doc() for r in self.receipts])),
            "gas_used": self.gas_used,
            "gas_limit": self.gas_limit,
            "in_turn": self.in_turn,
            "extra": self.extra,
        }

    @cached_property
    def seal_hash(self) -> str:
        """Digest the signer signs: the header without the signature."""
        return hex32(canonical_json(self.header_doc()))

    @cached_property
    def hash(self) -> str:
        return hex32(canonical_json(self.header_doc() | {"signature": self.signature}))

    @cached_property
    def recovered_signer(self) -> tuple[str | None, str | None]:
        """(address the signature recovers to, error text); memoized like the hashes."""
        try:
            return recover_address(bytes.fromhex(self.seal_hash[2:]), signature_bytes(self)), None
        except InvalidSignature as exc:
            return None, str(exc)

    def to_doc(self) -> dict:
        return {
            "number": self.number,
            "parent_hash": self.parent_hash,
            "timestamp": self.timestamp,
            "signer": self.signer,
            "signature": self.signature,
            "transactions": [tx.to_doc() for tx in self.transactions],
            "receipts": [r.to_doc() for r in self.receipts],
            "gas_used": self.gas_used,
            "gas_limit": self.gas_limit,
            "in_turn": self.in_turn,
            "extra": self.extra,
            "hash": self.hash,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Block":
        return cls(
            number=doc["number"],
            parent_hash=doc["parent_hash"],
            timestamp=doc["timestamp"],
            signer=doc["signer"],
            signature=doc["signature"],
            transactions=tuple(Transaction.from_doc(t) for t in doc["transactions"]),
            receipts=tuple(Receipt.from_doc(r) for r in doc["receipts"]),
            gas_used=doc["gas_used"],
            gas_limit=doc["gas_limit"],
            in_turn=doc["in_turn"],
            extra=doc.get("extra", ""),
        )


def genesis_block(config: ChainConfig) -> Block:
    return Block(
        number=0,
        parent_hash=ZERO_HASH,
        timestamp=config.genesis_timestamp,
        signer=ZERO_ADDRESS,
        signature="",
        transactions=(),
        receipts=(),
        gas_used=0,
        gas_limit=config.gas_limit,
        in_turn=False,
        extra=config.genesis_extra(),
    )


def signature_bytes(block: Block) -> bytes:
    try:
        return bytes.fromhex(block.signature.removeprefix("0x"))
    except ValueError:
        raise InvalidSignature("signature is not hex") from None


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    height: int
    kind: str
    detail: str = ""


@dataclass
class ChainReport:
    violations: list[Violation] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def heights(self) -> set[int]:
        return {v.height for v in self.violations}

    def to_doc(self) -> dict:
        return {
            "ok": self.ok,
            "flags": list(self.flags),
            "violations": [vars(v) for v in self.violations],
        }


GasModel = Callable[[Transaction], int]


def validate_chain(
    chain: Sequence[Block],
    config: ChainConfig,
    gas_model: GasModel | None = None,
    schedule: GasSchedule = DEFAULT_SCHEDULE,
) -> ChainReport:
    """Check linkage, gas, authority, signatures and the recency rule.

    Violations are collected, never raised. RAFT chains carry no signatures;
    they are checked structurally and flagged as rewritable.
    """
    report = ChainReport()
    bad = report.violations.append
    gas_model = gas_model or (lambda tx: tx.model_gas)
    authorities = config.authorities
    n = len(authorities)
    if not chain:
        bad(Violation(0, "empty chain"))
        return report
    signed, clique = config.engine.signed, config.engine is Engine.CLIQUE
    if not signed:
        report.flags.append(UNSIGNED_HISTORY)

    genesis = chain[0]
    expected_genesis = genesis_block(config)
    for name in ("number", "parent_hash", "signer", "signature", "transactions", "receipts",
                 "gas_used", "gas_limit", "in_turn", "extra"):
        if getattr(genesis, name) != getattr(expected_genesis, name):
            bad(Violation(0, "genesis", name))

    last_signed: dict[str, int] = {}
    limit = recency_limit(n)
    prev = genesis
    for h, block in enumerate(chain[1:], start=1):
        # violations are keyed by position so a forged number is reported where it sits
        if block.number != h:
            bad(Violation(h, "number", f"expected {h}"))
        if block.parent_hash != prev.hash:
            bad(Violation(h, "parent_hash"))
        if block.timestamp < prev.timestamp + config.block_interval:
            bad(Violation(h, "timestamp"))
        if block.gas_limit != config.gas_limit:
            bad(Violation(h, "gas_limit"))
        if block.extra != "":
            bad(Violation(h, "extra"))
        total = 0
        for tx in block.transactions:
            if not tx.hash_matches:
                bad(Violation(h, "tx_hash", tx.hash))
            try:
                expected_gas = gas_model(tx)
            except Exception as exc:  # unparseable payloads are violations too
                bad(Violation(h, "tx_payload", f"{tx.hash}: {exc}"))
            else:
                if tx.gas_used != expected_gas:
                    bad(Violation(h, "tx_gas", f"{tx.hash}: {tx.gas_used} != {expected_gas}"))
            total += tx.gas_used
        if block.gas_used != total:
            bad(Violation(h, "gas_used", f"{block.gas_used} != sum {total}"))
        if block.gas_used > block.gas_limit:
            bad(Violation(h, "gas_limit_exceeded"))
        if len(block.receipts) != len(block.transactions) or any(
            r.tx_hash != tx.hash for r, tx in zip(block.receipts, block.transactions)
        ):
            bad(Violation(h, "receipts"))
        if block.signer not in authorities:
            bad(Violation(h, "not_authority", block.signer))

        if signed:
            recovered, error = block.recovered_signer
            if error is not None:
                bad(Violation(h, "signature", error))
            elif recovered != block.signer:
                bad(Violation(h, "signature", f"recovers to {recovered}"))
        elif block.signature != "":
            bad(Violation(h, "signature", "unsigned engine carries a signature"))

        if clique:
            if block.in_turn != (block.signer == authorities[h % n]):
                bad(Violation(h, "in_turn"))
            seen = last_signed.get(block.signer)
            if seen is not None and h - seen < limit:
                bad(Violation(h, "recency", f"{block.signer} signed {seen}"))
            last_signed[block.signer] = h
        elif config.engine is Engine.RAFT:
            if block.in_turn is not True or block.signer != authorities[0]:
                bad(Violation(h, "leader"))
            if not block.transactions:
                bad(Violation(h, "empty_raft_block"))
        prev = block
    return report


# -- export -------------------------------------------------------------------


def export_jsonl(chain: Iterable[Block], config: ChainConfig) -> str:
    """Header document (genesis parameters) then one JSON document per block."""
    lines = [json.dumps({"genesis": config.to_doc()}, sort_keys=True, separators=(",", ":"))]
    lines += [json.dumps(b.to_doc(), sort_keys=True, separators=(",", ":")) for b in chain]
    return "\n".join(lines) + "\n"


def import_jsonl(text: str) -> tuple[ChainConfig, list[Block]]:
    lines = [line for line in text.splitlines() if line.strip()]
    config = ChainConfig.from_doc(json.loads(lines[0])["genesis"])
    return config, [Block.from_doc(json.loads(line)) for line in lines[1:]]


def with_field(block: Block, **changes: Any) -> Block:
    return replace(block, **changes)
