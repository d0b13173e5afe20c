"""Attack injection campaigns.

Tag attacks (clone, modification, reapplication) are pushed through a custody
hand-over: the receiving participant scans a tampered copy of a genuine tag
and must reject it before anything is written. Spam and key-reuse linkage
are measurements of properties the design does not defend against.
"""

from __future__ import annotations

import copy
import enum
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from ..consortium import Consortium, MemberSpec, Scenario, default_scenario, form_consortium
from ..crypto import generate_keypair, sign
from ..errors import ValidationFailed
from ..ledger.chain import ChainConfig, Engine
from ..ledger.engines import Ledger
from ..records import RejectionReason
from ..registry import Role, transaction_gas
from ..validation import NfcTag, TagPayload, tag_message
from .bench import synthetic_create_tx


class AttackKind(str, enum.Enum):
    CLONE = "CLONE"
    MODIFICATION = "MODIFICATION"
    REAPPLICATION = "REAPPLICATION"
    SPAM = "SPAM"
    KEY_REUSE_LINKAGE = "KEY_REUSE_LINKAGE"


TAG_ATTACKS = (AttackKind.CLONE, AttackKind.MODIFICATION, AttackKind.REAPPLICATION)

EXPECTED_REASON = {
    AttackKind.CLONE: RejectionReason.CLONE_DETECTED,
    AttackKind.MODIFICATION: RejectionReason.MODIFICATION_DETECTED,
    AttackKind.REAPPLICATION: RejectionReason.REAPPLICATION_DETECTED,
}

VARIANTS = {
    AttackKind.CLONE: ("fresh_tag", "foreign_payload"),
    AttackKind.MODIFICATION: ("signature_bitflip", "write_count", "wine_id_swap", "forged_signature"),
    AttackKind.REAPPLICATION: ("stale_payload", "counter_rollback"),
}


@dataclass
class AttackReport:
    seed: int = 0
    injected: dict[str, int] = field(default_factory=dict)
    detected: dict[str, int] = field(default_factory=dict)
    undetected: list[dict] = field(default_factory=list)
    clean_checks: int = 0
    false_positives: int = 0
    spam: dict | None = None
    linkage: dict | None = None

    def __post_init__(self) -> None:
        for kind, n in self.detected.items():
            if n > self.injected.get(kind, 0):
                raise ValueError(f"{kind}: detected {n} exceeds injected {self.injected.get(kind, 0)}")

    @property
    def ok(self) -> bool:
        """All tag attacks caught and no genuine bottle rejected."""
        return not self.undetected and self.false_positives == 0

    def merge(self, other: "AttackReport") -> "AttackReport":
        """Combine shard reports; the result does not depend on shard order."""
        if self.spam and other.spam or self.linkage and other.linkage:
            raise ValueError("two shards measured the same property")
        kinds = sorted(set(self.injected) | set(other.injected))
        return AttackReport(
            seed=min(self.seed, other.seed),
            injected={k: self.injected.get(k, 0) + other.injected.get(k, 0) for k in kinds},
            detected={k: self.detected.get(k, 0) + other.detected.get(k, 0) for k in kinds},
            undetected=sorted(self.undetected + other.undetected, key=lambda u: (u["kind"], u["index"])),
            clean_checks=self.clean_checks + other.clean_checks,
            false_positives=self.false_positives + other.false_positives,
            spam=self.spam or other.spam,
            linkage=self.linkage or other.linkage,
        )

    def to_doc(self) -> dict:
        return {
            "seed": self.seed,
            "ok": self.ok,
            "injected": dict(sorted(self.injected.items())),
            "detected": dict(sorted(self.detected.items())),
            "undetected": self.undetected,
            "clean_checks": self.clean_checks,
            "false_positives": self.false_positives,
            "spam": self.spam,
            "linkage": self.linkage,
        }

    def rows(self) -> list[dict]:
        rows = [{"kind": k, "injected": n, "detected": self.detected.get(k, 0),
                 "rate": f"{self.detected.get(k, 0) / n:.0%}" if n else "-"}
                for k, n in sorted(self.injected.items())]
        rows.append({"kind": "false positives", "injected": self.clean_checks, "detected": self.false_positives,
                     "rate": "-"})
        if self.spam:
            rows.append({"kind": "SPAM pool growth", "injected": self.spam["submitted"],
                         "detected": self.spam["pool_sizes"][-1], "rate": "bounded" if self.spam["blocks_bounded"]
                         else "OVER LIMIT"})
        if self.linkage:
            rows.append({"kind": "KEY_REUSE_LINKAGE", "injected": self.linkage["addresses"],
                         "detected": self.linkage["linkable"], "rate": f"{self.linkage['fraction']:.0%}"})
        return rows


# -- tag attacks ------------------------------------------------------------------


def _first(ctx: Consortium, role: Role, skip: tuple[str, ...] = ()) -> str | None:
    return next((m.member_id for m in ctx.members.values() if m.role is role and m.member_id not in skip), None)


@dataclass
class _Victim:
    wine_id: str
    stale: TagPayload


def _tamper(kind: AttackKind, variant: str, ctx: Consortium, victim: _Victim, other: _Victim | None,
            rng: random.Random) -> NfcTag:
    genuine = ctx.tags[victim.wine_id]
    tag = copy.deepcopy(genuine)
    payload = tag.payload
    if variant == "fresh_tag":
        tag = ctx.new_tag()
        tag.payload, tag.write_count = payload, genuine.write_count
    elif variant == "foreign_payload":
        tag.payload = ctx.tags[other.wine_id].payload
    elif variant == "signature_bitflip":
        i = rng.randrange(len(payload.signature))
        sig = bytearray(payload.signature)
        sig[i] ^= 1 << rng.randrange(8)
        tag.payload = replace(payload, signature=bytes(sig))
    elif variant == "write_count":
        tag.payload = replace(payload, write_count=payload.write_count + rng.randint(1, 5))
    elif variant == "wine_id_swap":
        tag.payload = replace(payload, wine_id=ctx.ids())
    elif variant == "forged_signature":
        attacker = generate_keypair(rng.randbytes(32))
        message = tag_message(payload.wine_id, tag.tag_id, payload.write_count)
        tag.payload = replace(payload, signature=sign(message, attacker))
    elif variant == "stale_payload":
        tag.payload = victim.stale
    elif variant == "counter_rollback":
        seen = ctx.db[victim.wine_id].status.tag_read_count
        tag.read_counter = rng.randint(0, max(seen - 1, 0))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return tag


def _tag_shard(scenario: Scenario, kind: AttackKind, n: int, seed: int, pool_size: int) -> AttackReport:
    ctx = form_consortium(scenario.roster, scenario.settings, seed=seed)
    rng = random.Random(f"{seed}/{kind.value}")
    maker = _first(ctx, Role.WINEMAKER)
    holder = _first(ctx, Role.SUPPLY_CHAIN_PARTICIPANT)
    if holder is None:
        raise ValueError("tag attack campaigns need a supply-chain participant")
    receiver = _first(ctx, Role.SUPPLY_CHAIN_PARTICIPANT, (holder,)) or _first(ctx, Role.WINE_CONSUMER)

    victims = []
    for _ in range(max(1, min(n, pool_size))):
        record, _ = ctx.op_create(maker)
        stale = ctx.tags[record.wine_id].payload
        ctx.op_transfer(maker, holder, record.wine_id)
        victims.append(_Victim(record.wine_id, stale))

    variants = [v for v in VARIANTS[kind] if v != "foreign_payload" or len(victims) > 1]
    expected = EXPECTED_REASON[kind]
    detected, undetected = 0, []
    for i in range(n):
        victim = victims[i % len(victims)]
        other = victims[(i + 1) % len(victims)]
        variant = variants[i % len(variants)]
        tag = _tamper(kind, variant, ctx, victim, other, rng)
        before = (ctx.ledger.height, ctx.registry.digest(), len(ctx.store))
        try:
            ctx.op_transfer(holder, receiver, victim.wine_id, tag=tag)
            got = None
        except ValidationFailed as exc:
            got = exc.reason
        unchanged = before == (ctx.ledger.height, ctx.registry.digest(), len(ctx.store))
        if got == expected and unchanged:
            detected += 1
        else:
            undetected.append({"kind": kind.value, "index": i, "variant": variant,
                               "reason": got.value if got else None, "state_unchanged": unchanged})

    # every genuine bottle must still go through
    false_positives = 0
    for victim in victims:
        try:
            ctx.op_transfer(holder, receiver, victim.wine_id)
        except ValidationFailed:
            false_positives += 1
    return AttackReport(seed, {kind.value: n}, {kind.value: detected}, undetected, len(victims), false_positives)


# -- spam -------------------------------------------------------------------------


def spam_flood(n_blocks: int = 20, rate_multiple: int = 10, txs_per_block: int = 20, seed: int = 0,
               engine: Engine = Engine.CLIQUE) -> dict:
    """Flood a chain at ``rate_multiple`` times its packing capacity."""
    gas = transaction_gas(*_template())
    keys = [generate_keypair(_seed_bytes(seed, "spam", i)) for i in range(4)]
    config = ChainConfig(tuple(k.address for k in keys), gas_limit=gas * txs_per_block, engine=engine)
    ledger = Ledger(config, {k.address: k for k in keys})
    per_block = rate_multiple * txs_per_block
    submitted, counter = 0, 0
    pool_sizes, block_txs, block_gas = [], [], []
    for _ in range(n_blocks):
        for _ in range(per_block):
            ledger.submit(synthetic_create_tx(keys[counter % 4].address, counter), check=False)
            counter += 1
        submitted += per_block
        block = ledger.seal_block()
        pool_sizes.append(len(ledger.pool))
        block_txs.append(len(block.transactions) if block else 0)
        block_gas.append(block.gas_used if block else 0)
    return {
        "gas_limit": config.gas_limit,
        "rate_per_block": per_block,
        "submitted": submitted,
        "pool_sizes": pool_sizes,
        "block_txs": block_txs,
        "max_block_gas": max(block_gas),
        "blocks_bounded": all(g <= config.gas_limit for g in block_gas),
        "pool_monotonic": all(a < b for a, b in zip(pool_sizes, pool_sizes[1:])),
    }


def _template() -> tuple[str, dict]:
    tx = synthetic_create_tx("0x" + "00" * 20, 0)
    return tx.method, tx.args


def _seed_bytes(*parts: object) -> bytes:
    return random.Random("/".join(map(str, parts))).randbytes(32)


# -- key-reuse linkage -------------------------------------------------------------

ADDRESS_FIELDS = ("sender", "member", "new_owner")


def linkage_from_events(events: list[dict]) -> dict:
    """Which event-log addresses can be tied to a registered member.

    Registration events publish address and role; the registering sender is
    the administrator. An address is linkable when its role is known from
    the log and it recurs in at least two events.
    """
    roles: dict[str, str] = {}
    seen: dict[str, int] = {}
    for event in events:
        if event["event"] == "MemberRegistered":
            roles[event["member"]] = event["role"]
            roles.setdefault(event["sender"], Role.CONSORTIUM_ADMIN.value)
        for name in ADDRESS_FIELDS:
            if name in event:
                seen[event[name]] = seen.get(event[name], 0) + 1
    per_address = {a: {"role": roles.get(a), "events": n} for a, n in sorted(seen.items())}
    linkable = sum(1 for v in per_address.values() if v["role"] and v["events"] >= 2)
    return {"addresses": len(per_address), "linkable": linkable,
            "fraction": linkable / len(per_address) if per_address else 0.0, "per_address": per_address}


def linkage_scenario(seed: int = 0) -> Scenario:
    """Four members: administrator, winemaker, two participants."""
    return Scenario([MemberSpec("admin", Role.CONSORTIUM_ADMIN), MemberSpec("winemaker", Role.WINEMAKER),
                     MemberSpec("distributor", Role.SUPPLY_CHAIN_PARTICIPANT),
                     MemberSpec("retailer", Role.SUPPLY_CHAIN_PARTICIPANT)], seed=seed)


def _linkage_shard(scenario: Scenario, seed: int, wines: int = 2) -> AttackReport:
    ctx = form_consortium(scenario.roster, scenario.settings, seed=seed)
    maker = _first(ctx, Role.WINEMAKER)
    path = [m.member_id for m in ctx.members.values() if m.role is Role.SUPPLY_CHAIN_PARTICIPANT]
    path += [m.member_id for m in ctx.members.values() if m.role is Role.WINE_CONSUMER][:1]
    for _ in range(wines):
        record, _ = ctx.op_create(maker)
        holder = maker
        for nxt in path:
            ctx.op_transfer(holder, nxt, record.wine_id)
            holder = nxt
    doc = linkage_from_events(ctx.ledger.events())
    members = {m.address: m.member_id for m in ctx.members.values()}
    for address, info in doc["per_address"].items():
        info["member_id"] = members.get(address)
    return AttackReport(seed, linkage=doc)


# -- campaign ---------------------------------------------------------------------


def attack_campaign(scenario: Scenario | None = None, kinds=tuple(AttackKind), n_injections: int = 100,
                    seed: int = 0, workers: int = 1, pool_size: int = 25,
                    linkage: Scenario | None = None) -> AttackReport:
    """Run one shard per attack kind and merge the shard reports."""
    scenario = scenario or default_scenario(seed)
    kinds = [AttackKind(k) for k in kinds]
    jobs = []
    for kind in kinds:
        if kind in TAG_ATTACKS:
            jobs.append(lambda k=kind: _tag_shard(scenario, k, n_injections, seed, pool_size))
        elif kind is AttackKind.SPAM:
            jobs.append(lambda: AttackReport(seed, spam=spam_flood(seed=seed, engine=scenario.settings.engine)))
        else:
            jobs.append(lambda: _linkage_shard(linkage or scenario, seed))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        shards = list(pool.map(lambda job: job(), jobs))
    report = AttackReport(seed)
    for shard in shards:
        report = report.merge(shard)
    return report
