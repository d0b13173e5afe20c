"""Throughput and pipeline-latency benchmarks in simulated time.

Throughput runs a bare ledger (no state machine) fed with synthetic
createWineRecord-class transactions. Every synthetic transaction has the same
payload length, so all of them cost the same gas and packing is exact.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..consortium import (
    APPEND_STAGES,
    CREATE_STAGES,
    VALIDATE_STAGES,
    CentralizedBaseline,
    Scenario,
    StageCosts,
    default_scenario,
    form_consortium,
)
from ..crypto import generate_keypair
from ..ledger.chain import ChainConfig, DEFAULT_GAS_LIMIT, DEFAULT_INTERVAL, Engine, Transaction
from ..ledger.engines import Ledger
from ..registry import CREATE, Role, transaction_gas
from ..store import content_hash
from .reference import PIPELINE_REFERENCES, TPS_REFERENCES, reference_lines

PIPELINE_OPS = ("create", "append", "validate")
STAGES_BY_OP = {"create": CREATE_STAGES, "append": APPEND_STAGES, "validate": VALIDATE_STAGES}

_FILLER_SIG = (hashlib.sha3_256(b"synthetic").digest() * 3 + b"\x02").hex()  # 97 bytes, never verified
_FILLER_HASH = content_hash(b"synthetic subset")


def _synthetic_args(counter: int) -> dict:
    wine = hashlib.sha3_256(b"wine/%d" % counter).hexdigest()
    tag = hashlib.sha3_256(b"tag/%d" % counter).hexdigest()
    return {"wine_key": "0x" + wine, "tag_key": "0x" + tag, "content_hash": _FILLER_HASH, "sig": _FILLER_SIG}


# fixed-width text arguments: every synthetic payload has the same length and no zero bytes
SYNTHETIC_GAS = transaction_gas(CREATE, _synthetic_args(0))


def synthetic_create_tx(sender: str, counter: int) -> Transaction:
    """A createWineRecord call with fixed-width arguments."""
    return Transaction.create(sender, CREATE, _synthetic_args(counter), SYNTHETIC_GAS)


@dataclass
class BenchReport:
    kind: str
    seed: int = 0
    blocks: int = 0
    block_interval: int = DEFAULT_INTERVAL
    gas_limit: int = DEFAULT_GAS_LIMIT
    engine: str = Engine.CLIQUE.value
    txs_per_block: list[int] = field(default_factory=list)
    gas_per_block: list[int] = field(default_factory=list)
    gas_by_method: dict[str, dict] = field(default_factory=dict)
    latency: dict[str, dict] = field(default_factory=dict)
    chain_txs: int = 0
    references: list[str] = field(default_factory=list)

    @property
    def total_txs(self) -> int:
        return sum(self.txs_per_block)

    @property
    def txs_min(self) -> int:
        return min(self.txs_per_block, default=0)

    @property
    def txs_avg(self) -> float:
        return self.total_txs / self.blocks if self.blocks else 0.0

    @property
    def txs_peak(self) -> int:
        return max(self.txs_per_block, default=0)

    @property
    def tps_avg(self) -> float:
        return self.total_txs / (self.blocks * self.block_interval) if self.blocks else 0.0

    @property
    def tps_peak(self) -> float:
        return self.txs_peak / self.block_interval

    def to_doc(self) -> dict:
        doc = {"kind": self.kind, "seed": self.seed}
        if self.kind == "tps":
            doc |= {
                "engine": self.engine,
                "blocks": self.blocks,
                "block_interval": self.block_interval,
                "gas_limit": self.gas_limit,
                "total_txs": self.total_txs,
                "txs_per_block": {"min": self.txs_min, "avg": self.txs_avg, "peak": self.txs_peak},
                "tps_avg": self.tps_avg,
                "tps_peak": self.tps_peak,
                "total_gas": sum(self.gas_per_block),
                "gas_by_method": self.gas_by_method,
                "distribution": self.txs_per_block,
            }
        else:
            doc |= {"latency": self.latency, "chain_txs": self.chain_txs}
        doc["references"] = self.references
        return doc

    def rows(self) -> list[dict]:
        if self.kind == "tps":
            return [
                {"metric": "blocks", "value": self.blocks},
                {"metric": "total_txs", "value": self.total_txs},
                {"metric": "txs_per_block min/avg/peak",
                 "value": f"{self.txs_min} / {self.txs_avg:.1f} / {self.txs_peak}"},
                {"metric": "tps avg / peak", "value": f"{self.tps_avg:.1f} / {self.tps_peak:.1f}"},
            ] + [{"metric": f"gas {m} (avg)", "value": s["avg"]} for m, s in self.gas_by_method.items()]
        return [{"op": op} | row for op, row in self.latency.items()]

    def distribution_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["block_number", "tx_count"])
        for number, count in enumerate(self.txs_per_block, start=1):
            writer.writerow([number, count])
        return out.getvalue()


# -- throughput ---------------------------------------------------------------------


def _bench_keys(seed: int, n: int = 4):
    return [generate_keypair(hashlib.sha3_256(f"bench/{seed}/{i}".encode()).digest()) for i in range(n)]


def bench_tps(config: ChainConfig | None = None, load: int | Sequence[int] | None = None, n_blocks: int = 10,
              seed: int = 0, authorities: int = 4) -> BenchReport:
    """Seal ``n_blocks`` block intervals under a load schedule.

    ``load`` is the number of transactions arriving per interval: one int,
    a per-block sequence (cycled), or ``None`` to keep the pool saturated.
    An interval in which the engine seals nothing counts as an empty block.
    Only the shape of ``config`` is used (authority count, interval, gas
    limit, engine); authority keys are derived from ``seed``.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be at least 1")
    keys = _bench_keys(seed, authorities)
    if config is None:
        config = ChainConfig(tuple(k.address for k in keys))
    else:
        keys = _bench_keys(seed, len(config.authorities))
        config = ChainConfig(tuple(k.address for k in keys), config.block_interval, config.gas_limit,
                             config.engine, config.genesis_timestamp)
    ledger = Ledger(config, {k.address: k for k in keys})
    per_tx = synthetic_create_tx(keys[0].address, 0).gas_used
    capacity = config.gas_limit // per_tx

    counter = 0
    txs, gas = [], []
    for i in range(n_blocks):
        if load is None:
            arriving = capacity + 1 - len(ledger.pool)
        elif isinstance(load, int):
            arriving = load
        else:
            arriving = load[i % len(load)]
        for _ in range(max(arriving, 0)):
            ledger.submit(synthetic_create_tx(keys[counter % len(keys)].address, counter), check=False)
            counter += 1
        block = ledger.seal_block()
        txs.append(len(block.transactions) if block else 0)
        gas.append(block.gas_used if block else 0)

    packed = sum(txs)
    by_method = {CREATE: {"count": packed, "min": per_tx, "avg": per_tx, "max": per_tx}} if packed else {}
    return BenchReport("tps", seed, n_blocks, config.block_interval, config.gas_limit, config.engine.value,
                       txs, gas, by_method, references=reference_lines(TPS_REFERENCES))


# -- pipeline latency ---------------------------------------------------------------


def _latency_row(decentralized: Iterable, baseline: Iterable) -> dict:
    d = [t.latency for t in decentralized]
    b = [t.latency for t in baseline]
    d_total, b_total = sum(d), sum(b)
    return {
        "count": len(d),
        "decentralized_s": round(d_total, 9),
        "baseline_s": round(b_total, 9),
        "ratio": round(d_total / b_total, 6) if b_total else None,
        "overhead_pct": round(100 * (d_total / b_total - 1), 4) if b_total else None,
    }


def bench_pipeline(scenario: Scenario | None = None, n_ops: int = 100, ops: Sequence[str] = PIPELINE_OPS,
                   costs: StageCosts = StageCosts()) -> BenchReport:
    """Per-operation simulated latency in both deployments.

    Each requested op runs ``n_ops`` times. Wines needed by append or
    validate runs are created in an unmeasured setup phase.
    """
    scenario = scenario or default_scenario()
    unknown = set(ops) - set(PIPELINE_OPS)
    if unknown:
        raise ValueError(f"unknown pipeline ops {sorted(unknown)}")
    ctx = form_consortium(scenario.roster, scenario.settings, scenario.seed, costs)
    base = CentralizedBaseline(scenario.roster, scenario.seed, costs)
    maker = next(m.member_id for m in ctx.members.values() if m.role is Role.WINEMAKER)
    checker = next((m.member_id for m in ctx.members.values() if m.role is Role.SUPPLY_CHAIN_PARTICIPANT), maker)

    setup_d, setup_b = [], []
    if "append" in ops or "validate" in ops:
        setup_d = [ctx.op_create(maker)[0].wine_id for _ in range(n_ops)]
        setup_b = [base.op_create(maker).wine_id for _ in range(n_ops)]
    mark_d, mark_b = len(ctx.traces), len(base.traces)

    for op in ops:
        for i in range(n_ops):
            if op == "create":
                ctx.op_create(maker)
                base.op_create(maker)
            elif op == "append":
                ctx.op_append(maker, setup_d[i])
                base.op_append(maker, setup_b[i])
            else:
                ctx.op_validate(checker, setup_d[i])
                base.op_validate(checker, setup_b[i])

    measured_d, measured_b = ctx.traces[mark_d:], base.traces[mark_b:]
    latency = {op: _latency_row([t for t in measured_d if t.op == op], [t for t in measured_b if t.op == op])
               for op in ops}
    return BenchReport("pipeline", scenario.seed, latency=latency,
                       chain_txs=sum(t.chain_txs for t in measured_d),
                       references=reference_lines(PIPELINE_REFERENCES))
