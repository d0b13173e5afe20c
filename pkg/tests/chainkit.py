"""Chain builders and single-field block mutations shared by ledger tests."""

from __future__ import annotations

import hashlib
from dataclasses import fields, replace

from winetrace.crypto import generate_keypair, sign
from winetrace.harness.bench import synthetic_create_tx
from winetrace.ledger import Block, ChainConfig, Engine, Ledger, Receipt
from winetrace.registry import transaction_gas


def keys(n: int, tag: str = "chainkit"):
    return [generate_keypair(hashlib.sha256(f"{tag}/{i}".encode()).digest()) for i in range(n)]


def build_ledger(n: int, blocks: int, engine: Engine = Engine.CLIQUE, txs_every: int = 3,
                 tag: str = "chainkit", **config) -> Ledger:
    """A stateless ledger with ``blocks`` sealed blocks; every ``txs_every``-th
    interval carries a couple of synthetic transactions."""
    ks = keys(n, tag)
    ledger = Ledger(ChainConfig(tuple(k.address for k in ks), engine=engine, **config),
                    {k.address: k for k in ks})
    counter = 0
    while ledger.height < blocks:
        if engine is Engine.RAFT or ledger.height % txs_every == 0:
            for _ in range(2):
                ledger.submit(synthetic_create_tx(ks[counter % n].address, counter), check=False)
                counter += 1
        ledger.seal_block()
    return ledger


def _other_hash(value: str) -> str:
    return "0x" + hashlib.sha256(value.encode()).hexdigest()


def _flip_signature(sig: str) -> str:
    raw = bytearray(bytes.fromhex(sig)) if sig else bytearray(b"\x01")
    raw[0] ^= 0x01
    return raw.hex()


def _extra_tx(block: Block):
    return synthetic_create_tx(block.signer, 10**9 + block.number)


def block_mutations(block: Block, authorities: tuple[str, ...]) -> dict[str, Block]:
    """One altered copy of ``block`` per header/body field."""
    other = next(a for a in authorities + ("0x" + "ab" * 20,) if a != block.signer)
    extra = _extra_tx(block)
    txs = block.transactions[:-1] if block.transactions else (extra,)
    receipts = (block.receipts[:-1] + (replace(block.receipts[-1], success=not block.receipts[-1].success),)
                if block.receipts else (Receipt(extra.hash, True),))
    out = {
        "number": replace(block, number=block.number + 1),
        "parent_hash": replace(block, parent_hash=_other_hash(block.parent_hash)),
        "timestamp": replace(block, timestamp=block.timestamp + 1),
        "signer": replace(block, signer=other),
        "signature": replace(block, signature=_flip_signature(block.signature)),
        "transactions": replace(block, transactions=txs),
        "receipts": replace(block, receipts=receipts),
        "gas_used": replace(block, gas_used=block.gas_used + 1),
        "gas_limit": replace(block, gas_limit=block.gas_limit + 1),
        "in_turn": replace(block, in_turn=not block.in_turn),
        "extra": replace(block, extra=block.extra + "00"),
    }
    assert set(out) == {f.name for f in fields(Block)}
    return out


def rewrite_history(chain: list[Block], height: int, new_content_hash: str) -> list[Block]:
    """Swap the content hash of the first transaction at ``height`` and relink
    every later block. The rewriter holds no authority keys, so signatures are
    carried over unchanged."""
    target = chain[height]
    old = target.transactions[0]
    args = dict(old.args, content_hash=new_content_hash)
    forged = type(old).create(old.sender, old.method, args, transaction_gas(old.method, args))
    receipts = (replace(target.receipts[0], tx_hash=forged.hash),) + target.receipts[1:]
    out = chain[:height] + [replace(target, transactions=(forged,) + target.transactions[1:], receipts=receipts)]
    for block in chain[height + 1:]:
        out.append(replace(block, parent_hash=out[-1].hash))
    return out


def resign(block: Block, key) -> Block:
    unsigned = replace(block, signature="")
    return replace(unsigned, signature=sign(bytes.fromhex(unsigned.seal_hash[2:]), key).hex())


def inject_recency(chain: list[Block], height: int, signer_keys: dict, authorities: tuple[str, ...]) -> list[Block]:
    """Fork at ``height``: the sealer of ``height - 1`` seals it again as the new
    tip. The signature is valid, so recency is the only rule broken."""
    offender = chain[height - 1].signer
    forged = replace(chain[height], signer=offender, in_turn=offender == authorities[height % len(authorities)])
    return chain[:height] + [resign(forged, signer_keys[offender])]
