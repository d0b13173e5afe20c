"""A single chain instance: pending pool, sealing, state application."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Protocol

from ..crypto import KeyPair, sign
from ..errors import CheckpointAheadOfChain, NotAuthority, RecencyViolation
from .chain import (
    Block,
    ChainConfig,
    Engine,
    Receipt,
    Transaction,
    genesis_block,
)
from .clique import clique_signer_for, eligible_signers
from .ibft import VoteSchedule, honest, ibft_round


class StateMachine(Protocol):
    def apply(self, tx: Transaction, block_number: int, strict: bool = False) -> Receipt: ...

    def copy(self) -> "StateMachine": ...


class GasLimitExceeded(ValueError):
    pass


@dataclass
class TxLocation:
    block_number: int
    tx: Transaction
    receipt: Receipt


class Ledger:
    """One deterministic chain. Single-threaded by design.

    ``signers`` maps authority address to key pair for the authorities this
    process seals for (all of them, in the single-host simulation).
    """

    def __init__(
        self,
        config: ChainConfig,
        signers: dict[str, KeyPair] | None = None,
        state: StateMachine | None = None,
        offline: set[str] | None = None,
        ibft_votes: VoteSchedule = honest,
    ) -> None:
        self.config = config
        self.signers = dict(signers or {})
        self.state = state
        self.offline = set(offline or ())
        self.ibft_votes = ibft_votes
        self.blocks: list[Block] = [genesis_block(config)]
        self.pool: list[Transaction] = []
        self._pending_state: StateMachine | None = None
        self._index: dict[str, TxLocation] = {}
        self._last_signed: dict[str, int] = {}

    # -- pool -------------------------------------------------------------

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    @property
    def height(self) -> int:
        return self.head.number

    @property
    def clock(self) -> int:
        return self.head.timestamp

    def submit(self, tx: Transaction, check: bool = True) -> None:
        """Queue ``tx``. With ``check`` the call is dry-run against the state
        plus everything already pending and guard errors are raised here."""
        if tx.gas_used > self.config.gas_limit:
            raise GasLimitExceeded(f"{tx.gas_used} > block gas limit {self.config.gas_limit}")
        if check and self.state is not None:
            if self._pending_state is None:
                self._pending_state = self.state.copy()
            trial = self._pending_state.copy()
            trial.apply(tx, self.height + 1, strict=True)
            self._pending_state = trial
        self.pool.append(tx)

    def withdraw(self, tx: Transaction) -> None:
        """Drop a pending transaction and rebuild the dry-run state without it."""
        self.pool.remove(tx)
        self._pending_state = None
        if self.state is not None and self.pool:
            trial = self.state.copy()
            for pending in self.pool:
                trial.apply(pending, self.height + 1)
            self._pending_state = trial

    def submit_many(self, txs: list[Transaction]) -> None:
        for tx in txs:
            self.submit(tx, check=False)

    # -- sealing ----------------------------------------------------------

    def _pick_clique_signer(self, height: int) -> str:
        auth = self.config.authorities
        allowed = [a for a in eligible_signers(height, auth, self._last_signed) if a not in self.offline]
        in_turn = clique_signer_for(height, auth)
        if in_turn in allowed:
            return in_turn
        if not allowed:
            raise RecencyViolation(f"no authority may seal block {height}")
        return allowed[0]

    def _pack(self) -> list[Transaction]:
        packed, total = [], 0
        for tx in self.pool:
            if total + tx.gas_used > self.config.gas_limit:
                break
            packed.append(tx)
            total += tx.gas_used
        return packed

    def seal_block(self, proposer: str | None = None) -> Block | None:
        """Seal the next block from the pool; ``None`` when the engine idles.

        CLIQUE seals every interval even with an empty pool; RAFT only when
        something is pending; IBFT when a round commits.
        """
        cfg = self.config
        height = self.height + 1
        auth = cfg.authorities
        in_turn = True
        if cfg.engine is Engine.RAFT:
            if not self.pool:
                return None
            proposer = auth[0]
        elif cfg.engine is Engine.CLIQUE:
            if proposer is None:
                proposer = self._pick_clique_signer(height)
            if proposer not in auth:
                raise NotAuthority(proposer)
            if proposer not in eligible_signers(height, auth, self._last_signed):
                raise RecencyViolation(f"{proposer} signed block {self._last_signed[proposer]}")
            in_turn = proposer == clique_signer_for(height, auth)
        else:
            if proposer is not None and proposer not in auth:
                raise NotAuthority(proposer)
            for rnd in range(len(auth)):
                candidate = proposer or auth[(height + rnd) % len(auth)]
                if candidate not in self.offline and ibft_round(f"{height}/{rnd}", auth, self.ibft_votes).committed:
                    proposer, in_turn = candidate, rnd == 0
                    break
                if proposer is not None:
                    return None
            else:
                return None

        packed = self._pack()
        receipts = []
        for tx in packed:
            if self.state is not None:
                receipts.append(self.state.apply(tx, height))
            else:
                receipts.append(Receipt(tx.hash, True))
        block = Block(
            number=height,
            parent_hash=self.head.hash,
            timestamp=self.clock + cfg.block_interval,
            signer=proposer,
            signature="",
            transactions=tuple(packed),
            receipts=tuple(receipts),
            gas_used=sum(tx.gas_used for tx in packed),
            gas_limit=cfg.gas_limit,
            in_turn=in_turn,
        )
        if cfg.engine.signed:
            key = self.signers.get(proposer)
            if key is None:
                raise NotAuthority(f"no key held for {proposer}")
            block = replace(block, signature=sign(bytes.fromhex(block.seal_hash[2:]), key).hex())
        self._append(block)
        del self.pool[: len(packed)]
        self._pending_state = None
        return block

    def _append(self, block: Block) -> None:
        self.blocks.append(block)
        self._last_signed[block.signer] = block.number
        for tx, receipt in zip(block.transactions, block.receipts):
            self._index.setdefault(tx.hash, TxLocation(block.number, tx, receipt))

    def find_transaction(self, tx_hash: str) -> TxLocation | None:
        return self._index.get(tx_hash)

    def events(self) -> list[dict]:
        out = []
        for block in self.blocks:
            for receipt in block.receipts:
                for event in receipt.events:
                    out.append({"block_number": block.number, "tx_hash": receipt.tx_hash, **event})
        return out


@dataclass
class NodeState:
    """A node's persisted progress: the height it applied up to and its state."""

    height: int
    state: StateMachine

    def copy(self) -> "NodeState":
        return NodeState(self.height, self.state.copy())


def sync_from_checkpoint(node: NodeState, chain: list[Block]) -> NodeState:
    """Apply only blocks (height, tip] to the node's state."""
    tip = chain[-1].number if chain else 0
    if node.height > tip:
        raise CheckpointAheadOfChain(f"checkpoint {node.height} is ahead of tip {tip}")
    state = node.state.copy()
    for block in chain:
        if block.number <= node.height:
            continue
        for tx in block.transactions:
            state.apply(tx, block.number)
    return NodeState(tip, state)


def replay_state(chain: list[Block], state: StateMachine) -> StateMachine:
    return sync_from_checkpoint(NodeState(0, state), chain).state
