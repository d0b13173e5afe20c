from .chain import (
    Block,
    ChainConfig,
    ChainReport,
    Engine,
    Receipt,
    Transaction,
    UNSIGNED_HISTORY,
    Violation,
    export_jsonl,
    genesis_block,
    import_jsonl,
    validate_chain,
)
from .clique import (
    byzantine_tolerance,
    clique_signer_for,
    finality_depth,
    out_of_turn_allowance,
    recency_limit,
)
from .engines import GasLimitExceeded, Ledger, NodeState, replay_state, sync_from_checkpoint
from .gas import CostParams, GasSchedule, SlotWrites, calldata_gas, storage_gas, tx_cost, tx_gas, words_for_bytes
from .ibft import ibft_round, quorum
from .raft import raft_replicate
