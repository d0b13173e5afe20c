"""Gas schedule and cost arithmetic for storage-bound contract calls."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

WORD_BYTES = 32


@dataclass(frozen=True)
class GasSchedule:
    g_sset: int = 20_000
    g_sreset: int = 5_000
    g_tx_base: int = 21_000
    g_calldata_nonzero: int = 16
    g_calldata_zero: int = 4
    # LOG opcode pricing, used for contract events
    g_log: int = 375
    g_log_topic: int = 375
    g_log_data: int = 8

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if value <= 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_SCHEDULE = GasSchedule()


@dataclass(frozen=True)
class CostParams:
    gas_price_gwei: Decimal = Decimal("60")
    eth_usd: Decimal = Decimal("1223")

    def __post_init__(self) -> None:
        object.__setattr__(self, "gas_price_gwei", Decimal(str(self.gas_price_gwei)))
        object.__setattr__(self, "eth_usd", Decimal(str(self.eth_usd)))
        if self.gas_price_gwei < 0 or self.eth_usd < 0:
            raise ValueError("cost parameters must be non-negative")


@dataclass(frozen=True)
class SlotWrites:
    """How a contract call touches storage and what it sends as calldata."""

    new_slots: int = 0
    reset_slots: int = 0
    calldata: bytes = b""
    events: int = 0
    event_topics: int = 0
    event_data_bytes: int = 0


def words_for_bytes(n: int) -> int:
    if n < 0:
        raise ValueError("byte count must be non-negative")
    return -(-n // WORD_BYTES)


def storage_gas(new_slots: int, reset_slots: int, schedule: GasSchedule = DEFAULT_SCHEDULE) -> int:
    if new_slots < 0 or reset_slots < 0:
        raise ValueError("slot counts must be non-negative")
    return schedule.g_sset * new_slots + schedule.g_sreset * reset_slots


def calldata_gas(data: bytes, schedule: GasSchedule = DEFAULT_SCHEDULE) -> int:
    zeros = data.count(0)
    return schedule.g_calldata_zero * zeros + schedule.g_calldata_nonzero * (len(data) - zeros)


def tx_gas(payload: SlotWrites, schedule: GasSchedule = DEFAULT_SCHEDULE) -> int:
    gas = schedule.g_tx_base
    gas += storage_gas(payload.new_slots, payload.reset_slots, schedule)
    gas += calldata_gas(payload.calldata, schedule)
    gas += payload.events * schedule.g_log + payload.event_topics * schedule.g_log_topic
    gas += payload.event_data_bytes * schedule.g_log_data
    return gas


def tx_cost(gas: int, params: CostParams = CostParams()) -> tuple[Decimal, Decimal]:
    """(ETH, USD) for ``gas`` at the given price; exact decimal arithmetic."""
    eth = Decimal(gas) * params.gas_price_gwei / Decimal(10**9)
    return eth, eth * params.eth_usd
