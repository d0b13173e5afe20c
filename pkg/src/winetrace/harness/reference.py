"""Published measurements from the original deployment.

These numbers came from real cloud hardware and a real EVM. The simulator
cannot reproduce them, so reports print them next to the simulated figures
for comparison and no test asserts against them.
"""

from __future__ import annotations

from dataclasses import dataclass

LABEL = "published reference (hardware-bound)"


@dataclass(frozen=True)
class ReferenceValue:
    name: str
    value: float
    unit: str

    def line(self) -> str:
        shown = f"{self.value:,.2f}".rstrip("0").rstrip(".")
        return f"[{LABEL}] {self.name}: {shown} {self.unit}".rstrip()


TPS_PEAK = ReferenceValue("peak throughput", 786.6, "tx/s")
TPS_AVG = ReferenceValue("average throughput", 751.8, "tx/s")
TXS_PER_BLOCK_PEAK = ReferenceValue("peak txs per 5 s block", 3933, "tx")
TXS_PER_BLOCK_AVG = ReferenceValue("average txs per 5 s block", 3759, "tx")
TOTAL_TXS = ReferenceValue("transactions over 10,000 blocks", 38_565_382, "tx")
GAS_CREATE = ReferenceValue("average gas createWineRecord", 118_364, "gas")
GAS_APPEND = ReferenceValue("average gas appendWineRecord", 114_129, "gas")
CREATE_OVERHEAD = ReferenceValue("create latency over legacy", 34.08, "%")
APPEND_OVERHEAD = ReferenceValue("append latency over legacy", 36.14, "%")
CREATE_RATE = ReferenceValue("blockchain service create rate", 6.47, "req/s")
APPEND_RATE = ReferenceValue("blockchain service append rate", 6.88, "req/s")
VALIDATE_RATE = ReferenceValue("blockchain service validate rate", 9.79, "req/s")

TPS_REFERENCES = (TPS_PEAK, TPS_AVG, TXS_PER_BLOCK_PEAK, TXS_PER_BLOCK_AVG, TOTAL_TXS, GAS_CREATE, GAS_APPEND)
PIPELINE_REFERENCES = (CREATE_OVERHEAD, APPEND_OVERHEAD, CREATE_RATE, APPEND_RATE, VALIDATE_RATE)


def reference_lines(values=TPS_REFERENCES + PIPELINE_REFERENCES) -> list[str]:
    return [v.line() for v in values]
