"""Three-phase BFT voting round (pre-vote, pre-commit, commit)."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

PHASES = ("pre-vote", "pre-commit", "commit")


class RoundOutcome(str, enum.Enum):
    COMMITTED = "committed"
    ABORTED = "aborted"


def quorum(n: int) -> int:
    """Smallest vote count strictly above two thirds of ``n``."""
    if n < 1:
        raise ValueError("need at least one validator")
    return 2 * n // 3 + 1


VoteSchedule = Callable[[str, str], bool]


def honest(phase: str, validator: str) -> bool:
    return True


def schedule_from(votes: Mapping[str, set[str] | frozenset[str]]) -> VoteSchedule:
    """Schedule from explicit per-phase voter sets."""
    return lambda phase, validator: validator in votes.get(phase, ())


@dataclass
class RoundResult:
    outcome: RoundOutcome
    proposal: str
    tallies: dict[str, int] = field(default_factory=dict)
    failed_phase: str | None = None

    @property
    def committed(self) -> bool:
        return self.outcome is RoundOutcome.COMMITTED


def ibft_round(proposal: str, validators: Sequence[str], votes: VoteSchedule = honest) -> RoundResult:
    """Run one round. Votes for a phase are only cast once the previous phase
    reached quorum; every validator observes the same broadcast tally, so a
    missed quorum aborts the round for all of them.
    """
    if not validators:
        raise ValueError("validators must be non-empty")
    need = quorum(len(validators))
    result = RoundResult(RoundOutcome.ABORTED, proposal)
    for phase in PHASES:
        inbox = {v for v in validators if votes(phase, v)}
        result.tallies[phase] = len(inbox)
        if len(inbox) < need:
            result.failed_phase = phase
            return result
    result.outcome = RoundOutcome.COMMITTED
    return result
