"""Authority-rotation arithmetic for Clique-style proof of authority.

All ``N / 2`` terms use integer (floor) division.
"""

from __future__ import annotations

from typing import Sequence


def byzantine_tolerance(n: int) -> int:
    _check(n)
    return max(n // 2 - 1, 0)


def finality_depth(n: int) -> int:
    _check(n)
    return n // 2 + 1


def out_of_turn_allowance(n: int) -> int:
    _check(n)
    return n - (n // 2 + 1)


def recency_limit(n: int) -> int:
    """Minimum height distance between two blocks sealed by one signer."""
    return n // 2 + 1


def clique_signer_for(block_number: int, authorities: Sequence[str]) -> str:
    if not authorities:
        raise ValueError("authority set must be non-empty")
    return authorities[block_number % len(authorities)]


def eligible_signers(height: int, authorities: Sequence[str], last_signed: dict[str, int]) -> list[str]:
    """Authorities allowed to seal ``height`` given who signed recently."""
    limit = recency_limit(len(authorities))
    return [a for a in authorities if a not in last_signed or height - last_signed[a] >= limit]


def _check(n: int) -> None:
    if n < 1:
        raise ValueError("need at least one authority")
