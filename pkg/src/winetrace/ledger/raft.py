"""Leader/follower log replication without validation."""

from __future__ import annotations

from typing import Sequence

from .chain import Block


def raft_replicate(leader_log: Sequence[Block], follower_log: Sequence[Block] = ()) -> list[Block]:
    """Follower's log after one AppendEntries exchange.

    The follower keeps the longest prefix it shares with the leader and copies
    the rest verbatim. Nothing is checked: gas, signer and content are taken
    as the leader sent them.
    """
    common = 0
    for mine, theirs in zip(follower_log, leader_log):
        if mine.hash != theirs.hash:
            break
        common += 1
    return list(follower_log[:common]) + list(leader_log[common:])
