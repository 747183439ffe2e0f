"""Per-node gossip state machine with token-metered sends.

Each round a node refills one token and, when it can afford it, sends one
randomly chosen parameter slice to one random out-neighbor (the periodic,
proactive path). Receiving a slice triggers merge-then-train, and, if a
token is available, an immediate reactive forward of the same slice index
re-extracted from the freshly trained parameters. Nodes flagged byzantine
run exactly this machine; they differ only in holding a poisoned shard.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .model import (DEFAULT_BATCH_SIZE, Hyperparams, ParamVector,
                    PartitionMsg, extract_partition, local_update,
                    merge_partition)


@dataclass(frozen=True)
class TokenPolicy:
    """Send-credit accounting constants."""

    cap: int = 10
    refill: int = 1
    proactive_cost: int = 1
    reactive_threshold: int = 1

    def __post_init__(self):
        if self.cap < 1 or self.refill < 0:
            raise ValueError("need cap >= 1 and refill >= 0")
        if self.proactive_cost < 1 or self.reactive_threshold < 1:
            raise ValueError("send costs must be at least 1")


DEFAULT_TOKENS = TokenPolicy()


@dataclass
class OutboundSend:
    destination: int
    msg: PartitionMsg


@dataclass
class NodeState:
    id: int
    params: ParamVector
    tokens: int
    shard: Dataset
    byzantine: bool
    total_partitions: int


def init_node(node_id: int, shard: Dataset, total_partitions: int,
              byzantine: bool) -> NodeState:
    """Fresh node: zero parameters and one starting token so the first
    tick can send. Poisoning the shard is the caller's responsibility."""
    if len(shard) == 0:
        raise ValueError("node shard must be non-empty")
    return NodeState(node_id, ParamVector.zeros(), tokens=1, shard=shard,
                     byzantine=byzantine, total_partitions=total_partitions)


def _pick_send(node: NodeState, neighbors, partition_index: int,
               rng: np.random.Generator) -> OutboundSend:
    dest = int(neighbors[rng.integers(len(neighbors))])
    msg = extract_partition(node.params, partition_index,
                            node.total_partitions, sender=node.id)
    return OutboundSend(dest, msg)


def on_tick(node: NodeState, neighbors, rng: np.random.Generator,
            policy: TokenPolicy = DEFAULT_TOKENS,
            hp: Hyperparams | None = None,
            batch_size: int = DEFAULT_BATCH_SIZE,
            train_batches: int | None = 1) -> OutboundSend | None:
    """Periodic step: optionally train on the local shard, refill one
    token, then proactively send one random slice to one random neighbor
    if the send cost is covered."""
    if hp is not None:
        node.params = local_update(node.params, node.shard, hp, rng,
                                   batch_size=batch_size,
                                   max_batches=train_batches)
    node.tokens = min(node.tokens + policy.refill, policy.cap)
    if not len(neighbors) or node.tokens < policy.proactive_cost:
        return None
    index = int(rng.integers(node.total_partitions))
    out = _pick_send(node, neighbors, index, rng)
    node.tokens -= policy.proactive_cost
    return out


def on_receive(node: NodeState, msg: PartitionMsg, neighbors,
               hp: Hyperparams, rng: np.random.Generator,
               policy: TokenPolicy = DEFAULT_TOKENS,
               batch_size: int = DEFAULT_BATCH_SIZE,
               train_batches: int | None = 1) -> OutboundSend | None:
    """Merge the incoming slice, take train_batches SGD steps on the local
    shard (None means a full epoch), and reactively forward the same slice
    index, freshly extracted from the post-training parameters, when a
    token is available."""
    node.params = merge_partition(node.params, msg, node.total_partitions)
    node.params = local_update(node.params, node.shard, hp, rng,
                               batch_size=batch_size,
                               max_batches=train_batches)
    if not len(neighbors) or node.tokens < policy.reactive_threshold:
        return None
    out = _pick_send(node, neighbors, msg.partition_index, rng)
    node.tokens -= 1
    return out
