"""Choosing which nodes act as Byzantine data poisoners.

Two placement strategies: 'classical' takes the f highest-degree nodes
(ties broken by lowest id, degrees of the intact graph), 'random' samples
f nodes uniformly without replacement.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Graph, degrees

STRATEGIES = ("classical", "random")

# Byzantine-count presets studied alongside the f = 0.3n worst case.
F_GRID = (0, 5, 15, 20, 25, 40, 45)


@dataclass(frozen=True)
class PlacementStrategy:
    kind: str

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown placement strategy {self.kind!r}")


@dataclass
class ByzantineSet:
    """The f node ids running the poisoning attack."""

    members: frozenset
    f: int

    def __post_init__(self):
        if len(self.members) != self.f:
            raise ValueError("member count does not match f")


def select_byzantine(g: Graph, f: int, strat: PlacementStrategy,
                     rng: np.random.Generator | None = None) -> ByzantineSet:
    """Pick the f attacker nodes according to the placement strategy.

    The classical pick is a pure function of the graph and consumes no
    randomness.
    """
    if not 0 <= f <= g.n:
        raise ValueError(f"byzantine count f={f} outside [0, {g.n}]")
    if strat.kind == "classical":
        order = np.lexsort((np.arange(g.n), -degrees(g)))
        chosen = order[:f]
    else:
        if rng is None:
            rng = np.random.default_rng()
        chosen = rng.choice(g.n, size=f, replace=False)
    return ByzantineSet(frozenset(int(v) for v in chosen), f)
