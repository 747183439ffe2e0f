"""Random graph families used as the gossip infrastructure.

Five generators: fixed fan-out (directed), random regular, Watts-Strogatz,
Erdos-Renyi with p = 2 ln(n)/n, and graphs with a power-law (exponent 2)
degree distribution where every node keeps at least one neighbor. All are
deterministic given a Generator and emit simple graphs (no self-loops, no
parallel edges); undirected adjacency is stored symmetrically.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from math import log

import numpy as np

RETRY_LIMIT = 1000

FAMILIES = ("fanout", "random_regular", "watts_strogatz", "erdos_renyi",
            "zipf")


class GraphGenerationError(Exception):
    """Generator exhausted its retry budget."""


@dataclass
class Graph:
    """Adjacency over n nodes; neighbors[v] is the sorted out-neighbor list."""

    n: int
    neighbors: list
    directed: bool

    def __post_init__(self):
        self._in_degrees = None

    def out_neighbors(self, v: int) -> list:
        return self.neighbors[v]

    def in_degrees(self) -> np.ndarray:
        if self._in_degrees is None:
            counts = np.zeros(self.n, dtype=np.int64)
            for adj in self.neighbors:
                for u in adj:
                    counts[u] += 1
            self._in_degrees = counts
        return self._in_degrees

    def num_edges(self) -> int:
        total = sum(len(adj) for adj in self.neighbors)
        return total if self.directed else total // 2


@dataclass
class TopologySpec:
    """Which family to generate and its parameters."""

    family: str
    k: int = 20
    p: float = 0.5
    alpha: float = 2.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown topology family {self.family!r}")

    def build(self, n: int, rng: np.random.Generator) -> Graph:
        if self.family == "fanout":
            return gen_fanout(n, self.k, rng)
        if self.family == "random_regular":
            return gen_random_regular(n, self.k, rng)
        if self.family == "watts_strogatz":
            return gen_watts_strogatz(n, self.k, self.p, rng)
        if self.family == "erdos_renyi":
            return gen_erdos_renyi(n, rng)
        return gen_zipf(n, self.alpha, rng)

    def label(self) -> str:
        if self.family == "fanout" or self.family == "random_regular":
            return f"{self.family}(k={self.k})"
        if self.family == "watts_strogatz":
            return f"watts_strogatz(k={self.k},p={self.p})"
        if self.family == "zipf":
            return f"zipf(alpha={self.alpha})"
        return "erdos_renyi(p=2ln(n)/n)"


def degree(g: Graph, v: int) -> int:
    """Total degree: neighbor count, plus in-degree for directed graphs."""
    if not 0 <= v < g.n:
        raise ValueError(f"node {v} out of range")
    if g.directed:
        return len(g.neighbors[v]) + int(g.in_degrees()[v])
    return len(g.neighbors[v])


def degrees(g: Graph) -> np.ndarray:
    out = np.array([len(adj) for adj in g.neighbors], dtype=np.int64)
    return out + g.in_degrees() if g.directed else out


def is_connected(g: Graph) -> bool:
    """Reachability from node 0 treating every edge as undirected."""
    if g.n == 0:
        return True
    undirected = [set(adj) for adj in g.neighbors]
    if g.directed:
        for v, adj in enumerate(g.neighbors):
            for u in adj:
                undirected[u].add(v)
    seen = np.zeros(g.n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in undirected[v]:
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return bool(seen.all())


def _finalize(adj_sets, directed: bool) -> Graph:
    return Graph(len(adj_sets), [sorted(s) for s in adj_sets], directed)


def gen_fanout(n: int, k: int = 20,
               rng: np.random.Generator | None = None) -> Graph:
    """Directed graph: every node picks k distinct random out-neighbors."""
    if k >= n:
        raise ValueError(f"fan-out k={k} needs more than k nodes, got n={n}")
    rng = rng or np.random.default_rng()
    neighbors = []
    for v in range(n):
        picks = rng.choice(n - 1, size=k, replace=False)
        picks = picks + (picks >= v)  # skip self
        neighbors.append(sorted(int(u) for u in picks))
    return Graph(n, neighbors, directed=True)


def _pair_stubs(stub_counts: np.ndarray, rng: np.random.Generator):
    """Configuration-model pairing with local repair.

    Conflicting stubs (self-loops or duplicate edges) are re-shuffled and
    re-paired among themselves; returns None when no simple completion of
    the remaining stubs exists and a fresh shuffle cannot fix it.
    """
    edges = set()
    adj = [set() for _ in range(len(stub_counts))]
    stubs = np.repeat(np.arange(len(stub_counts)), stub_counts)
    while len(stubs):
        rng.shuffle(stubs)
        leftover = []
        for a, b in zip(stubs[0::2], stubs[1::2]):
            a, b = int(a), int(b)
            if a == b or (min(a, b), max(a, b)) in edges:
                leftover.extend((a, b))
            else:
                edges.add((min(a, b), max(a, b)))
                adj[a].add(b)
                adj[b].add(a)
        if len(leftover) == len(stubs):
            # no progress; check whether any suitable pair remains
            distinct = sorted(set(leftover))
            suitable = any(
                (distinct[i], distinct[j]) not in edges
                for i in range(len(distinct))
                for j in range(i + 1, len(distinct)))
            if not suitable:
                return None
        stubs = np.array(leftover, dtype=np.int64)
    return adj


def gen_random_regular(n: int, k: int = 20,
                       rng: np.random.Generator | None = None) -> Graph:
    """Undirected simple graph with every degree exactly k."""
    if n * k % 2 != 0:
        raise ValueError(f"n*k must be even, got n={n} k={k}")
    if k >= n:
        raise ValueError(f"degree k={k} infeasible with n={n}")
    rng = rng or np.random.default_rng()
    counts = np.full(n, k, dtype=np.int64)
    for _ in range(RETRY_LIMIT):
        adj = _pair_stubs(counts, rng)
        if adj is not None:
            return _finalize(adj, directed=False)
    raise GraphGenerationError(
        f"random {k}-regular pairing failed {RETRY_LIMIT} times")


def gen_watts_strogatz(n: int, k: int = 20, p: float = 0.5,
                       rng: np.random.Generator | None = None) -> Graph:
    """Ring lattice with k/2 neighbors per side, each lattice edge rewired
    with probability p to a uniform non-duplicate target."""
    if k % 2 != 0 or k >= n:
        raise ValueError(f"watts-strogatz needs even k < n, got k={k} n={n}")
    rng = rng or np.random.default_rng()
    adj = [set() for _ in range(n)]
    for j in range(1, k // 2 + 1):
        for v in range(n):
            adj[v].add((v + j) % n)
            adj[(v + j) % n].add(v)
    for j in range(1, k // 2 + 1):
        for v in range(n):
            if rng.random() >= p:
                continue
            old = (v + j) % n
            if old not in adj[v] or len(adj[v]) >= n - 1:
                continue
            w = int(rng.integers(n))
            while w == v or w in adj[v]:
                w = int(rng.integers(n))
            adj[v].discard(old)
            adj[old].discard(v)
            adj[v].add(w)
            adj[w].add(v)
    return _finalize(adj, directed=False)


def gen_erdos_renyi(n: int, rng: np.random.Generator | None = None,
                    p: float | None = None) -> Graph:
    """Independent edges with p = 2 ln(n)/n; regenerated until connected."""
    if n < 2:
        raise ValueError("need at least two nodes")
    rng = rng or np.random.default_rng()
    if p is None:
        p = 2.0 * log(n) / n
    iu, ju = np.triu_indices(n, k=1)
    for _ in range(RETRY_LIMIT):
        mask = rng.random(len(iu)) < p
        adj = [set() for _ in range(n)]
        for a, b in zip(iu[mask], ju[mask]):
            adj[a].add(int(b))
            adj[b].add(int(a))
        g = _finalize(adj, directed=False)
        if is_connected(g):
            return g
    raise GraphGenerationError(
        f"no connected Erdos-Renyi draw in {RETRY_LIMIT} tries (n={n}, p={p})")


def _zipf_degree_sequence(n: int, alpha: float,
                          rng: np.random.Generator) -> np.ndarray:
    support = np.arange(1, n, dtype=np.float64)
    pmf = support ** (-alpha)
    pmf /= pmf.sum()
    seq = rng.choice(np.arange(1, n), size=n, p=pmf).astype(np.int64)
    if seq.sum() % 2 == 1:
        candidates = np.nonzero(seq < n - 1)[0]
        seq[rng.choice(candidates)] += 1
    return seq


def _is_graphical(seq: np.ndarray) -> bool:
    """Erdos-Gallai test (sum already even)."""
    d = np.sort(seq)[::-1].astype(np.int64)
    n = len(d)
    cumulative = np.cumsum(d)
    for k in range(1, n + 1):
        tail = np.minimum(d[k:], k).sum()
        if cumulative[k - 1] > k * (k - 1) + tail:
            return False
    return True


def _havel_hakimi(seq: np.ndarray):
    """Deterministic simple-graph realization of a graphical sequence:
    repeatedly wire the largest remaining degree to the next-largest."""
    n = len(seq)
    remaining = [[int(d), v] for v, d in enumerate(seq)]
    adj = [set() for _ in range(n)]
    while True:
        remaining.sort(key=lambda e: (-e[0], e[1]))
        d, v = remaining[0]
        if d == 0:
            return adj
        if d > n - 1 or remaining[d][0] == 0:
            return None  # not realizable (should not happen when graphical)
        for k in range(1, d + 1):
            u = remaining[k][1]
            adj[v].add(u)
            adj[u].add(v)
            remaining[k][0] -= 1
        remaining[0][0] = 0


def _double_edge_swaps(adj, rng: np.random.Generator, rounds: int = 10):
    """Uniformize a realization with degree-preserving edge swaps."""
    edges = sorted((v, u) for v, nbrs in enumerate(adj) for u in nbrs if v < u)
    m = len(edges)
    if m < 2:
        return
    for _ in range(rounds * m):
        i, j = rng.integers(m), rng.integers(m)
        if i == j:
            continue
        a, b = edges[i]
        c, d = edges[j]
        if rng.random() < 0.5:
            c, d = d, c
        if len({a, b, c, d}) < 4 or c in adj[a] or d in adj[b]:
            continue
        adj[a].discard(b)
        adj[b].discard(a)
        adj[c].discard(d)
        adj[d].discard(c)
        adj[a].add(c)
        adj[c].add(a)
        adj[b].add(d)
        adj[d].add(b)
        edges[i] = (a, c) if a < c else (c, a)
        edges[j] = (b, d) if b < d else (d, b)


def _components(adj) -> list:
    n = len(adj)
    comp = np.full(n, -1, dtype=np.int64)
    out = []
    for start in range(n):
        if comp[start] >= 0:
            continue
        members = [start]
        comp[start] = len(out)
        stack = [start]
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if comp[u] < 0:
                    comp[u] = len(out)
                    members.append(u)
                    stack.append(u)
        out.append(members)
    return out


def _stitch_connected(adj, rng: np.random.Generator) -> None:
    """Join components with degree-preserving double edge swaps.

    Every component has at least one internal edge (minimum degree is 1),
    and swapped endpoints lie in different components, so the swap can
    never create a self-loop or duplicate edge.
    """
    while True:
        comps = _components(adj)
        if len(comps) <= 1:
            return
        comps.sort(key=len)
        small, big = comps[0], comps[-1]
        u = int(rng.choice(small))
        v = int(rng.choice(sorted(adj[u])))
        a = int(rng.choice(big))
        while not adj[a]:
            a = int(rng.choice(big))
        b = int(rng.choice(sorted(adj[a])))
        adj[u].discard(v)
        adj[v].discard(u)
        adj[a].discard(b)
        adj[b].discard(a)
        adj[u].add(a)
        adj[a].add(u)
        adj[v].add(b)
        adj[b].add(v)


def gen_zipf(n: int, alpha: float = 2.0,
             rng: np.random.Generator | None = None) -> Graph:
    """Undirected graph whose degrees follow a truncated power law with
    the given exponent; minimum degree 1; connected.

    Stub-pairing stalls on hub-heavy sequences and isolated dyads make
    pure regenerate-until-connected hopeless at these sizes, so the
    sequence is realized Havel-Hakimi style, randomized with
    degree-preserving double edge swaps, and the components are stitched
    together with further degree-preserving swaps.
    """
    if n < 2:
        raise ValueError("need at least two nodes")
    rng = rng or np.random.default_rng()
    for _ in range(RETRY_LIMIT):
        seq = _zipf_degree_sequence(n, alpha, rng)
        if not _is_graphical(seq):
            continue
        adj = _havel_hakimi(seq)
        if adj is None:
            continue
        _double_edge_swaps(adj, rng)
        _stitch_connected(adj, rng)
        g = _finalize(adj, directed=False)
        if is_connected(g):
            return g
    raise GraphGenerationError(
        f"zipf graph generation failed {RETRY_LIMIT} times (n={n})")


def format_adjacency(g: Graph, header: str = "") -> str:
    """One line per node: 'id: n1,n2,...'; optional leading header line."""
    lines = [header] if header else []
    for v in range(g.n):
        lines.append(f"{v}: " + ",".join(str(u) for u in g.neighbors[v]))
    return "\n".join(lines) + "\n"


def graph_fingerprint(g: Graph) -> str:
    """Stable hash of the adjacency structure."""
    text = f"n={g.n};directed={int(g.directed)}\n" + format_adjacency(g)
    return hashlib.sha256(text.encode()).hexdigest()[:16]
