"""Communication graphs and consensus weight matrices.

The network is an undirected graph over ``p`` nodes (the symmetric
realization of a strongly connected, balanced directed graph).  Weights are
Metropolis-Hastings: symmetric, doubly stochastic, computable by each node
from its own and its neighbours' degrees alone -- any matrix with those
properties makes distributed averaging converge on connected graphs.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NetworkTopology:
    """Symmetric neighbor structure over ``p`` nodes, no self-loops.

    ``neighbors[g]`` is a frozenset of zero-based node ids;
    ``edge_probability`` records the generation parameter (metadata only,
    ``None`` for hand-built graphs).
    """

    p: int
    neighbors: tuple
    edge_probability: float = None


def _build(p, adjacency_sets, edge_probability):
    return NetworkTopology(
        p=int(p),
        neighbors=tuple(frozenset(s) for s in adjacency_sets),
        edge_probability=edge_probability,
    )


def from_edges(p, edges, edge_probability=None):
    """Topology from an iterable of (g, j) pairs, zero-based, undirected.

    Raises
    ------
    ValueError
        On self-loops or node ids outside ``range(p)``.
    """
    sets = [set() for _ in range(p)]
    for g, j in edges:
        g, j = int(g), int(j)
        if g == j:
            raise ValueError(f"self-loop at node {g}")
        if not (0 <= g < p and 0 <= j < p):
            raise ValueError(f"edge ({g}, {j}) outside 0..{p - 1}")
        sets[g].add(j)
        sets[j].add(g)
    return _build(p, sets, edge_probability)


def generate_er_graph(p, prob, rng):
    """Erdos-Renyi draw: each unordered pair joined with probability ``prob``.

    Pairs are visited in a fixed row order (one uniform draw per pair), so
    the graph is a deterministic function of the generator state.  The draw
    is *not* conditioned on connectivity; callers record
    :func:`is_strongly_connected` instead of rejecting.
    """
    if p < 1:
        raise ValueError(f"need at least one node, got p={p}")
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"edge probability must be in [0, 1], got {prob}")
    sets = [set() for _ in range(p)]
    for g in range(p):
        for j in range(g + 1, p):
            if rng.random() < prob:
                sets[g].add(j)
                sets[j].add(g)
    return _build(p, sets, float(prob))


def is_strongly_connected(topo):
    """True iff every node is reachable from node 0.

    Sufficient for strong connectivity because the neighbor relation is
    symmetric.
    """
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for g in frontier:
            for j in topo.neighbors[g]:
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return len(seen) == topo.p


def metropolis_weights(topo):
    """Metropolis-Hastings weight matrix for ``topo``.

    ``w[g, j] = 1 / (1 + max(deg_g, deg_j))`` on edges, diagonal set so that
    every row sums to one; symmetry and double stochasticity follow by
    construction.  An isolated node gets self-weight 1.
    """
    p = topo.p
    deg = [len(topo.neighbors[g]) for g in range(p)]
    w = np.zeros((p, p))
    for g in range(p):
        for j in topo.neighbors[g]:
            w[g, j] = 1.0 / (1.0 + max(deg[g], deg[j]))
        w[g, g] = 1.0 - w[g].sum()
    return w


def save_topology(topo, path):
    """Write the graph as a text edge list (README documents the format).

    First line ``p <count>``, optional ``prob <value>`` line, then one
    ``g j`` pair per line with 1-based ids and g < j.
    """
    lines = [f"p {topo.p}"]
    if topo.edge_probability is not None:
        lines.append(f"prob {topo.edge_probability!r}")
    for g in range(topo.p):
        for j in sorted(topo.neighbors[g]):
            if g < j:
                lines.append(f"{g + 1} {j + 1}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def load_topology(path):
    """Read a graph written by :func:`save_topology`."""
    with open(path, "r", encoding="ascii") as fh:
        tokens = fh.readline().split()
        if len(tokens) != 2 or tokens[0] != "p":
            raise ValueError(f"{path}: missing node-count header")
        p = int(tokens[1])
        prob = None
        edges = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            if tokens[0] == "prob":
                prob = float(tokens[1])
                continue
            g, j = int(tokens[0]), int(tokens[1])
            edges.append((g - 1, j - 1))
    return from_edges(p, edges, edge_probability=prob)
