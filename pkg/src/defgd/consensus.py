"""Synchronous-round distributed averaging.

One round replaces every node's value with a weighted combination of its
own and its neighbours' values, all nodes reading the pre-round snapshot:
``D_g <- D_g + sum_j w[g, j] (D_j - D_g)``, which for a weight matrix whose
rows sum to one equals applying ``w`` along the node axis.  With ``w``
doubly stochastic and symmetric on a connected graph, repeated rounds
contract every node to the global average at a geometric rate set by the
second-largest eigenvalue modulus of ``w``; the node-wise sum is conserved
by every round because columns also sum to one.
"""

import numpy as np


def _stack(values):
    stacked = np.stack([np.asarray(v, dtype=float) for v in values])
    return stacked


def consensus_round(values, w):
    """One synchronous averaging round over the node axis.

    ``values`` is a list of p equal-shaped arrays (scalars allowed); the
    update is simultaneous, so the result is independent of node order.
    """
    stacked = _stack(values)
    w = np.asarray(w, dtype=float)
    if stacked.shape[0] != w.shape[0] or w.shape[0] != w.shape[1]:
        raise ValueError(
            f"value count {stacked.shape[0]} does not match weight matrix "
            f"{w.shape}")
    mixed = np.tensordot(w, stacked, axes=(1, 0))
    return list(mixed)


def avg_consensus(values, w, rounds):
    """Run ``rounds`` synchronous rounds; ``rounds = 0`` returns the inputs.

    On a connected graph the per-node deviation from the true average of
    the inputs contracts geometrically in ``rounds``.
    """
    if rounds < 0:
        raise ValueError(f"round count must be nonnegative, got {rounds}")
    stacked = _stack(values)
    w = np.asarray(w, dtype=float)
    if stacked.shape[0] != w.shape[0] or w.shape[0] != w.shape[1]:
        raise ValueError(
            f"value count {stacked.shape[0]} does not match weight matrix "
            f"{w.shape}")
    for _ in range(int(rounds)):
        stacked = np.tensordot(w, stacked, axes=(1, 0))
    return list(stacked)


def disagreement(values):
    """Largest Frobenius distance from any node's value to the node average.

    Zero iff all nodes hold identical values.
    """
    stacked = _stack(values)
    if stacked.shape[0] == 0:
        raise ValueError("need at least one node value")
    mean = stacked.mean(axis=0)
    deviations = stacked - mean
    flat = deviations.reshape(stacked.shape[0], -1)
    return float(np.max(np.linalg.norm(flat, axis=1)))
