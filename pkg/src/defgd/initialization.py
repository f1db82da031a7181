"""Federated truncated-spectral initialization.

Produces the common starting basis and gradient step size for the solver
without any node ever sharing raw sketches.  Two phases:

1. every node sums the squares of its local measurements and the network
   averages those scalars; p times the designated node's consensus value
   estimates the global energy, which sets the truncation threshold
   ``9 * delta / (m * q)``;
2. a distributed power method on the truncated surrogate operator: each
   node applies its additive share (built only from local data) to the
   current basis, the shares are aggregated by p x averaging consensus, and
   every node re-orthonormalizes the aggregate with the deterministic
   positive-diagonal QR.

The step size is the reciprocal of the largest eigenvalue of the final
triangular factor (its largest-magnitude diagonal entry); an alternative
reading using the largest singular value is available through
``lambda_interpretation="singular"``.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .consensus import avg_consensus
from .numerics import gaussian_matrix, qr_orthonormalize


@dataclass(frozen=True)
class InitResult:
    """Common starting basis and derived solver parameters.

    ``node_bases`` is populated only by the per-node QR variant (each node
    orthonormalizes its own consensus output instead of the designated
    node's); it holds the final basis of every node for divergence studies.
    """

    u0: np.ndarray
    eta: float
    delta: float
    pm_iterations: int
    consensus_budget: int
    node_bases: tuple = None


def local_threshold_sum(y_local):
    """Sum of squares of one node's measurements (its share of the energy)."""
    return float(np.sum(np.square(np.asarray(y_local, dtype=float))))


def federated_threshold(deltas, w, rounds):
    """p times the designated node's consensus of the local energy sums.

    Under exact consensus this equals the global sum of squared
    measurements; with a finite round budget it is the designated node's
    approximation of it.
    """
    if rounds < 1:
        raise ValueError(f"need at least one consensus round, got {rounds}")
    mixed = avg_consensus([float(d) for d in deltas], w, rounds)
    return len(deltas) * float(mixed[0])


def truncated_local_operator(a_local, y_local, u_prev, delta, m, q):
    """One node's additive share of the truncated surrogate applied to a basis.

    Per owned column k: ``v_k = (1/m) * a_kᵀ (y_k ∘ 1{y² <= 9 delta/(m q)})``
    (threshold comparison inclusive); the share is ``sum_k v_k (v_kᵀ u_prev)``.
    With every measurement retained this is exactly the untruncated spectral
    operator share.
    """
    thresh = 9.0 * float(delta) / (float(m) * float(q))
    return kernels.truncated_operator_share(
        np.ascontiguousarray(a_local, dtype=float),
        np.ascontiguousarray(y_local, dtype=float),
        np.ascontiguousarray(u_prev, dtype=float),
        thresh, 1.0 / float(m))


def _lambda_max(r_mat, interpretation):
    if interpretation == "eigenvalue":
        return float(np.max(np.abs(np.diagonal(r_mat))))
    if interpretation == "singular":
        return float(np.linalg.svd(r_mat, compute_uv=False)[0])
    raise ValueError(f"unknown lambda interpretation {interpretation!r}")


def federated_spectral_init(measurements, partition, w, r, pm_iters, rounds,
                            rng, lambda_interpretation="eigenvalue",
                            per_node_qr=False):
    """Distributed power method on the truncated surrogate operator.

    All nodes start from one shared random basis (QR of an n x r Gaussian
    draw from ``rng``; a deployment would broadcast the seed).  Each power
    iteration aggregates the node shares with p x averaging consensus and
    re-orthonormalizes.  By default every node adopts the designated node's
    QR output, keeping the network bitwise synchronized; with
    ``per_node_qr=True`` each node orthonormalizes its own consensus value,
    so finite round budgets let the node bases drift (returned in
    ``node_bases``).

    Returns
    -------
    InitResult
        Final basis, step size ``1 / lambda_max(R)``, and the threshold
        statistic actually used.

    Raises
    ------
    RankDeficientError
        If an aggregate loses column rank during QR (pathological instance).
    """
    if pm_iters < 1:
        raise ValueError(f"need at least one power iteration, got {pm_iters}")
    if rounds < 1:
        raise ValueError(f"need at least one consensus round, got {rounds}")
    q, m, n = measurements.a.shape
    p = partition.p
    slices = [partition.node_slice(g) for g in range(p)]

    deltas = [local_threshold_sum(measurements.y[sl]) for sl in slices]
    delta = federated_threshold(deltas, w, rounds)

    u_start, _ = qr_orthonormalize(gaussian_matrix(n, r, rng))
    bases = [u_start] * p
    r_final = None
    for _ in range(int(pm_iters)):
        shares = [
            truncated_local_operator(
                measurements.a[sl], measurements.y[sl], bases[g], delta, m, q)
            for g, sl in enumerate(slices)
        ]
        mixed = avg_consensus(shares, w, rounds)
        if per_node_qr:
            factored = [qr_orthonormalize(p * mixed[g]) for g in range(p)]
            bases = [qb for qb, _ in factored]
            r_final = factored[0][1]
        else:
            u_common, r_final = qr_orthonormalize(p * mixed[0])
            bases = [u_common] * p

    eta = 1.0 / _lambda_max(r_final, lambda_interpretation)
    return InitResult(
        u0=bases[0], eta=eta, delta=delta,
        pm_iterations=int(pm_iters), consensus_budget=int(rounds),
        node_bases=tuple(bases) if per_node_qr else None,
    )
