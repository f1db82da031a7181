"""Pure-NumPy implementations of the per-column hot kernels.

These are the fallback used when the compiled extension is unavailable and
the baseline the extension is benchmarked against.  Both backends implement
the same contracts; results agree to floating-point roundoff.
"""

import numpy as np

from ..numerics import RANK_TOL, RankDeficientError


def ls_gradient(a, y, u, sign=1.0):
    """Per-column least squares plus the summed basis gradient of one node.

    For each owned column k: solve ``b_k = argmin ||y_k - a_k @ u @ b||``
    through batched reduced QR of ``a_k @ u``, then accumulate
    ``psi = sum_k a_kᵀ res_k b_kᵀ`` with ``res_k = sign * (a_k u b_k - y_k)``.

    Parameters
    ----------
    a : (k, m, n) float array, per-column sensing matrices.
    y : (k, m) float array, per-column sketches.
    u : (n, r) float array, current basis.
    sign : +1.0 for the descent residual, -1.0 for the flipped one.

    Returns
    -------
    (b, psi) : (k, r) coefficients and the (n, r) gradient sum.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    au = a @ u  # (k, m, r)
    q, r = np.linalg.qr(au)
    diag = np.abs(np.diagonal(r, axis1=1, axis2=2))  # (k, r)
    limit = RANK_TOL * diag.max(axis=1, initial=0.0)
    deficient = diag <= limit[:, None]
    if deficient.any():
        k_bad, j_bad = np.argwhere(deficient)[0]
        raise RankDeficientError(
            j_bad, f"rank-deficient projected operator at measurement column "
            f"{k_bad} (basis column {j_bad})")
    z = np.einsum("kmr,km->kr", q, y)
    b = np.linalg.solve(r, z[..., None])[..., 0]
    res = sign * (np.einsum("kmr,kr->km", au, b) - y)
    psi = np.einsum("kmn,km->kn", a, res).T @ b
    return b, psi


def truncated_operator_share(a, y, u_prev, thresh, inv_m):
    """One node's additive share of the truncated surrogate operator.

    Per owned column k builds ``v_k = inv_m * a_kᵀ (y_k ∘ mask_k)`` where
    ``mask_k`` keeps entries with ``y**2 <= thresh`` (inclusive), and returns
    ``sum_k v_k (v_kᵀ u_prev)``.

    Returns
    -------
    (n, r) float array.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    u_prev = np.asarray(u_prev, dtype=float)
    kept = np.where(y * y <= thresh, y, 0.0)
    v = inv_m * np.einsum("kmn,km->kn", a, kept)  # (k, n)
    return v.T @ (v @ u_prev)
