"""Dense linear-algebra primitives shared by every other module.

All randomness flows through generators built by :func:`make_rng`, so a run
is fully reproducible from its (seed, stream) pairs.  Every function here is
a pure, deterministic map of its inputs (generator state included) and the
returned arrays are never mutated afterwards, so values are safe to share
across threads.
"""

import numpy as np

_U64_MASK = (1 << 64) - 1

# Relative magnitude below which a triangular diagonal entry is treated as
# zero when deciding rank deficiency.
RANK_TOL = 1e-12


class RankDeficientError(np.linalg.LinAlgError):
    """A factorization met a numerically rank-deficient column.

    ``column`` holds the zero-based index of the first offending column of
    the factored matrix.
    """

    def __init__(self, column, message=None):
        self.column = int(column)
        super().__init__(
            message or f"numerically rank-deficient input at column {column}"
        )


def make_rng(seed, stream=0):
    """Deterministic random generator for a (seed, stream) pair.

    Identical pairs reproduce identical draw sequences across runs and
    platforms; distinct streams derived from the same seed are statistically
    independent.  Callers that need several independent randomness sources
    should hand each one its own stream id instead of sharing a generator.

    Parameters
    ----------
    seed : int
        Base seed (used modulo 2**64).
    stream : int, optional
        Sub-stream identifier (used modulo 2**64).

    Returns
    -------
    numpy.random.Generator
    """
    entropy = [int(seed) & _U64_MASK, int(stream) & _U64_MASK]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def gaussian_matrix(rows, cols, rng):
    """``rows x cols`` matrix with i.i.d. standard normal entries.

    Fills the matrix in row-major order, drawing exactly ``rows * cols``
    normal variates from ``rng``, so downstream consumers of the same
    generator see a reproducible state.

    Raises
    ------
    ValueError
        If either dimension is smaller than 1.
    """
    if rows < 1 or cols < 1:
        raise ValueError(f"matrix dimensions must be positive, got {rows}x{cols}")
    return rng.standard_normal((int(rows), int(cols)))


def qr_orthonormalize(mat):
    """Reduced QR factorization with a positive-diagonal sign convention.

    Returns ``(q, r)`` with ``mat = q @ r``, ``q`` having orthonormal
    columns and ``r`` upper triangular with strictly positive diagonal.
    Fixing the diagonal signs makes the factorization unique, so independent
    evaluations of numerically identical inputs agree entry for entry --
    which is what lets every node in a synchronized network compute the same
    basis from the same aggregate.

    Parameters
    ----------
    mat : (n, r) array_like with n >= r, full column rank.

    Raises
    ------
    RankDeficientError
        If some diagonal of ``r`` falls below ``RANK_TOL`` times the largest
        one; ``column`` identifies the offending column of ``mat``.
    """
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2:
        raise ValueError("expected a 2-d array")
    if mat.shape[0] < mat.shape[1]:
        raise ValueError(f"need rows >= cols, got shape {mat.shape}")
    q, r = np.linalg.qr(mat, mode="reduced")
    diag = np.diagonal(r)
    bad = np.flatnonzero(np.abs(diag) <= RANK_TOL * np.max(np.abs(diag), initial=0.0))
    if bad.size:
        raise RankDeficientError(bad[0])
    signs = np.where(diag < 0.0, -1.0, 1.0)
    return q * signs, r * signs[:, None]


def least_squares(a, y):
    """Minimum-residual solution of ``min_b ||y - a @ b||_2``.

    Solved through the reduced QR factorization of ``a`` (not an explicit
    pseudoinverse), which keeps the normal-equation residual
    ``||aᵀ(y - a b)||`` at the 1e-8 * ||a|| * ||y|| level for well-scaled
    full-rank inputs.

    Parameters
    ----------
    a : (m, r) array_like with m >= r, full column rank.
    y : (m,) array_like.

    Raises
    ------
    RankDeficientError
        If ``a`` is numerically rank deficient.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if a.ndim != 2 or y.ndim != 1 or a.shape[0] != y.shape[0]:
        raise ValueError(f"incompatible shapes {a.shape} and {y.shape}")
    if a.shape[0] < a.shape[1]:
        raise ValueError(f"need rows >= cols, got shape {a.shape}")
    q, r = np.linalg.qr(a, mode="reduced")
    diag = np.abs(np.diagonal(r))
    bad = np.flatnonzero(diag <= RANK_TOL * np.max(diag, initial=0.0))
    if bad.size:
        raise RankDeficientError(bad[0])
    return np.linalg.solve(r, q.T @ y)


def subspace_distance(u1, u2):
    """Distance between the column spans of two orthonormal bases.

    Computes ``||(I - u1 u1ᵀ) u2||_F``, the l2 norm of the sines of the
    principal angles between the spans.  The value lies in [0, sqrt(r2)]
    where r2 is the number of columns of ``u2``, and is invariant under
    right-rotation of either argument.
    """
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    if u1.ndim != 2 or u2.ndim != 2 or u1.shape[0] != u2.shape[0]:
        raise ValueError(f"incompatible shapes {u1.shape} and {u2.shape}")
    residual = u2 - u1 @ (u1.T @ u2)
    return float(np.linalg.norm(residual))


def orthonormality_defect(u):
    """Largest entrywise deviation of ``uᵀu`` from the identity."""
    u = np.asarray(u, dtype=float)
    gram = u.T @ u
    return float(np.max(np.abs(gram - np.eye(gram.shape[0]))))


def power_iteration_top_eigvec(apply, dim, iters, rng):
    """Leading eigenpair of a symmetric PSD operator given as a callable.

    Runs plain power iteration from a random unit start drawn from ``rng``.
    For an operator with a spectral gap the returned direction converges
    geometrically; the eigenvalue estimate is the Rayleigh quotient of the
    final iterate.

    Parameters
    ----------
    apply : callable taking and returning a length-``dim`` vector.
    dim : int
    iters : int, >= 1
    rng : numpy.random.Generator

    Returns
    -------
    (v, lam) : unit vector and eigenvalue estimate ``vᵀ apply(v)``.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    v = rng.standard_normal(int(dim))
    v /= np.linalg.norm(v)
    for _ in range(int(iters)):
        w = np.asarray(apply(v), dtype=float)
        if w.shape != v.shape:
            raise ValueError("operator changed the vector dimension")
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return v, 0.0
        v = w / norm
    return v, float(v @ np.asarray(apply(v), dtype=float))
