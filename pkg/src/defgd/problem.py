"""Synthetic recovery instances: ground truth, sketches, column partition.

An instance is a rank-``r`` matrix ``x_star = u_star @ b_tilde_star`` built
from a Gaussian orthonormalized span and Gaussian coefficients.  Sketches
are per-column Gaussian projections ``y_k = a_k @ x_star[:, k]`` (noiseless)
and columns are assigned to nodes in contiguous blocks.

Instances and measurement sets serialize to a small binary container
(ASCII header line, decimal dimension line, float64 little-endian row-major
payload) so a trial can be replayed byte for byte; see README for the exact
layout.
"""

import io
from dataclasses import dataclass

import numpy as np

from .numerics import gaussian_matrix, qr_orthonormalize

_INSTANCE_MAGIC = b"defgd-instance 1\n"
_MEASUREMENTS_MAGIC = b"defgd-measurements 1\n"


@dataclass(frozen=True)
class ProblemInstance:
    """Ground-truth low-rank matrix together with its factors.

    ``x_star`` is n x q with rank ``r``; ``u_star`` (n x r, orthonormal
    columns) spans its columns and ``b_tilde_star`` (r x q) holds the
    coefficients, so ``x_star = u_star @ b_tilde_star``.  ``sigma_max`` /
    ``sigma_min`` are the extreme nonzero singular values and ``kappa``
    their ratio.
    """

    n: int
    q: int
    r: int
    x_star: np.ndarray
    u_star: np.ndarray
    b_tilde_star: np.ndarray
    sigma_max: float
    sigma_min: float
    kappa: float


@dataclass(frozen=True)
class MeasurementSet:
    """Per-column sketches: ``y[k] = a[k] @ x_star[:, k]``, noiseless.

    ``a`` is (q, m, n), ``y`` is (q, m).
    """

    m: int
    a: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class Partition:
    """Assignment of the q columns to p nodes in contiguous blocks.

    ``blocks[g]`` holds node g's sorted zero-based column indices; blocks
    are disjoint and cover ``range(q)``.
    """

    q: int
    p: int
    blocks: tuple

    def node_slice(self, g):
        """Contiguous slice of columns owned by node ``g``."""
        block = self.blocks[g]
        return slice(int(block[0]), int(block[-1]) + 1)


def generate_instance(n, q, r, rng, b_std=1.0):
    """Draw a random rank-``r`` instance.

    The span comes from the positive-diagonal QR of an n x r standard
    Gaussian matrix; coefficients are i.i.d. normal with standard deviation
    ``b_std``.  The singular values of ``x_star`` equal those of
    ``b_tilde_star`` because ``u_star`` has orthonormal columns.

    Raises
    ------
    ValueError
        If ``r`` exceeds ``min(n, q)`` or any dimension is non-positive.
    """
    if r < 1 or r > min(n, q):
        raise ValueError(f"need 1 <= r <= min(n, q), got n={n}, q={q}, r={r}")
    u_star, _ = qr_orthonormalize(gaussian_matrix(n, r, rng))
    b_tilde = float(b_std) * gaussian_matrix(r, q, rng)
    x_star = u_star @ b_tilde
    svals = np.linalg.svd(b_tilde, compute_uv=False)
    sigma_max = float(svals[0])
    sigma_min = float(svals[r - 1])
    return ProblemInstance(
        n=int(n), q=int(q), r=int(r),
        x_star=x_star, u_star=u_star, b_tilde_star=b_tilde,
        sigma_max=sigma_max, sigma_min=sigma_min,
        kappa=sigma_max / sigma_min,
    )


def take_measurements(inst, m, rng, a=None):
    """Sketch every column with an independent m x n standard Gaussian.

    Draws the q sensing matrices in column order (q*m*n variates) unless an
    explicit stack ``a`` of shape (q, m, n) is injected, then computes each
    sketch as ``a[k] @ x_star[:, k]`` -- the same expression used to check
    the stored values, so reconstruction is bitwise.
    """
    if m < 1:
        raise ValueError(f"need at least one measurement per column, got m={m}")
    if a is None:
        a = rng.standard_normal((inst.q, int(m), inst.n))
    else:
        a = np.asarray(a, dtype=float)
        if a.shape != (inst.q, int(m), inst.n):
            raise ValueError(f"injected sensing stack has shape {a.shape}, "
                             f"expected {(inst.q, int(m), inst.n)}")
    y = np.empty((inst.q, int(m)))
    for k in range(inst.q):
        y[k] = a[k] @ inst.x_star[:, k]
    return MeasurementSet(m=int(m), a=a, y=y)


def partition_columns(q, p):
    """Contiguous equal blocks: node g owns columns [g*q/p, (g+1)*q/p).

    Raises
    ------
    ValueError
        If ``p`` does not divide ``q`` (uneven blocks are not supported).
    """
    if p < 1:
        raise ValueError(f"need at least one node, got p={p}")
    if q % p:
        raise ValueError(f"node count must divide column count, got q={q}, p={p}")
    size = q // p
    blocks = tuple(np.arange(g * size, (g + 1) * size) for g in range(p))
    return Partition(q=int(q), p=int(p), blocks=blocks)


def incoherence_mu(inst):
    """Smallest mu with ``max_k ||b_k|| <= mu * sqrt(r/q)``.

    ``b_k`` are the columns of the transposed right singular vectors of
    ``x_star`` (equivalently of ``b_tilde_star``).  Small values mean no
    column dominates the energy; purely a diagnostic, never enforced.
    """
    _, _, vt = np.linalg.svd(inst.b_tilde_star, full_matrices=False)
    col_norms = np.linalg.norm(vt, axis=0)
    return float(col_norms.max() / np.sqrt(inst.r / inst.q))


def _write_matrix(fh, arr):
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_matrix(fh, shape):
    count = int(np.prod(shape))
    data = fh.read(count * 8)
    if len(data) != count * 8:
        raise ValueError("truncated matrix payload")
    return np.frombuffer(data, dtype="<f8").reshape(shape).copy()


def save_instance(inst, path):
    """Write an instance to ``path`` in the documented binary container."""
    with open(path, "wb") as fh:
        fh.write(_INSTANCE_MAGIC)
        fh.write(f"{inst.n} {inst.q} {inst.r}\n".encode("ascii"))
        _write_matrix(fh, [inst.sigma_max, inst.sigma_min, inst.kappa])
        _write_matrix(fh, inst.u_star)
        _write_matrix(fh, inst.b_tilde_star)
        _write_matrix(fh, inst.x_star)


def load_instance(path):
    """Read an instance written by :func:`save_instance`."""
    with open(path, "rb") as fh:
        if fh.readline() != _INSTANCE_MAGIC:
            raise ValueError(f"{path}: not an instance container")
        n, q, r = (int(tok) for tok in fh.readline().split())
        stats = _read_matrix(fh, (3,))
        u_star = _read_matrix(fh, (n, r))
        b_tilde = _read_matrix(fh, (r, q))
        x_star = _read_matrix(fh, (n, q))
    return ProblemInstance(
        n=n, q=q, r=r, x_star=x_star, u_star=u_star, b_tilde_star=b_tilde,
        sigma_max=float(stats[0]), sigma_min=float(stats[1]),
        kappa=float(stats[2]),
    )


def save_measurements(meas, path):
    """Write a measurement set to ``path`` (same container conventions)."""
    q, m, n = meas.a.shape
    with open(path, "wb") as fh:
        fh.write(_MEASUREMENTS_MAGIC)
        fh.write(f"{q} {m} {n}\n".encode("ascii"))
        _write_matrix(fh, meas.a)
        _write_matrix(fh, meas.y)


def load_measurements(path):
    """Read a measurement set written by :func:`save_measurements`."""
    with open(path, "rb") as fh:
        if fh.readline() != _MEASUREMENTS_MAGIC:
            raise ValueError(f"{path}: not a measurements container")
        q, m, n = (int(tok) for tok in fh.readline().split())
        a = _read_matrix(fh, (q, m, n))
        y = _read_matrix(fh, (q, m))
    return MeasurementSet(m=m, a=a, y=y)
