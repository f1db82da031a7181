"""Decentralized recovery loop and its exact-aggregation twin.

Each outer iteration alternates: (1) every node solves an r-dimensional
least squares per owned column against its current basis and accumulates
its local basis gradient; (2) the local gradients are combined -- by
averaging consensus over the communication graph in the decentralized
solver, or by the exact node average in the central-server baseline; (3)
every node takes a gradient step from its own basis and re-orthonormalizes
with the deterministic positive-diagonal QR.

Under exact aggregation (complete graph with one round, or the baseline)
all nodes compute bitwise-identical updates and stay synchronized, so the
two solvers follow the same trajectory.  With a finite round budget each
node orthonormalizes its own inexact average, so the node bases drift; all
reported iterates and the stopping criterion use the designated node
(node 0), and the per-round gradient disagreement is traced.

The traced relative Frobenius error measures the estimate associated with
the algorithm's output: the designated node's basis combined with every
node's local coefficients.  On connected graphs consensus keeps the node
bases aligned and this converges with the recovery; across disconnected
components the bases converge to differently rotated spans, which the glued
estimate exposes as a persistent error -- each node's private
reconstruction (``NodeState.x_hat``) only ever uses its own basis.
"""

import logging
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from . import kernels
from .consensus import avg_consensus, disagreement
from .numerics import least_squares, qr_orthonormalize, subspace_distance

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("trial", "iter", "elapsed_s", "sd_u", "rel_fro",
                 "psi_disagreement", "err_stop")

_SIGNS = {"descend": 1.0, "paper": -1.0}


@dataclass
class SolverConfig:
    """Outer-loop parameters.

    ``eta`` is normally taken from the initialization result but may be
    overridden (``0`` gives a null step, useful for fixed-point checks).
    ``gradient_sign_convention`` selects the residual sign: ``"descend"``
    (default) uses ``a u b - y`` so that ``u - eta psi`` decreases the
    loss; ``"paper"`` keeps the flipped literal sign, which ascends and is
    retained only for comparison.  ``gradient_scale`` chooses whether nodes
    apply the consensus average of the gradients (``"average"``, default)
    or rescale it by the node count (``"sum"``).
    """

    eta: float
    max_iters: int = 300
    tol: float = 1e-10
    consensus_rounds: int = 50
    gradient_sign_convention: str = "descend"
    gradient_scale: str = "average"

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError(f"step size must be nonnegative, got {self.eta}")
        if self.max_iters < 1:
            raise ValueError(f"need max_iters >= 1, got {self.max_iters}")
        if self.tol < 0:
            raise ValueError(f"need tol >= 0, got {self.tol}")
        if self.consensus_rounds < 1:
            raise ValueError(
                f"need consensus_rounds >= 1, got {self.consensus_rounds}")
        if self.gradient_sign_convention not in _SIGNS:
            raise ValueError(
                f"unknown sign convention {self.gradient_sign_convention!r}")
        if self.gradient_scale not in ("average", "sum"):
            raise ValueError(f"unknown gradient scale {self.gradient_scale!r}")


@dataclass
class NodeState:
    """One node's view of the computation.

    ``a`` and ``y`` are the node's private sensing matrices and sketches
    (views into the measurement set).  ``u`` is its current basis estimate;
    ``b`` (k x r) and ``x_hat`` (n x k) are the coefficients and local
    reconstructions of the latest iteration, recomputed every outer step
    against the basis the least squares was solved with.  ``psi`` is the
    local gradient before consensus, ``psi_mixed`` the node's post-consensus
    value.
    """

    node_id: int
    columns: np.ndarray
    a: np.ndarray
    y: np.ndarray
    u: np.ndarray
    b: np.ndarray = None
    x_hat: np.ndarray = None
    psi: np.ndarray = None
    psi_mixed: np.ndarray = None


@dataclass
class TrialTrace:
    """Per-outer-iteration records of one solver run."""

    iters: list = field(default_factory=list)
    elapsed_s: list = field(default_factory=list)
    sd_u: list = field(default_factory=list)
    rel_fro: list = field(default_factory=list)
    psi_disagreement: list = field(default_factory=list)
    err_stop: list = field(default_factory=list)

    def append(self, t, elapsed, sd, rel, psi_dis, err):
        self.iters.append(int(t))
        self.elapsed_s.append(float(elapsed))
        self.sd_u.append(float(sd))
        self.rel_fro.append(float(rel))
        self.psi_disagreement.append(float(psi_dis))
        self.err_stop.append(float(err))

    def __len__(self):
        return len(self.iters)


def make_node_states(measurements, partition, u0):
    """Per-node states holding data views and a private copy of ``u0``."""
    states = []
    for g in range(partition.p):
        sl = partition.node_slice(g)
        states.append(NodeState(
            node_id=g,
            columns=partition.blocks[g],
            a=measurements.a[sl],
            y=measurements.y[sl],
            u=np.array(u0, dtype=float),
        ))
    return states


def solve_local_coefficients(u, a_k, y_k):
    """Coefficients of one column: ``argmin_b ||y_k - a_k @ u @ b||``."""
    return least_squares(np.asarray(a_k, dtype=float) @ u, y_k)


def local_gradient(u, b, a_local, y_local, sign_convention="descend"):
    """Gradient of one node's squared-residual loss in the basis.

    With coefficients held fixed, returns
    ``sum_k a_kᵀ (a_k u b_k - y_k) b_kᵀ`` (the constant factor 2 from
    differentiating the square is absorbed into the step size).  The
    ``"paper"`` convention flips the residual sign.
    """
    sign = _SIGNS[sign_convention]
    a_local = np.asarray(a_local, dtype=float)
    y_local = np.asarray(y_local, dtype=float)
    b = np.asarray(b, dtype=float)
    au = a_local @ u
    res = sign * (np.einsum("kmr,kr->km", au, b) - y_local)
    return np.einsum("kmn,km->kn", a_local, res).T @ b


def _local_pass(states, sign):
    """Solve coefficients and gradients on every node; returns psi list."""
    psis = []
    for st in states:
        b, psi = kernels.ls_gradient(
            np.ascontiguousarray(st.a), np.ascontiguousarray(st.y),
            np.ascontiguousarray(st.u), sign)
        st.b = b
        st.psi = psi
        st.x_hat = st.u @ b.T
        psis.append(psi)
    return psis


def _apply_updates(states, mixed, cfg):
    """Per-node gradient step from the node's own basis, then QR."""
    scale = len(states) if cfg.gradient_scale == "sum" else 1.0
    step = cfg.eta * scale
    for g, st in enumerate(states):
        st.psi_mixed = np.asarray(mixed[g], dtype=float)
        st.u, _ = qr_orthonormalize(st.u - step * st.psi_mixed)


def defgd_outer_step(states, u_prev, w, cfg):
    """One decentralized outer iteration.

    Runs the per-node least-squares/gradient pass, mixes the gradients with
    ``cfg.consensus_rounds`` averaging rounds over ``w``, and lets every
    node update and re-orthonormalize its own basis.  Returns the updated
    states, the designated node's new basis, and the stopping statistic
    ``SD(u_next, u_prev)``.
    """
    psis = _local_pass(states, _SIGNS[cfg.gradient_sign_convention])
    mixed = avg_consensus(psis, w, cfg.consensus_rounds)
    _apply_updates(states, mixed, cfg)
    u_next = states[0].u
    return states, u_next, subspace_distance(u_next, u_prev)


def centralized_outer_step(states, u_prev, cfg):
    """Exact-aggregation twin of :func:`defgd_outer_step`.

    The gradient combination is the exact node average computed directly,
    which equals the limit of averaging consensus on a connected graph.
    """
    psis = _local_pass(states, _SIGNS[cfg.gradient_sign_convention])
    mean = np.mean(psis, axis=0)
    _apply_updates(states, [mean] * len(states), cfg)
    u_next = states[0].u
    return states, u_next, subspace_distance(u_next, u_prev)


def assemble_estimate(states, u):
    """Estimate of the full matrix glued on a single basis.

    Column k of the result is ``u @ b_k`` with ``b_k`` taken from the
    owning node.  Called with the designated node's basis this is the
    estimate associated with the algorithm's output.
    """
    n = u.shape[0]
    q = sum(len(st.columns) for st in states)
    x_hat = np.empty((n, q))
    for st in states:
        x_hat[:, st.columns] = u @ st.b.T
    return x_hat


def max_pairwise_sd(bases):
    """Largest subspace distance between any two node bases (diagnostic)."""
    worst = 0.0
    for i in range(len(bases)):
        for j in range(i + 1, len(bases)):
            worst = max(worst, subspace_distance(bases[i], bases[j]))
    return worst


def _run_loop(instance, states, u0, cfg, step):
    trace = TrialTrace()
    u_prev = np.asarray(u0, dtype=float)
    x_norm = np.linalg.norm(instance.x_star)
    elapsed = 0.0
    t = 1
    err = np.inf
    while t <= cfg.max_iters and err > cfg.tol:
        tic = perf_counter()
        states, u_next, err = step(states, u_prev)
        elapsed += perf_counter() - tic
        sd = subspace_distance(instance.u_star, u_next)
        rel = np.linalg.norm(instance.x_star - assemble_estimate(states, u_next))
        psi_dis = disagreement([st.psi_mixed for st in states])
        trace.append(t, elapsed, sd, rel / x_norm, psi_dis, err)
        u_prev = u_next
        t += 1
    log.debug("solver stopped after %d iterations (err=%.3e, node basis "
              "spread=%.3e)", len(trace), err,
              max_pairwise_sd([st.u for st in states]))
    return trace


def run_defgd(instance, measurements, partition, w, init, cfg):
    """Full decentralized run from a shared initialization.

    Every node starts at ``init.u0``; iterates :func:`defgd_outer_step`
    until the iteration cap or until the designated node's basis moves by
    at most ``cfg.tol`` between consecutive iterations.  Non-convergence is
    not an error -- the trace simply ends at the cap.  The traced elapsed
    time covers the algorithm steps only, not the metric evaluation.
    """
    states = make_node_states(measurements, partition, init.u0)
    return _run_loop(instance, states, init.u0, cfg,
                     lambda s, u: defgd_outer_step(s, u, w, cfg))


def run_centralized_baseline(instance, measurements, partition, init, cfg):
    """Central-server baseline: same loop with exact gradient aggregation.

    Equals the decentralized solver's exact-consensus limit iterate for
    iterate, and serves as its oracle in tests.
    """
    states = make_node_states(measurements, partition, init.u0)
    return _run_loop(instance, states, init.u0, cfg,
                     lambda s, u: centralized_outer_step(s, u, cfg))


def write_traces_csv(path, traces):
    """Serialize traces to CSV, one row per outer iteration.

    ``traces`` is an iterable of (trial_index, TrialTrace) pairs; the
    header is ``trial,iter,elapsed_s,sd_u,rel_fro,psi_disagreement,
    err_stop``.  Floats are written with shortest round-trip formatting, so
    reruns with identical seeds produce byte-identical files except for the
    wall-clock column.
    """
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for trial, trace in traces:
            for i in range(len(trace)):
                row = (str(int(trial)), str(trace.iters[i]),
                       repr(trace.elapsed_s[i]), repr(trace.sd_u[i]),
                       repr(trace.rel_fro[i]),
                       repr(trace.psi_disagreement[i]),
                       repr(trace.err_stop[i]))
                fh.write(",".join(row) + "\n")


def read_traces_csv(path):
    """Read a file written by :func:`write_traces_csv`.

    Returns a dict mapping trial index to TrialTrace.
    """
    traces = {}
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header != ",".join(TRACE_COLUMNS):
            raise ValueError(f"{path}: unexpected header {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            trial = int(cells[0])
            trace = traces.setdefault(trial, TrialTrace())
            trace.append(int(cells[1]), float(cells[2]), float(cells[3]),
                         float(cells[4]), float(cells[5]), float(cells[6]))
    return traces
