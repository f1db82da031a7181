"""Decentralized federated recovery of low-rank matrices from column sketches.

A library and simulation harness for reconstructing a rank-r matrix from
per-column compressive Gaussian sketches distributed over a peer-to-peer
network with no central server.  Nodes exchange only gradient summaries
with their neighbours through averaging consensus; recovery runs projected
gradient descent on a shared column-span estimate with per-column least
squares, started from a federated truncated-spectral initialization.
"""

from .consensus import avg_consensus, consensus_round, disagreement
from .initialization import (InitResult, federated_spectral_init,
                             federated_threshold, local_threshold_sum,
                             truncated_local_operator)
from .kernels import BACKEND as KERNEL_BACKEND
from .numerics import (RankDeficientError, gaussian_matrix, least_squares,
                       make_rng, power_iteration_top_eigvec,
                       qr_orthonormalize, subspace_distance)
from .problem import (MeasurementSet, Partition, ProblemInstance,
                      generate_instance, incoherence_mu, load_instance,
                      load_measurements, partition_columns, save_instance,
                      save_measurements, take_measurements)
from .solver import (NodeState, SolverConfig, TrialTrace, defgd_outer_step,
                     local_gradient, run_centralized_baseline, run_defgd,
                     solve_local_coefficients)
from .topology import (NetworkTopology, from_edges, generate_er_graph,
                       is_strongly_connected, load_topology,
                       metropolis_weights, save_topology)

__version__ = "0.1.0"
