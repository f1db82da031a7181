"""Hot-kernel backend selection.

The solver's inner loop spends nearly all its time in two per-column
kernels: the fused least-squares/gradient pass and the truncated spectral
operator share.  A compiled extension (``defgd._kernels``) implements both;
this package falls back to the pure-NumPy twins in
:mod:`defgd.kernels.reference` when the extension is absent, or when the
environment variable ``DEFGD_PURE_PYTHON`` is set to a non-empty value
other than ``0``.

The selection is fixed at import time so a run never mixes backends.
"""

import os

from . import reference

compiled = None
if os.environ.get("DEFGD_PURE_PYTHON", "0") in ("", "0"):
    try:
        from .. import _kernels as compiled
    except ImportError:
        compiled = None

active = compiled if compiled is not None else reference
BACKEND = "compiled" if compiled is not None else "reference"

ls_gradient = active.ls_gradient
truncated_operator_share = active.truncated_operator_share

__all__ = [
    "BACKEND",
    "active",
    "compiled",
    "reference",
    "ls_gradient",
    "truncated_operator_share",
]
