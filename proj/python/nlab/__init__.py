"""Nonlocal semilinear equations on a lattice: layer solutions, stability,
and the one-dimensional symmetry check."""

from ._nlab import *  # noqa: F401,F403
from ._nlab import Error, run_pipeline

__all__ = [name for name in dir() if not name.startswith("_")]
