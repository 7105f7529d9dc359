"""Dispatch to the backend selected in treejacobi.backend."""

from .backend import BACKEND, USE_NUMBA

if USE_NUMBA:
    from . import _kernels_numba as _impl
else:
    from . import _kernels_numpy as _impl

solve_m_batch = _impl.solve_m_batch
schur_samples = _impl.schur_samples
householder_tridiag = _impl.householder_tridiag
tql_eigenvalues = _impl.tql_eigenvalues
rank_elimination = _impl.rank_elimination

__all__ = [
    "BACKEND",
    "USE_NUMBA",
    "solve_m_batch",
    "schur_samples",
    "householder_tridiag",
    "tql_eigenvalues",
    "rank_elimination",
]
