"""Finite random n-lifts as a brute-force oracle for the computed DOS.

An n-lift replaces every edge pair of the base graph by a uniformly
random permutation of n parallel copies; vertex v becomes the block of
lifted vertices (v, 0..n-1) with diagonal b(v), and an edge pair (u,v)
with coupling a contributes a * P in the (u, v) block and its
transpose opposite.  A self-loop contributes a * (P + P^T) in its own
diagonal block, with P conditioned to be fixed-point-free so that no
lifted loop survives (a fixed point would add 2a to a diagonal entry
and change the local covering structure).  At n = 1 no fixed-point-free
permutation exists, so self-loops lift to themselves there; that is
the one case where the trace differs from n * sum_v b(v).

Spectra of these finite covers converge statistically to the density
of states on the covering tree; the Kolmogorov-Smirnov distance
between the empirical spectral CDF and the computed IDS quantifies the
agreement, and exact kernel dimensions at an eigenvalue give integer
evidence for atom masses.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalError
from .graph import JacobiParams, MultiGraph

_SIZE_CAP = 4000


@dataclass
class LiftMatrix:
    """A sampled n-lift Jacobi matrix with its defining permutations."""

    n: int
    size: int
    entries: np.ndarray
    permutations: np.ndarray
    seed: int


def _fixed_point_free(rng, n):
    # rejection sampling; the acceptance rate tends to 1/e
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == np.arange(n)):
            return perm


def random_lift(graph: MultiGraph, params: JacobiParams, n: int, seed: int) -> LiftMatrix:
    """Sample a random n-lift of the operator, deterministically per seed.

    One uniform permutation per edge pair (fixed-point-free for
    self-loops when n >= 2, identity when n = 1), drawn from a seeded
    PCG64 generator in edge-pair order.
    """
    n = int(n)
    if n < 1:
        raise ValueError("lift degree must be at least 1")
    rng = np.random.default_rng(seed)
    p = graph.num_vertices
    E = graph.num_pairs
    size = p * n
    A = np.zeros((size, size))
    for v in range(p):
        idx = np.arange(v * n, (v + 1) * n)
        A[idx, idx] = params.b[v]
    perms = np.empty((E, n), dtype=np.int64)
    rows = np.arange(n)
    for e in range(E):
        u = int(graph.he_source[2 * e])
        v = int(graph.he_target[2 * e])
        a = float(params.a[2 * e])
        if u == v:
            perm = rows.copy() if n == 1 else _fixed_point_free(rng, n)
        else:
            perm = rng.permutation(n)
        perms[e] = perm
        P = np.zeros((n, n))
        P[rows, perm] = 1.0
        if u == v:
            A[u * n : (u + 1) * n, u * n : (u + 1) * n] += a * (P + P.T)
        else:
            A[u * n : (u + 1) * n, v * n : (v + 1) * n] += a * P
            A[v * n : (v + 1) * n, u * n : (u + 1) * n] += a * P.T
    return LiftMatrix(n, size, A, perms, int(seed))


def eigenvalues(lift: LiftMatrix, *, size_cap: int = _SIZE_CAP) -> np.ndarray:
    """All eigenvalues of the lift, ascending.

    Householder tridiagonalization followed by implicit-shift QL, both
    in-repo; sizes above size_cap are refused to keep runs desk-scale.
    """
    if lift.size > size_cap:
        raise ValueError(
            f"lift size {lift.size} exceeds the eigensolver cap {size_cap}"
        )
    d, e = kernels.householder_tridiag(np.array(lift.entries, dtype=np.float64))
    vals, ok = kernels.tql_eigenvalues(d, e)
    if not ok:
        raise NumericalError("implicit-shift QL failed to converge")
    return np.sort(vals)


def empirical_ids_distance(eigs, dos) -> float:
    """Kolmogorov-Smirnov distance of a spectrum to the computed IDS.

    Eigenvalues agreeing to the eigensolver's resolution are merged
    into one step of the empirical CDF, so a degenerate level compares
    against the IDS as a single jump.  Each step is checked against the
    IDS one grid cell to either side of it; the guard keeps an atom's
    jump, which the grid resolves only to cell width, paired with the
    matching step instead of straddling it.
    """
    lam = np.sort(np.asarray(eigs, dtype=np.float64))
    N = lam.shape[0]
    if N == 0:
        raise ValueError("empty spectrum")
    atol = 1e-8 * max(1.0, float(np.abs(lam[-1])), float(np.abs(lam[0])))
    starts = np.flatnonzero(np.diff(lam) > atol) + 1
    lo = np.concatenate(([0], starts))
    hi = np.concatenate((starts, [N]))
    centers = np.array([lam[a:b].mean() for a, b in zip(lo, hi)])
    delta = float(np.max(np.diff(dos.energies)))
    top = float(dos.ids[-1])
    k_right = np.interp(centers + delta, dos.energies, dos.ids,
                        left=0.0, right=top)
    k_left = np.interp(centers - delta, dos.energies, dos.ids,
                       left=0.0, right=top)
    d_plus = np.max(np.abs(hi / N - k_right))
    d_minus = np.max(np.abs(k_left - lo / N))
    return float(max(d_plus, d_minus))


def kernel_dimension(lift: LiftMatrix, lam: float) -> int:
    """Dimension of the eigenspace of the lift at lam.

    Numerical rank deficiency of (matrix - lam I) under complete-pivot
    elimination with threshold 1e-8 times the matrix norm; pivots
    falling near the threshold are reported as a warning because the
    integer answer is then not trustworthy.
    """
    A = np.array(lift.entries, dtype=np.float64)
    idx = np.arange(lift.size)
    A[idx, idx] -= lam
    norm = float(np.max(np.sum(np.abs(A), axis=1)))
    thr = 1e-8 * max(norm, 1.0)
    rank, borderline = kernels.rank_elimination(A, thr)
    if borderline:
        warnings.warn(
            f"{int(borderline)} pivot(s) within a decade of the rank "
            f"threshold {thr:.3e}; kernel dimension may be unreliable",
            stacklevel=2,
        )
    return int(lift.size - rank)
