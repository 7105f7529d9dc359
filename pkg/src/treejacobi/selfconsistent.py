"""Self-consistent solve of the half-edge resolvent recursion.

For each oriented half-edge f the unknown m_f(z) is the Green's
function at the root of the half-tree hanging off the target of f in
the universal cover.  The fixed point solved here is

    1/m_f = -z + b(tau(f)) - sum_{f' != rev(f), src(f') = tau(f)} a_{f'}^2 m_{f'}

and the per-vertex Green's function follows by closing the sum over
the whole out-star:

    1/G_u = -z + b(u) - sum_{src(f) = u} a_f^2 m_f.

For Im z > 0 the solution is Herglotz: every m_f and G_u has positive
imaginary part, which the solver verifies after convergence.  Real z
in the resolvent set is reached by a short ladder of solves at
z + i*eps warm-starting a final iteration on the axis itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConvergenceError
from .graph import JacobiParams, MultiGraph, spectral_diameter

# pole guard for the 1 - a^2 m m~ denominator of Q
_Q_POLE_FLOOR = 1e-14


@dataclass
class SolverConfig:
    tolerance: float = 1e-12
    max_iterations: int = 1_000_000
    damping: float = 1.0
    initial_value: complex | None = None


@dataclass
class MSolution:
    """Converged solve at one z: half-edge m, vertex G, edge-pair Q."""

    z: complex
    m: np.ndarray
    G: np.ndarray
    Q: np.ndarray
    residual: float
    iterations: int
    q_discrepancy: float


@dataclass(frozen=True)
class _KernelArrays:
    he_source: np.ndarray
    he_target: np.ndarray
    he_rev: np.ndarray
    a2: np.ndarray
    b: np.ndarray
    p: int


def _arrays(graph: MultiGraph, params: JacobiParams) -> _KernelArrays:
    return _KernelArrays(
        graph.he_source,
        graph.he_target,
        graph.he_reversal,
        params.a * params.a,
        params.b,
        graph.num_vertices,
    )


def solve_batch(graph, params, zs, cfg: SolverConfig | None = None, m0=None):
    """Raw batched solve at strictly complex z values.

    Returns (m, residual, iterations) arrays; no Herglotz check, no
    realification.  m0 rows warm-start each point, default -1/z.
    """
    cfg = cfg or SolverConfig()
    ka = _arrays(graph, params)
    zs = np.atleast_1d(np.asarray(zs, dtype=np.complex128))
    H = graph.num_half_edges
    if m0 is None:
        init = cfg.initial_value
        if init is None:
            m0 = np.repeat((-1.0 / zs)[:, None], H, axis=1)
        else:
            m0 = np.full((zs.shape[0], H), complex(init), dtype=np.complex128)
    else:
        m0 = np.array(m0, dtype=np.complex128)
    return kernels.solve_m_batch(
        zs, m0, ka.he_source, ka.he_target, ka.he_rev, ka.a2, ka.b, ka.p,
        cfg.tolerance, cfg.max_iterations, cfg.damping,
    )


def recursion_residual(graph, params, m, z) -> float:
    """Scaled residual of the recursion at a given m vector (max over f)."""
    ka = _arrays(graph, params)
    m = np.asarray(m, dtype=np.complex128)
    S = np.zeros(ka.p, dtype=np.complex128)
    np.add.at(S, ka.he_source, ka.a2 * m)
    D = -z + ka.b[ka.he_target] - (S[ka.he_target] - ka.a2[ka.he_rev] * m[ka.he_rev])
    return float(np.max(np.abs(1.0 / m - D) / np.maximum(1.0, np.abs(D))))


def green_from_m(graph, params, m, z):
    """Per-vertex Green's function from a converged m vector.

    A vanishing denominator yields an inf entry (a pole of G), not an
    error.
    """
    ka = _arrays(graph, params)
    m = np.asarray(m, dtype=np.complex128)
    S = np.zeros(ka.p, dtype=np.complex128)
    np.add.at(S, ka.he_source, ka.a2 * m)
    denom = -z + ka.b - S
    with np.errstate(divide="ignore"):
        return np.where(denom == 0, np.inf + 0j, 1.0 / denom)


def q_from_m(graph, params, m, z):
    """Per-edge-pair Q and the max pairwise discrepancy of its three forms.

    Q_e = 1/(1 - a_e^2 m_e m_rev) must also equal G_src/m_rev and
    G_tgt/m_e; the returned discrepancy is the largest relative gap
    between the three evaluations over all pairs.  A denominator below
    1e-14 in magnitude marks the pair as a pole (inf).
    """
    m = np.asarray(m, dtype=np.complex128)
    G = green_from_m(graph, params, m, z)
    E = graph.num_pairs
    fwd = 2 * np.arange(E)
    bwd = fwd + 1
    a2 = (params.a[fwd]) ** 2
    denom = 1.0 - a2 * m[fwd] * m[bwd]
    src = graph.he_source[fwd]
    tgt = graph.he_target[fwd]
    with np.errstate(divide="ignore", invalid="ignore"):
        q1 = 1.0 / denom
        q2 = G[src] / m[bwd]
        q3 = G[tgt] / m[fwd]
    pole = np.abs(denom) < _Q_POLE_FLOOR
    q = np.where(pole, np.inf + 0j, q1)
    finite = ~pole & np.isfinite(q1) & np.isfinite(q2) & np.isfinite(q3)
    disc = 0.0
    if finite.any():
        scale = np.maximum.reduce(
            [np.abs(q1[finite]), np.abs(q2[finite]), np.abs(q3[finite])]
        )
        scale = np.maximum(scale, 1e-300)
        d12 = np.abs(q1[finite] - q2[finite]) / scale
        d13 = np.abs(q1[finite] - q3[finite]) / scale
        d23 = np.abs(q2[finite] - q3[finite]) / scale
        disc = float(np.max(np.maximum(np.maximum(d12, d13), d23)))
    return q, disc


def _assemble(graph, params, z, m, res, iters) -> MSolution:
    G = green_from_m(graph, params, m, z)
    Q, disc = q_from_m(graph, params, m, z)
    return MSolution(z, m, G, Q, float(res), int(iters), disc)


_REAL_LADDER_FACTOR = 8.0
_REAL_LADDER_LEVELS = 3


def solve_m(graph, params, z, cfg: SolverConfig | None = None) -> MSolution:
    """Solve the recursion at one point z.

    Im z > 0: direct solve, Herglotz signs verified.  Im z == 0: the
    point must lie in the resolvent set; solved through a descending
    i*eps ladder and a final on-axis polish, returned with exactly real
    m.  Im z < 0 is rejected.
    """
    cfg = cfg or SolverConfig()
    z = complex(z)
    if z.imag < 0:
        raise ConvergenceError(f"Im z < 0 not supported (z = {z})")
    if z.imag > 0:
        m, res, it = solve_batch(graph, params, [z], cfg)
        m, res, it = m[0], res[0], it[0]
        if res > cfg.tolerance:
            raise ConvergenceError(
                f"no convergence at z = {z}: residual {res:.3e} after {it} iterations"
            )
        sol = _assemble(graph, params, z, m, res, it)
        if np.any(sol.m.imag <= 0) or np.any(sol.G.imag <= 0):
            raise ConvergenceError(
                f"non-Herglotz solution at z = {z}; this indicates a bug"
            )
        return sol

    # real axis: ladder down, then polish on the axis
    eps0 = 1e-3 * spectral_diameter(graph, params)
    total_it = 0
    m_prev = None
    for lvl in range(_REAL_LADDER_LEVELS):
        eps = eps0 / _REAL_LADDER_FACTOR**lvl
        zc = complex(z, eps)
        m, res, it = solve_batch(
            graph, params, [zc], cfg, m0=None if m_prev is None else m_prev[None, :]
        )
        m_prev = m[0]
        total_it += int(it[0])
        if res[0] > cfg.tolerance:
            raise ConvergenceError(
                f"ladder solve failed at z = {zc}: residual {res[0]:.3e}"
            )
    m, res, it = solve_batch(graph, params, [complex(z, 0.0)], cfg, m0=m_prev[None, :])
    m, res, it = m[0], res[0], int(it[0])
    total_it += it
    if res > cfg.tolerance:
        raise ConvergenceError(
            f"no real-axis convergence at z = {z} (residual {res:.3e}); "
            "the point may touch the spectrum"
        )
    if np.max(np.abs(m.imag)) > 100.0 * cfg.tolerance * max(1.0, np.max(np.abs(m))):
        raise ConvergenceError(
            f"solution at real z = {z} did not degenerate to real values"
        )
    m = m.real.astype(np.complex128)
    return _assemble(graph, params, z, m, res, total_it)
