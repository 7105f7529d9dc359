"""Floquet determinant of a periodic Jacobi operator on a covering tree.

The determinant is assembled pointwise from a converged m-function
vector as a finite product over edge pairs and vertices,

    Phi(z) = prod_e Q_e(z) / prod_u G_u(z),

and admits an independent integral form through the density of states,
Phi(z) = exp(p * int log(t - z) dk(t)) with p the number of vertices.
Matching the two, and matching the logarithmic derivative of the
product against -sum_u G_u, are the main internal consistency checks of
the whole pipeline.  The argument of Phi along a contour from the far
resolvent into a spectral gap recovers the integrated density of
states at the gap.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NumericalError
from .graph import JacobiParams, MultiGraph, spectral_bounds, spectral_diameter
from .numerics import linear_fit_to_zero
from .selfconsistent import (
    MSolution,
    SolverConfig,
    green_from_m,
    q_from_m,
    solve_batch,
    solve_m,
)

# contour walker: max accumulated argument per accepted step, max
# disagreement between the principal argument jump and its trapezoid
# prediction from (log Phi)' = -sum G (catches 2*pi aliasing over a
# too-long step), and the fraction of a segment below which step
# halving gives up
_ARG_STEP_MAX = 1.2
_ARG_TRAP_TOL = 0.5
_STEP_FLOOR = 2.0**-42

# |t - z| is clipped here before taking logs on the real axis; the
# density weight at such points is negligible by construction
_LOG_CLIP = 1e-18


@dataclass
class FloquetValue:
    """One evaluation of the determinant, tagged by how it was obtained."""

    z: complex
    phi: complex
    log_phi: complex
    source: str


def phi_product(sol: MSolution) -> FloquetValue:
    """Determinant from a converged solve, as prod(Q) / prod(G).

    Raises NumericalError when any factor sits at a pole or a zero, in
    which case the product form is meaningless at this z.
    """
    bad_q = ~np.isfinite(sol.Q)
    if bad_q.any():
        raise NumericalError(
            f"Q factor at a pole for edge pair(s) {np.nonzero(bad_q)[0].tolist()} "
            f"at z = {sol.z}"
        )
    bad_g = ~np.isfinite(sol.G) | (sol.G == 0)
    if bad_g.any():
        raise NumericalError(
            f"G factor at a pole or zero for vertex(es) "
            f"{np.nonzero(bad_g)[0].tolist()} at z = {sol.z}"
        )
    num = complex(np.prod(sol.Q))
    den = complex(np.prod(sol.G))
    if num == 0 or den == 0 or not (cmath.isfinite(num) and cmath.isfinite(den)):
        raise NumericalError(f"degenerate determinant factors at z = {sol.z}")
    phi = num / den
    return FloquetValue(complex(sol.z), phi, cmath.log(phi), "product")


def _phi_and_sum(graph, params, m, z) -> tuple[complex, complex]:
    # raw product and sum G for the contour walker; nan phi signals
    # "retry closer"
    G = green_from_m(graph, params, m, z)
    Q, _ = q_from_m(graph, params, m, z)
    num = complex(np.prod(Q))
    den = complex(np.prod(G))
    s = complex(np.sum(G))
    if den == 0 or num == 0:
        return complex("nan"), s
    if not (cmath.isfinite(num) and cmath.isfinite(den)):
        return complex("nan"), s
    return num / den, s


def _phi_from_m(graph, params, m, z) -> complex:
    return _phi_and_sum(graph, params, m, z)[0]


def phi_integral(dos, z, *, mass_tol: float = 1e-2) -> FloquetValue:
    """Determinant through the density of states.

    Evaluates exp(p * L) with L the integral of log(t - z) against the
    absolutely continuous density plus exact atom terms.  On the real
    axis the branch is the continuation from z -> -infinity through the
    upper half plane: log|t - z| - i*pi for t < z, log|t - z| for
    t > z.  Rejects z below the axis, z on the essential support, z at
    an atom, and a density whose total mass is not close to 1.
    """
    z = complex(z)
    if z.imag < 0:
        raise NumericalError(f"Im z < 0 not supported in phi_integral (z = {z})")
    if abs(dos.mass_total - 1.0) > mass_tol:
        raise NumericalError(
            f"density of states mass {dos.mass_total:.6f} deviates from 1 by more "
            f"than {mass_tol}; the grid does not cover the spectrum"
        )
    E = dos.energies
    rho = dos.density
    p = dos.num_vertices
    if z.imag == 0:
        x = z.real
        for atom in dos.atoms:
            if abs(x - atom.lam) < 1e-10:
                raise NumericalError(f"z = {x} coincides with the atom at {atom.lam}")
        lo, hi = dos.support
        if lo <= x <= hi and float(np.interp(x, E, rho)) > 1e-3:
            raise NumericalError(f"real z = {x} lies inside the essential spectrum")
        dist = np.maximum(np.abs(E - x), _LOG_CLIP)
        lg = np.log(dist) + 1j * np.where(E < x, -np.pi, 0.0)

        def atom_log(lam: float) -> complex:
            v = cmath.log(abs(lam - x))
            return v - 1j * np.pi if lam < x else v

    else:
        # t - z lies in the lower half plane; the principal branch is
        # continuous in t and matches the real-axis convention above
        lg = np.log(E - z)

        def atom_log(lam: float) -> complex:
            return cmath.log(lam - z)

    L = complex(np.trapezoid(lg * rho, E))
    L += sum(a.mass * atom_log(a.lam) for a in dos.atoms)
    log_phi = p * L
    return FloquetValue(z, cmath.exp(log_phi), log_phi, "integral")


def _walk_segments(graph, params, segments, m_start, phi_start, s_start, cfg):
    """Track arg Phi along straight segments, adaptively subdivided.

    Each accepted step re-solves warm-started from the previous point
    and accumulates the principal argument of the ratio of consecutive
    determinant values.  The principal jump alone cannot distinguish a
    small change from one aliased by a multiple of 2*pi, so every step
    is also checked against the trapezoid prediction from the exact
    derivative (log Phi)' = -sum_u G_u at the two endpoints; a step is
    halved whenever the solve fails, the product degenerates, the jump
    is too large, or the jump disagrees with the prediction.
    """
    theta = 0.0
    m_cur = m_start
    phi_cur = phi_start
    s_cur = s_start
    for z_from, z_to in segments:
        span = z_to - z_from
        t = 0.0
        dt = 0.25
        while t < 1.0:
            step = min(dt, 1.0 - t)
            if step < _STEP_FLOOR:
                raise NumericalError(
                    f"contour step underflow near z = {z_from + t * span}; "
                    "cannot resolve the winding of the determinant"
                )
            z_next = z_from + (t + step) * span
            dz = step * span
            m_new, res, _ = solve_batch(
                graph, params, [z_next], cfg, m0=m_cur[None, :]
            )
            if res[0] > cfg.tolerance:
                dt = step / 2.0
                continue
            phi_new, s_new = _phi_and_sum(graph, params, m_new[0], z_next)
            if not cmath.isfinite(phi_new) or phi_new == 0:
                dt = step / 2.0
                continue
            dtheta = cmath.phase(phi_new / phi_cur)
            predicted = (-0.5 * (s_cur + s_new) * dz).imag
            if abs(dtheta) > _ARG_STEP_MAX or abs(dtheta - predicted) > _ARG_TRAP_TOL:
                dt = step / 2.0
                continue
            theta += dtheta
            t += step
            m_cur = m_new[0]
            phi_cur = phi_new
            s_cur = s_new
            dt = min(step * 2.0, 0.25)
    return theta, m_cur, phi_cur


def _assert_gap_point(graph, params, E0, cfg, ladder, density_floor):
    # Richardson probe: both the local density and the local point mass
    # must extrapolate to zero before E0 is accepted as a gap point
    p = graph.num_vertices
    dens = np.empty(len(ladder))
    wts = np.empty(len(ladder))
    m_prev = None
    for i, eps in enumerate(ladder):
        z = complex(E0, eps)
        m, res, _ = solve_batch(
            graph, params, [z], cfg, m0=None if m_prev is None else m_prev[None, :]
        )
        if res[0] > cfg.tolerance:
            raise ConvergenceError(
                f"gap probe failed to converge at z = {z} (residual {res[0]:.3e})"
            )
        m_prev = m[0]
        G = green_from_m(graph, params, m_prev, z)
        s = float(G.imag.sum())
        dens[i] = s / (np.pi * p)
        wts[i] = eps * s / p
    rho0, _, _ = linear_fit_to_zero(np.asarray(ladder), dens)
    w0, _, _ = linear_fit_to_zero(np.asarray(ladder), wts)
    if rho0 > 10.0 * density_floor or w0 > 1e-3:
        raise NumericalError(
            f"E0 = {E0} does not lie in a spectral gap "
            f"(local density {rho0:.3e}, local mass {w0:.3e})"
        )


def ids_via_arg(
    graph: MultiGraph,
    params: JacobiParams,
    E0: float,
    cfg: SolverConfig | None = None,
    *,
    density_floor: float = 1e-4,
) -> float:
    """Integrated density of states at a gap point E0, via arg Phi.

    Walks z from a real point left of the spectrum up into the upper
    half plane, across to above E0, and back down onto the axis,
    tracking the continuous argument of the determinant.  The limit
    satisfies Im log Phi(E0) = -pi * p * k(E0), so the return value is
    -theta / (pi * p).  In an actual gap this is an integer multiple of
    1/p up to contour error; the caller decides how to round.
    """
    E0 = float(E0)
    cfg = cfg or SolverConfig(tolerance=1e-10, damping=0.5)
    p = graph.num_vertices
    lo, hi = spectral_bounds(graph, params)
    diam = spectral_diameter(graph, params)
    ladder = [1e-3 * diam, 5e-4 * diam, 2.5e-4 * diam]
    _assert_gap_point(graph, params, E0, cfg, ladder, density_floor)

    eps = 1e-3 * diam
    eps_min = 1e-8 * diam
    z_start = lo - 0.5 * diam
    sol = solve_m(graph, params, z_start, cfg)
    phi_start, s_start = _phi_and_sum(graph, params, sol.m, complex(z_start))
    if not cmath.isfinite(phi_start) or phi_start.real <= 0:
        raise NumericalError(
            f"determinant not positive at the contour start z = {z_start}; "
            "this indicates a bug"
        )

    segments = [
        (complex(z_start, 0.0), complex(z_start, eps)),
        (complex(z_start, eps), complex(E0, eps)),
        (complex(E0, eps), complex(E0, eps_min)),
    ]
    theta, m_cur, phi_cur = _walk_segments(
        graph, params, segments, sol.m, phi_start, s_start, cfg
    )

    # final hop onto the axis; in a gap this limit is real
    m_fin, res, _ = solve_batch(
        graph, params, [complex(E0, 0.0)], cfg, m0=m_cur[None, :]
    )
    if res[0] > cfg.tolerance:
        raise ConvergenceError(
            f"on-axis solve at gap point E0 = {E0} did not converge "
            f"(residual {res[0]:.3e})"
        )
    phi_fin = _phi_from_m(graph, params, m_fin[0], complex(E0, 0.0))
    if not cmath.isfinite(phi_fin) or phi_fin == 0:
        raise NumericalError(f"degenerate determinant on the axis at E0 = {E0}")
    theta += cmath.phase(phi_fin / phi_cur)

    resid_pi = abs(theta - np.pi * round(theta / np.pi))
    if resid_pi > 1e-3:
        raise NumericalError(
            f"arg Phi at E0 = {E0} did not reach a real limit "
            f"(residual {resid_pi:.3e} rad against the nearest multiple of pi)"
        )
    return -theta / (np.pi * p)


@dataclass
class LogDerivativeReport:
    """Residuals of the two logarithmic derivative identities at one z."""

    z: complex
    h: float
    phi_residual: float
    edge_vertex_residual: float


def log_derivative_check(
    graph: MultiGraph,
    params: JacobiParams,
    z,
    h: float = 1e-5,
    cfg: SolverConfig | None = None,
) -> LogDerivativeReport:
    """Check (log Phi)' = -sum_u G_u and its edge/vertex refinement.

    Central differences of the logs of the determinant factors at
    z +/- h are compared against the exact derivative expressions at z.
    The refinement checks sum_e dlog Q_e = sum_u (dlog G_u - G_u), the
    per-factor form of the same identity.  Solves run at tightened
    tolerance so the finite difference dominates the error.
    """
    z = complex(z)
    h = float(h)
    cfg = cfg or SolverConfig()
    tight = SolverConfig(
        tolerance=min(cfg.tolerance, 1e-14),
        max_iterations=cfg.max_iterations,
        damping=cfg.damping,
        initial_value=cfg.initial_value,
    )
    sol0 = solve_m(graph, params, z, tight)
    solp = solve_m(graph, params, z + h, tight)
    solm = solve_m(graph, params, z - h, tight)
    for s in (solp, sol0, solm):
        if not (np.all(np.isfinite(s.Q)) and np.all(np.isfinite(s.G))):
            raise NumericalError(
                f"determinant factor at a pole near z = {z}; move the check point"
            )

    phi_p = complex(np.prod(solp.Q) / np.prod(solp.G))
    phi_m = complex(np.prod(solm.Q) / np.prod(solm.G))
    dlog_phi = cmath.log(phi_p / phi_m) / (2.0 * h)
    phi_res = abs(dlog_phi + complex(np.sum(sol0.G)))

    dlog_q = np.log(solp.Q / solm.Q).sum() / (2.0 * h)
    dlog_g = np.log(solp.G / solm.G).sum() / (2.0 * h)
    ev_res = abs(complex(dlog_q - (dlog_g - np.sum(sol0.G))))
    return LogDerivativeReport(z, h, float(phi_res), float(ev_res))
