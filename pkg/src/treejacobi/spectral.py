"""Density of states on the real axis, with atoms, gaps, and the IDS.

The absolutely continuous density at E is recovered by solving the
self-consistent equations at E + i*eps for a small descending ladder of
eps values and extrapolating Im sum_v G_v / (pi p) linearly to eps = 0.
Point masses announce themselves through eps * Im G_v tending to a
positive limit; their positions are refined by a golden-section search
and their per-vertex weights read off from the same ladder.  Grid
points too close to an atom are excluded from the continuous density
(the extrapolation there is polluted by the pole) and flagged.

The integrated density of states combines the trapezoid cumulative of
the continuous part with exact jumps at the atoms.  Spectral gaps are
maximal grid runs of negligible density; each bounded gap is labelled
by the contour-tracked IDS value at its midpoint, which must be an
integer multiple of 1/p.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, NumericalError
from .floquet import ids_via_arg
from .graph import JacobiParams, MultiGraph, spectral_bounds, spectral_diameter
from .numerics import golden_section_max, linear_fit_to_zero
from .selfconsistent import SolverConfig, _arrays, solve_batch

FLAG_NO_CONVERGE = 1
FLAG_EXTRAPOLATION_SUSPECT = 2
FLAG_ATOM_WINDOW = 4

# atom exclusion half-width, as a multiple of the largest ladder eps;
# inside it the pole tail still contaminates the linear extrapolation
_ATOM_WINDOW_FACTOR = 25.0

# a genuine atom has eps * Im G linear in eps to high relative accuracy;
# a van Hove band-edge singularity produces a sqrt(eps) profile whose
# best linear fit misses by a few percent, so this cut rejects it
_ATOM_LINEARITY_TOL = 0.02

# extra points per grid cell when refining around a density crossing
_REFINE_POINTS = 7


@dataclass
class Atom:
    """A point mass of the density of states.

    weights holds the per-vertex limits of eps * Im G_v at the atom;
    the DOS mass is their average over the p vertices.  fit_residual is
    the largest deviation of the ladder fit from linearity, relative to
    the largest weight.
    """

    lam: float
    mass: float
    weights: np.ndarray
    fit_residual: float


@dataclass
class Gap:
    """A bounded spectral gap with its IDS label.

    k is the contour-tracked IDS at the gap midpoint, label the nearest
    integer numerator of k = label/p, residual the distance |p*k - label|.
    suspect marks a label that failed its integrality tolerance or a
    midpoint the contour probe rejected.
    """

    left: float
    right: float
    k: float
    label: int | None
    residual: float
    suspect: bool


@dataclass
class DOSResult:
    """Grid density of states plus derived spectral structure."""

    graph: MultiGraph
    params: JacobiParams
    energies: np.ndarray
    density: np.ndarray
    ids: np.ndarray
    atoms: list[Atom]
    gaps: list[Gap]
    support: tuple[float, float]
    mass_total: float
    eps_ladder: tuple[float, ...]
    flags: np.ndarray
    num_vertices: int


def _incidence(graph: MultiGraph) -> np.ndarray:
    H = graph.num_half_edges
    IN = np.zeros((H, graph.num_vertices))
    IN[np.arange(H), graph.he_source] = 1.0
    return IN


def _green_batch(ka, IN, M, zs):
    # vertex Green's functions for a batch of converged m rows; off the
    # axis the denominator has strictly negative imaginary part
    S = (M * ka.a2) @ IN
    denom = -zs[:, None] + ka.b[None, :] - S
    return 1.0 / denom


def _ladder_scan(graph, params, E, ladder, cfg, workers=1):
    """Im G_v at E + i*eps for every grid point and ladder level.

    Warm-starts each level from the previous one, per grid point, so
    the result is identical for any chunking.  Returns (imG, nonconv)
    with imG of shape (levels, points, vertices).
    """
    ka = _arrays(graph, params)
    IN = _incidence(graph)
    n = E.shape[0]
    L = len(ladder)
    imG = np.empty((L, n, graph.num_vertices))
    nonconv = np.zeros(n, dtype=bool)

    def run(i0, i1):
        m_prev = None
        for l, eps in enumerate(ladder):
            zs = E[i0:i1] + 1j * eps
            m, res, _ = solve_batch(graph, params, zs, cfg, m0=m_prev)
            nonconv[i0:i1] |= res > cfg.tolerance
            m_prev = m
            imG[l, i0:i1] = _green_batch(ka, IN, m, zs).imag

    if workers <= 1 or n < 4 * workers:
        run(0, n)
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [
                pool.submit(run, bounds[i], bounds[i + 1]) for i in range(workers)
            ]
            for f in futs:
                f.result()
    return imG, nonconv


def _refine_atom(graph, params, lam0, halfwidth, ladder, cfg, threshold):
    """Golden-section refinement of an atom position, then its weights.

    Maximises eps_mid * Im sum_v G_v at fixed mid-ladder height, which
    peaks at the pole; per-vertex weights are the eps -> 0 intercepts
    of eps * Im G_v at the refined position.  Returns None when the
    refined mass falls below threshold (a false candidate).
    """
    p = graph.num_vertices
    ka = _arrays(graph, params)
    IN = _incidence(graph)
    eps_mid = ladder[len(ladder) // 2]
    state = {"m": None}

    def metric(x):
        z = np.array([complex(x, eps_mid)])
        m0 = None if state["m"] is None else state["m"]
        m, res, _ = solve_batch(graph, params, z, cfg, m0=m0)
        if res[0] > cfg.tolerance:
            raise ConvergenceError(
                f"atom refinement solve failed at z = {z[0]} (residual {res[0]:.3e})"
            )
        state["m"] = m
        G = _green_batch(ka, IN, m, z)
        return eps_mid * float(G.imag.sum()) / p

    diam = spectral_diameter(graph, params)
    lam = golden_section_max(
        metric, lam0 - halfwidth, lam0 + halfwidth, xtol=1e-10 * diam
    )

    wts = np.empty((len(ladder), p))
    m_prev = None
    for l, eps in enumerate(ladder):
        z = np.array([complex(lam, eps)])
        m, res, _ = solve_batch(graph, params, z, cfg, m0=m_prev)
        if res[0] > cfg.tolerance:
            raise ConvergenceError(
                f"atom weight solve failed at z = {z[0]} (residual {res[0]:.3e})"
            )
        m_prev = m
        G = _green_batch(ka, IN, m, z)
        wts[l] = eps * G.imag[0]
    w, _, resid = linear_fit_to_zero(np.asarray(ladder), wts)
    w = np.maximum(w, 0.0)
    mass = float(w.sum()) / p
    rel = float(np.max(resid)) / max(float(w.max()), 1e-300)
    if mass < threshold or rel > _ATOM_LINEARITY_TOL:
        return None
    return Atom(float(lam), mass, w, rel)


def find_atoms(
    graph: MultiGraph,
    params: JacobiParams,
    candidates,
    *,
    eps_ladder=None,
    halfwidth: float | None = None,
    cfg: SolverConfig | None = None,
    atom_threshold: float = 1e-3,
) -> list[Atom]:
    """Refine candidate atom positions into confirmed point masses.

    Each candidate is searched within +/- halfwidth; results closer
    together than the coarsest ladder eps are deduplicated keeping the
    larger mass.
    """
    cfg = cfg or SolverConfig(tolerance=1e-10, damping=0.5)
    diam = spectral_diameter(graph, params)
    if eps_ladder is None:
        eps_ladder = diam * np.array([1e-3, 5e-4, 2.5e-4])
    ladder = np.asarray(sorted(np.atleast_1d(eps_ladder), reverse=True), dtype=float)
    if halfwidth is None:
        halfwidth = 10.0 * ladder[0]
    atoms = []
    for lam0 in np.atleast_1d(np.asarray(candidates, dtype=float)):
        atom = _refine_atom(
            graph, params, float(lam0), halfwidth, ladder, cfg, atom_threshold
        )
        if atom is not None:
            atoms.append(atom)
    atoms.sort(key=lambda a: a.lam)
    kept: list[Atom] = []
    for atom in atoms:
        if kept and abs(atom.lam - kept[-1].lam) < ladder[0]:
            if atom.mass > kept[-1].mass:
                kept[-1] = atom
        else:
            kept.append(atom)
    return kept


def _runs(mask: np.ndarray):
    # maximal runs of True, as inclusive (start, stop) index pairs
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return []
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    stops = np.concatenate([idx[breaks], [idx[-1]]])
    return list(zip(starts.tolist(), stops.tolist()))


def find_gaps(
    dos: DOSResult,
    *,
    density_floor: float = 1e-4,
    min_points: int = 3,
    label: bool = True,
    cfg: SolverConfig | None = None,
    label_residual_tol: float = 1e-3,
) -> list[Gap]:
    """Bounded spectral gaps of a computed density of states.

    A gap is a maximal grid run with density below density_floor, at
    least min_points long, not touching the grid boundary, and free of
    non-converged or atom-window points (an atom therefore splits the
    gap it sits in).  With label=True the midpoint IDS is tracked along
    a contour and snapped to the nearest multiple of 1/p; a failed
    probe or a residual beyond label_residual_tol marks the gap as
    suspect instead of raising.
    """
    E = dos.energies
    d = dos.density
    p = dos.num_vertices
    ok = (
        (d < density_floor)
        & ((dos.flags & FLAG_NO_CONVERGE) == 0)
        & ((dos.flags & FLAG_ATOM_WINDOW) == 0)
    )
    gaps: list[Gap] = []
    for i, j in _runs(ok):
        if i == 0 or j == E.shape[0] - 1:
            continue
        if j - i + 1 < min_points:
            continue
        left, right = float(E[i]), float(E[j])
        if not label:
            gaps.append(Gap(left, right, float("nan"), None, float("nan"), False))
            continue
        mid = 0.5 * (left + right)
        try:
            k = ids_via_arg(dos.graph, dos.params, mid, cfg)
        except (NumericalError, ConvergenceError):
            gaps.append(Gap(left, right, float("nan"), None, float("nan"), True))
            continue
        lab = int(round(p * k))
        resid = abs(p * k - lab)
        gaps.append(Gap(left, right, k, lab, resid, resid > label_residual_tol))
    return gaps


def _extrapolate(ladder, imG, p, density_floor):
    s = imG.sum(axis=2)
    dens_eps = s / (np.pi * p)
    density, _, fitres = linear_fit_to_zero(ladder, dens_eps)
    suspect = fitres > 0.05 * np.maximum(density, 10.0 * density_floor)
    return density, suspect


def dos_grid(
    graph: MultiGraph,
    params: JacobiParams,
    *,
    n_points: int = 1201,
    e_range: tuple[float, float] | None = None,
    eps_ladder=None,
    cfg: SolverConfig | None = None,
    density_floor: float = 1e-4,
    support_floor: float = 1e-3,
    atom_threshold: float = 1e-3,
    refine_edges: bool = True,
    label_gaps: bool = True,
    workers: int = 1,
) -> DOSResult:
    """Full density-of-states scan over an energy grid.

    Solves the eps ladder at every grid point (warm-started downward),
    extrapolates the continuous density to the axis, detects and
    refines atoms, optionally inserts extra grid points around density
    threshold crossings to sharpen band edges, and assembles the IDS,
    the spectral support, the bounded gaps, and the total mass.

    support_floor sets the density level defining the support edges; it
    is deliberately above density_floor because the extrapolated
    density carries a small positive tail just outside a band edge.
    """
    p = graph.num_vertices
    lo, hi = spectral_bounds(graph, params)
    diam = hi - lo
    if e_range is None:
        e_range = (lo - 0.05 * diam, hi + 0.05 * diam)
    if eps_ladder is None:
        eps_ladder = diam * np.array([1e-3, 5e-4, 2.5e-4])
    ladder = np.asarray(sorted(np.atleast_1d(eps_ladder), reverse=True), dtype=float)
    cfg = cfg or SolverConfig(tolerance=1e-10, damping=0.5)
    workers = max(1, int(workers))

    E = np.linspace(e_range[0], e_range[1], n_points)
    h = E[1] - E[0]
    imG, nonconv = _ladder_scan(graph, params, E, ladder, cfg, workers)
    density, suspect = _extrapolate(ladder, imG, p, density_floor)
    flags = np.zeros(n_points, dtype=np.uint8)
    flags[nonconv] |= FLAG_NO_CONVERGE
    flags[suspect & ~nonconv] |= FLAG_EXTRAPOLATION_SUSPECT

    # atom candidates from the grid-point mass metric
    wt, _, _ = linear_fit_to_zero(
        ladder, ladder[:, None] * imG.sum(axis=2) / p
    )
    atoms: list[Atom] = []
    for i0, i1 in _runs(wt > atom_threshold):
        j = i0 + int(np.argmax(wt[i0 : i1 + 1]))
        atom = _refine_atom(
            graph, params, float(E[j]), 2.0 * h, ladder, cfg, atom_threshold
        )
        if atom is not None:
            atoms.append(atom)
    atoms.sort(key=lambda a: a.lam)
    deduped: list[Atom] = []
    for atom in atoms:
        if deduped and abs(atom.lam - deduped[-1].lam) < ladder[0]:
            if atom.mass > deduped[-1].mass:
                deduped[-1] = atom
        else:
            deduped.append(atom)
    atoms = deduped
    window = _ATOM_WINDOW_FACTOR * ladder[0]

    if refine_edges:
        masked = density.copy()
        for atom in atoms:
            masked[np.abs(E - atom.lam) < window] = 0.0
        cells = set()
        for thr in (density_floor, support_floor):
            side = masked > thr
            cells.update(np.nonzero(side[:-1] != side[1:])[0].tolist())
        if cells:
            extra = np.concatenate(
                [
                    np.linspace(E[j], E[j + 1], _REFINE_POINTS + 2)[1:-1]
                    for j in sorted(cells)
                ]
            )
            imG2, nonconv2 = _ladder_scan(graph, params, extra, ladder, cfg, workers)
            dens2, susp2 = _extrapolate(ladder, imG2, p, density_floor)
            flags2 = np.zeros(extra.shape[0], dtype=np.uint8)
            flags2[nonconv2] |= FLAG_NO_CONVERGE
            flags2[susp2 & ~nonconv2] |= FLAG_EXTRAPOLATION_SUSPECT
            order = np.argsort(np.concatenate([E, extra]), kind="stable")
            E = np.concatenate([E, extra])[order]
            density = np.concatenate([density, dens2])[order]
            flags = np.concatenate([flags, flags2])[order]

    for atom in atoms:
        win = np.abs(E - atom.lam) < window
        density[win] = 0.0
        flags[win] |= FLAG_ATOM_WINDOW
    density = np.maximum(density, 0.0)

    above = np.nonzero(density > support_floor)[0]
    if above.size == 0:
        raise NumericalError(
            "no grid point carries continuous density above the support floor; "
            "the grid or ladder is unusable for this operator"
        )
    support = (float(E[above[0]]), float(E[above[-1]]))

    ids = np.concatenate(
        [[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(E))]
    )
    for atom in atoms:
        ids[E >= atom.lam - 1e-12 * diam] += atom.mass
    mass_total = float(ids[-1])

    dos = DOSResult(
        graph,
        params,
        E,
        density,
        ids,
        atoms,
        [],
        support,
        mass_total,
        tuple(float(x) for x in ladder),
        flags,
        p,
    )
    dos.gaps = find_gaps(
        dos, density_floor=density_floor, label=label_gaps, cfg=None
    )
    return dos
