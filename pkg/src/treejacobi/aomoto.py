"""Combinatorial index of an isolated eigenvalue and its local orders.

An isolated atom of the density of states carries per-vertex kernel
weights w_v.  The vertices with positive weight form X1; their
neighbors outside X1 form the boundary set; the rest is X0.  With
E_lambda the number of edge pairs inside X1, the index

    I = #X1 - #boundary - E_lambda

equals p times the atom's DOS mass, and also the order of the zero of
the Floquet determinant at the eigenvalue.  The local_orders table
verifies the expected pole/zero pattern of G, m, and Q on both sides
of the eigenvalue by log-log slope fitting, and the classification
refuses (rather than guesses) whenever a weight is too close to the
decision threshold or the atom fails its isolation checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, RefusedClassificationError
from .floquet import _assert_gap_point
from .graph import JacobiParams, MultiGraph, spectral_diameter
from .numerics import ls_slope
from .selfconsistent import SolverConfig, solve_m
from .spectral import _ATOM_WINDOW_FACTOR, Atom, find_atoms

# relative positions (in atom windows) of the isolation probes around a
# classified eigenvalue
_ISOLATION_PROBES = (1.2, 1.6, 2.0)

_SNAP_SET = (-1, 0, 1, 2)


@dataclass
class LocalOrders:
    """Integer orders at the eigenvalue, with the raw fitted slopes.

    Orders follow the convention -1 pole, 0 regular nonzero, +1 simple
    zero, +2 double zero.  phi_order is the order of the determinant
    zero obtained from the order arithmetic sum(Q) - sum(G); phi_slope
    is the directly regressed slope of log|Phi| against log delta.
    """

    lam: float
    delta_grid: np.ndarray
    g_orders: np.ndarray
    m_orders: np.ndarray
    q_orders: np.ndarray
    g_slopes: np.ndarray
    m_slopes: np.ndarray
    q_slopes: np.ndarray
    phi_order: int
    phi_slope: float


@dataclass
class AomotoReport:
    """Classification of one eigenvalue candidate.

    status is "classified" when an isolated atom was found and its
    weights cleanly decided, "no_atom" when the point carries no point
    mass (X1 empty, index meaningless and set to None).
    """

    lam: float
    status: str
    X1: list[int]
    boundary_X1: list[int]
    X0: list[int]
    E_lambda: int
    index: int | None
    dk_mass: float
    vertex_weights: np.ndarray
    cc_X1: int
    atom: Atom | None
    local_orders: LocalOrders | None = field(default=None)


def _adjacency_sets(graph: MultiGraph, members: set[int]) -> set[int]:
    out = set()
    E = graph.num_pairs
    for e in range(E):
        s = int(graph.he_source[2 * e])
        t = int(graph.he_target[2 * e])
        if s in members and t not in members:
            out.add(t)
        if t in members and s not in members:
            out.add(s)
    return out


def _cc_count(graph: MultiGraph, members: set[int]) -> int:
    # union-find over the induced subgraph on members
    parent = {v: v for v in members}

    def root(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for e in range(graph.num_pairs):
        s = int(graph.he_source[2 * e])
        t = int(graph.he_target[2 * e])
        if s in members and t in members:
            parent[root(s)] = root(t)
    return len({root(v) for v in members})


def classify_sets(
    graph: MultiGraph,
    params: JacobiParams,
    lam: float,
    eps_ladder=None,
    weight_threshold: float = 1e-4,
    *,
    cfg: SolverConfig | None = None,
) -> AomotoReport:
    """Classify X1, its boundary, X0, and the index at an eigenvalue.

    The candidate is first refined into an atom (status "no_atom" when
    none is found), then checked for isolation by gap probes at a few
    window multiples on both sides.  Any vertex weight within a factor
    10 of weight_threshold aborts the classification: refusing beats
    guessing a set membership that flips the integer index.
    """
    lam = float(lam)
    cfg = cfg or SolverConfig(tolerance=1e-10, damping=0.5)
    diam = spectral_diameter(graph, params)
    if eps_ladder is None:
        eps_ladder = diam * np.array([1e-3, 5e-4, 2.5e-4])
    ladder = np.asarray(sorted(np.atleast_1d(eps_ladder), reverse=True), dtype=float)
    p = graph.num_vertices

    atoms = find_atoms(
        graph, params, [lam], eps_ladder=ladder, cfg=cfg, atom_threshold=1e-3
    )
    if not atoms:
        return AomotoReport(
            lam,
            "no_atom",
            [],
            [],
            list(range(p)),
            0,
            None,
            0.0,
            np.zeros(p),
            0,
            None,
        )
    atom = atoms[0]

    window = _ATOM_WINDOW_FACTOR * ladder[0]
    for mult in _ISOLATION_PROBES:
        for side in (-1.0, 1.0):
            x = atom.lam + side * mult * window
            try:
                _assert_gap_point(graph, params, x, cfg, ladder, 1e-4)
            except NumericalError as exc:
                raise RefusedClassificationError(
                    f"atom at {atom.lam:.12g} is not isolated: probe at "
                    f"{x:.12g} failed ({exc})"
                ) from exc

    w = atom.weights
    lo_band, hi_band = weight_threshold / 10.0, weight_threshold * 10.0
    ambiguous = np.nonzero((w > lo_band) & (w < hi_band))[0]
    if ambiguous.size:
        raise RefusedClassificationError(
            f"vertex weight(s) within a factor 10 of the threshold "
            f"{weight_threshold:g} at lambda = {atom.lam:.12g}: "
            + ", ".join(f"w[{v}] = {w[v]:.3e}" for v in ambiguous.tolist())
        )

    x1 = set(np.nonzero(w > weight_threshold)[0].tolist())
    boundary = _adjacency_sets(graph, x1)
    x0 = set(range(p)) - x1 - boundary
    e_lam = 0
    for e in range(graph.num_pairs):
        s = int(graph.he_source[2 * e])
        t = int(graph.he_target[2 * e])
        if s in x1 and t in x1:
            e_lam += 1
    index = len(x1) - len(boundary) - e_lam
    return AomotoReport(
        float(atom.lam),
        "classified",
        sorted(x1),
        sorted(boundary),
        sorted(x0),
        e_lam,
        index,
        atom.mass,
        w,
        _cc_count(graph, x1),
        atom,
    )


def cc_cross_check(report: AomotoReport) -> bool:
    """Whether index = (components of X1) - #boundary.

    Equivalent to the index formula whenever X1 induces a forest in the
    base graph; a False return flags an X1 containing a base-graph
    cycle.  Vacuously true for an unclassified report.
    """
    if report.status != "classified":
        return True
    return report.index == report.cc_X1 - len(report.boundary_X1)


def _fit_orders(deltas, mags, snap_tol, what):
    """Two-sided log-log slope fits snapped to integer orders.

    mags has shape (2, n_delta, n_comp); both sides must snap to the
    same integer from the allowed set.
    """
    logd = np.log(deltas)
    n_comp = mags.shape[2]
    orders = np.empty(n_comp, dtype=np.int64)
    slopes = np.empty(n_comp)
    for c in range(n_comp):
        ks = []
        for side in range(2):
            y = mags[side, :, c]
            if not np.all(np.isfinite(y)) or np.any(y <= 0):
                raise NumericalError(
                    f"{what}[{c}] vanished or diverged exactly on the sample "
                    "grid; cannot fit a local order"
                )
            k, _, _ = ls_slope(logd, np.log(y))
            ks.append(k)
        k_int = int(round(ks[0]))
        for k in ks:
            if abs(k - round(k)) > snap_tol or int(round(k)) != k_int:
                raise NumericalError(
                    f"non-isolated or fractional behavior: {what}[{c}] fitted "
                    f"exponents {ks[0]:.3f} / {ks[1]:.3f} do not snap to one "
                    "integer"
                )
        if k_int not in _SNAP_SET:
            raise NumericalError(
                f"{what}[{c}] order {k_int} outside the expected range "
                f"{_SNAP_SET}"
            )
        orders[c] = k_int
        slopes[c] = 0.5 * (ks[0] + ks[1])
    return orders, slopes


def local_orders(
    graph: MultiGraph,
    params: JacobiParams,
    lam: float,
    delta_grid=None,
    *,
    gap_width: float | None = None,
    cfg: SolverConfig | None = None,
    report: AomotoReport | None = None,
    snap_tol: float = 0.1,
) -> LocalOrders:
    """Local orders of G, m, Q, and Phi at an isolated point lam.

    Solves on the real axis at lam +/- delta over two decades of delta
    (default logarithmic grid scaled by gap_width), fits log-magnitudes
    against log delta per component and side, and snaps to integers.
    The resulting table is verified against the classification: G has
    a simple pole exactly on X1 and a simple zero on the boundary set,
    Q has a simple pole exactly on edges inside X1, and the zero
    counts over X0 vertices and X1-free edges cancel.  The order of
    the determinant zero from the order arithmetic is returned with
    the directly fitted slope of log|Phi|.
    """
    lam = float(lam)
    cfg = cfg or SolverConfig(tolerance=1e-12, damping=0.5)
    diam = spectral_diameter(graph, params)
    if delta_grid is None:
        width = gap_width if gap_width is not None else 50.0 * 1e-3 * diam
        delta_grid = np.logspace(-2.0, -4.0, 9) * width
    deltas = np.asarray(sorted(np.atleast_1d(delta_grid), reverse=True), dtype=float)
    if deltas.size < 3:
        raise ValueError("delta_grid needs at least three offsets")

    p = graph.num_vertices
    H = graph.num_half_edges
    E = graph.num_pairs
    gmag = np.empty((2, deltas.size, p))
    mmag = np.empty((2, deltas.size, H))
    qmag = np.empty((2, deltas.size, E))
    phimag = np.empty((2, deltas.size))
    for si, side in enumerate((1.0, -1.0)):
        for di, d in enumerate(deltas):
            sol = solve_m(graph, params, lam + side * d, cfg)
            if not (np.all(np.isfinite(sol.Q)) and np.all(np.isfinite(sol.G))):
                raise NumericalError(
                    f"exact pole hit at z = {lam + side * d}; perturb delta_grid"
                )
            gmag[si, di] = np.abs(sol.G)
            mmag[si, di] = np.abs(sol.m)
            qmag[si, di] = np.abs(sol.Q)
            phimag[si, di] = abs(complex(np.prod(sol.Q) / np.prod(sol.G)))

    g_orders, g_slopes = _fit_orders(deltas, gmag, snap_tol, "G")
    m_orders, m_slopes = _fit_orders(deltas, mmag, snap_tol, "m")
    q_orders, q_slopes = _fit_orders(deltas, qmag, snap_tol, "Q")
    phi_order = int(q_orders.sum() - g_orders.sum())
    both = np.concatenate([np.log(deltas), np.log(deltas)])
    phi_slope, _, _ = ls_slope(both, np.log(phimag.reshape(-1)))

    rep = report
    if rep is None:
        rep = classify_sets(graph, params, lam, cfg=None)
    _verify_against_classification(graph, rep, g_orders, q_orders)
    return LocalOrders(
        lam,
        deltas,
        g_orders,
        m_orders,
        q_orders,
        g_slopes,
        m_slopes,
        q_slopes,
        phi_order,
        float(phi_slope),
    )


def _verify_against_classification(graph, rep, g_orders, q_orders):
    if rep.status == "no_atom":
        if np.any(g_orders != 0) or np.any(q_orders != 0):
            raise NumericalError(
                "no atom was classified but some local order is nonzero; "
                "the point is not a plain resolvent point"
            )
        return
    x1 = set(rep.X1)
    boundary = set(rep.boundary_X1)
    for v in range(graph.num_vertices):
        o = int(g_orders[v])
        if v in x1 and o != -1:
            raise NumericalError(
                f"G[{v}] has order {o} but vertex {v} is in X1 (expected a "
                "simple pole)"
            )
        if v in boundary and o != 1:
            raise NumericalError(
                f"G[{v}] has order {o} but vertex {v} is in the boundary set "
                "(expected a simple zero)"
            )
        if v not in x1 and o == -1:
            raise NumericalError(
                f"G[{v}] has a pole but vertex {v} is not in X1"
            )
    zeros_x0 = 0
    for v in range(graph.num_vertices):
        if v in x1 or v in boundary:
            continue
        zeros_x0 += int(g_orders[v])
    zeros_free = 0
    for e in range(graph.num_pairs):
        s = int(graph.he_source[2 * e])
        t = int(graph.he_target[2 * e])
        inside = (s in x1) and (t in x1)
        o = int(q_orders[e])
        if inside and o != -1:
            raise NumericalError(
                f"Q[{e}] has order {o} but both endpoints lie in X1 "
                "(expected a simple pole)"
            )
        if not inside and o == -1:
            raise NumericalError(
                f"Q[{e}] has a pole but its endpoints are not both in X1"
            )
        if s not in x1 and t not in x1:
            zeros_free += o
    if zeros_x0 != zeros_free:
        raise NumericalError(
            f"cancellation audit failed: G zeros over X0 sum to {zeros_x0} "
            f"but Q zeros over X1-free edges sum to {zeros_free}"
        )
