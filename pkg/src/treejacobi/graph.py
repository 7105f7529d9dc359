"""Finite connected multigraphs with half-edge structure, plus Jacobi data.

A graph with p vertices and E edge pairs is stored as 2E oriented
half-edges.  Edge pair i in file order owns half-edges 2i and 2i+1,
reversals of each other; the pair's reference orientation is the
lower-id half-edge.  A self-loop is a single edge pair whose two
half-edges both start and end at the same vertex, and both belong to
that vertex's out-star, so a loop contributes 2 to the degree.

The operator data is a diagonal value b(v) per vertex and a positive
coupling a per half-edge, equal on the two orientations of each pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphValidationError


@dataclass(frozen=True)
class MultiGraph:
    """Half-edge representation of a finite multigraph.

    Attributes
    ----------
    num_vertices : int
    he_source, he_target : arrays of length 2E, vertex ids
    he_reversal : array of length 2E, the opposite orientation of each
        half-edge (an involution with no fixed points)
    out_start, out_list : CSR layout of the out-stars; the half-edges
        leaving vertex u are out_list[out_start[u]:out_start[u+1]],
        sorted by half-edge id
    """

    num_vertices: int
    he_source: np.ndarray
    he_target: np.ndarray
    he_reversal: np.ndarray
    out_start: np.ndarray = field(repr=False)
    out_list: np.ndarray = field(repr=False)

    @property
    def num_half_edges(self) -> int:
        return self.he_source.shape[0]

    @property
    def num_pairs(self) -> int:
        return self.num_half_edges // 2

    def degree(self, v: int) -> int:
        return int(self.out_start[v + 1] - self.out_start[v])

    def out_star(self, v: int) -> np.ndarray:
        return self.out_list[self.out_start[v] : self.out_start[v + 1]]

    def pair_half_edges(self, i: int) -> tuple[int, int]:
        """Half-edge ids of edge pair i in reference orientation order."""
        return 2 * i, 2 * i + 1

    def pair_endpoints(self, i: int) -> tuple[int, int]:
        return int(self.he_source[2 * i]), int(self.he_target[2 * i])


@dataclass(frozen=True)
class JacobiParams:
    """Diagonal values b per vertex and couplings a per half-edge."""

    b: np.ndarray
    a: np.ndarray

    def pair_coupling(self, i: int) -> float:
        return float(self.a[2 * i])


def _build(num_vertices: int, edge_list: list[tuple[int, int]]) -> MultiGraph:
    """Assemble half-edge arrays from (u, v) pairs in list order."""
    n_he = 2 * len(edge_list)
    src = np.empty(n_he, dtype=np.int64)
    tgt = np.empty(n_he, dtype=np.int64)
    rev = np.empty(n_he, dtype=np.int64)
    for i, (u, v) in enumerate(edge_list):
        src[2 * i], tgt[2 * i] = u, v
        src[2 * i + 1], tgt[2 * i + 1] = v, u
        rev[2 * i] = 2 * i + 1
        rev[2 * i + 1] = 2 * i
    order = np.argsort(src, kind="stable")
    counts = np.bincount(src, minlength=num_vertices)
    out_start = np.zeros(num_vertices + 1, dtype=np.int64)
    np.cumsum(counts, out=out_start[1:])
    # stable argsort keeps out-stars sorted by half-edge id
    return MultiGraph(num_vertices, src, tgt, rev, out_start, order)


def from_edge_list(
    num_vertices: int,
    edges: list[tuple[int, int, float]],
    b: np.ndarray | list[float],
) -> tuple[MultiGraph, JacobiParams]:
    """Build graph and parameters from (u, v, a) triples in order."""
    for i, (u, v, _) in enumerate(edges):
        if not (0 <= u < num_vertices and 0 <= v < num_vertices):
            raise GraphValidationError(
                f"edge {i} endpoint ({u}, {v}) out of range for "
                f"{num_vertices} vertices"
            )
    graph = _build(num_vertices, [(u, v) for u, v, _ in edges])
    a = np.empty(graph.num_half_edges, dtype=np.float64)
    for i, (_, _, aval) in enumerate(edges):
        a[2 * i] = a[2 * i + 1] = aval
    params = JacobiParams(np.asarray(b, dtype=np.float64), a)
    return graph, params


def build_cycle(p, a, b):
    """Cycle on p vertices; edge i joins i and (i+1) mod p with coupling a[i].

    p = 1 gives a single vertex with one self-loop, p = 2 two vertices
    joined by two parallel edges.  The universal cover is the line with
    period-p coefficients.
    """
    a = np.broadcast_to(np.asarray(a, dtype=np.float64), (p,))
    b = np.broadcast_to(np.asarray(b, dtype=np.float64), (p,))
    edges = [(i, (i + 1) % p, float(a[i])) for i in range(p)]
    return from_edge_list(p, edges, b.copy())


def build_theta(k, a, b):
    """Two vertices joined by k parallel edges, uniform coupling and diagonal.

    The universal cover is the k-regular tree.
    """
    edges = [(0, 1, float(a)) for _ in range(k)]
    return from_edge_list(2, edges, np.full(2, float(b)))


def build_complete_bipartite(m, n, a, b):
    """Complete bipartite graph K_{m,n}; side M is vertices 0..m-1.

    The universal cover is the (n, m)-biregular tree: vertices in side M
    have degree n and vice versa.
    """
    edges = [(i, m + j, float(a)) for i in range(m) for j in range(n)]
    return from_edge_list(m + n, edges, np.full(m + n, float(b)))


def validate(graph: MultiGraph, params: JacobiParams) -> list[str]:
    """Return a list of human-readable violations (empty when valid)."""
    out: list[str] = []
    p = graph.num_vertices
    n_he = graph.num_half_edges
    if p < 1:
        out.append("graph must have at least one vertex")
        return out
    if params.b.shape != (p,):
        out.append(f"b has shape {params.b.shape}, expected ({p},)")
    elif not np.all(np.isfinite(params.b)):
        out.append("b contains non-finite entries")
    if params.a.shape != (n_he,):
        out.append(f"a has shape {params.a.shape}, expected ({n_he},)")
        return out
    if not np.all(np.isfinite(params.a)):
        out.append("a contains non-finite entries")
        return out
    bad = np.flatnonzero(params.a <= 0)
    if bad.size:
        out.append(f"a must be positive; first offender half-edge {bad[0]}")
    rev = graph.he_reversal
    if np.any(rev[rev] != np.arange(n_he)):
        out.append("reversal is not an involution")
    if np.any(rev == np.arange(n_he)):
        out.append("reversal has a fixed point")
    if np.any(graph.he_source[rev] != graph.he_target):
        out.append("reversal does not swap source and target")
    asym = np.flatnonzero(params.a != params.a[rev])
    if asym.size:
        out.append(
            f"coupling differs between orientations of half-edge {asym[0]}"
        )
    degs = np.diff(graph.out_start)
    leaves = np.flatnonzero(degs < 2)
    if leaves.size:
        out.append(f"vertex {leaves[0]} has degree {degs[leaves[0]]} < 2")
    # connectivity over half-edges
    seen = np.zeros(p, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for f in graph.out_star(u):
            w = int(graph.he_target[f])
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    if not seen.all():
        out.append(f"graph is not connected; vertex {np.flatnonzero(~seen)[0]} unreachable")
    return out


def validate_or_raise(graph: MultiGraph, params: JacobiParams) -> None:
    problems = validate(graph, params)
    if problems:
        raise GraphValidationError("; ".join(problems))


def spectral_bounds(graph: MultiGraph, params: JacobiParams) -> tuple[float, float]:
    """Row-sum (Gershgorin) bounds for the covering-tree operator.

    Every vertex of the cover sees the same out-star as its base vertex,
    so b(v) +- sum of |a| over the out-star bounds the spectrum.
    """
    row = np.zeros(graph.num_vertices)
    np.add.at(row, graph.he_source, params.a)
    lo = float(np.min(params.b - row))
    hi = float(np.max(params.b + row))
    return lo, hi


def spectral_diameter(graph: MultiGraph, params: JacobiParams) -> float:
    lo, hi = spectral_bounds(graph, params)
    return hi - lo


def load_graph(path) -> tuple[MultiGraph, JacobiParams]:
    """Read a graph JSON file.

    Format: {"vertices": p, "b": [p reals], "edges": [{"u", "v", "a"}...]}
    with u == v for a self-loop.  Half-edge ids follow file order.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise GraphValidationError(f"cannot read graph file {path}: {exc}") from exc
    for key in ("vertices", "b", "edges"):
        if key not in data:
            raise GraphValidationError(f"graph file {path}: missing key {key!r}")
    p = data["vertices"]
    if not isinstance(p, int) or p < 1:
        raise GraphValidationError(f"graph file {path}: vertices must be a positive integer")
    b = data["b"]
    if not isinstance(b, list) or len(b) != p:
        raise GraphValidationError(f"graph file {path}: b must be a list of length {p}")
    edges = []
    for idx, entry in enumerate(data["edges"]):
        if not isinstance(entry, dict):
            raise GraphValidationError(f"graph file {path}: edge {idx} is not an object")
        for key in ("u", "v", "a"):
            if key not in entry:
                raise GraphValidationError(f"graph file {path}: edge {idx} missing field {key!r}")
        u, v, aval = entry["u"], entry["v"], entry["a"]
        if not (isinstance(u, int) and isinstance(v, int)):
            raise GraphValidationError(f"graph file {path}: edge {idx} endpoints must be integers")
        if not (0 <= u < p and 0 <= v < p):
            raise GraphValidationError(f"graph file {path}: edge {idx} endpoint out of range")
        if not isinstance(aval, (int, float)) or not np.isfinite(aval) or aval <= 0:
            raise GraphValidationError(f"graph file {path}: edge {idx} coupling must be positive")
        edges.append((u, v, float(aval)))
    if not edges:
        raise GraphValidationError(f"graph file {path}: no edges")
    graph, params = from_edge_list(p, edges, b)
    problems = validate(graph, params)
    if problems:
        raise GraphValidationError(f"graph file {path}: " + "; ".join(problems))
    return graph, params


def save_graph(path, graph: MultiGraph, params: JacobiParams) -> None:
    data = {
        "vertices": graph.num_vertices,
        "b": [float(x) for x in params.b],
        "edges": [
            {
                "u": int(graph.he_source[2 * i]),
                "v": int(graph.he_target[2 * i]),
                "a": float(params.a[2 * i]),
            }
            for i in range(graph.num_pairs)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
