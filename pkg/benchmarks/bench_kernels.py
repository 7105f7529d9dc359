"""Time the hot kernels on both backends and print the speedups.

Run as a script from the repository root:

    python3 benchmarks/bench_kernels.py

Each kernel is timed best-of-three after a warmup call, so numba's
compilation cost is excluded.  Sizes are chosen to mirror realistic
workloads: a batch of resolvent solves, one population sweep, a dense
lift spectrum, and a kernel-dimension elimination.
"""

import time

import numpy as np

from treejacobi import _kernels_numpy as knp
from treejacobi import build_complete_bipartite

try:
    from treejacobi import _kernels_numba as knb
except ImportError:
    knb = None

RNG = np.random.default_rng(0)
REPEATS = 3


def best_of(fn, *args):
    times = []
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_solver():
    g, params = build_complete_bipartite(2, 3, 1.0, 0.0)
    H = g.num_half_edges
    re = RNG.uniform(-3.0, 3.0, 64)
    im = RNG.uniform(0.05, 1.5, 64)
    zs = (re + 1j * im).astype(np.complex128)
    m0 = np.full((64, H), 1j, dtype=np.complex128)
    args = (zs, m0, g.he_source, g.he_target, g.he_reversal,
            params.a**2, params.b, g.num_vertices, 1e-12, 1_000_000, 1.0)
    return "solve_m_batch (64 z, K23)", args, "solve_m_batch"


def bench_schur():
    N, cols = 100_000, 2
    pool = (RNG.standard_normal(N) + 1j * (0.1 + RNG.random(N)))
    pool = pool.astype(np.complex128)
    idx = RNG.integers(0, N, size=(N, cols))
    b = RNG.uniform(-0.5, 0.5, N)
    a2 = RNG.uniform(0.5, 1.5, (N, cols))
    args = (pool, idx, b, a2, 0.2 + 0.7j)
    return "schur_samples (pool 1e5)", args, "schur_samples"


def bench_eig():
    n = 600
    M = RNG.standard_normal((n, n))
    A = (M + M.T) / 2.0

    def run(mod):
        d, e = mod.householder_tridiag(A.copy())
        mod.tql_eigenvalues(d, e)

    return f"tridiag + QL (n={n})", run, None


def bench_rank():
    n = 500
    L = RNG.standard_normal((n, 40))
    A = L @ L.T
    args = (A, 1e-10 * n)
    return "rank_elimination (n=500)", args, "rank_elimination"


def main():
    rows = []
    for spec in (bench_solver(), bench_schur(), bench_eig(), bench_rank()):
        label, payload, name = spec
        if name is None:
            run_np = lambda: payload(knp)  # noqa: E731
            run_nb = (lambda: payload(knb)) if knb else None  # noqa: E731
        else:
            fn_np = getattr(knp, name)
            run_np = lambda fn=fn_np, a=payload: fn(*[
                x.copy() if isinstance(x, np.ndarray) else x for x in a])
            if knb:
                fn_nb = getattr(knb, name)
                run_nb = lambda fn=fn_nb, a=payload: fn(*[
                    x.copy() if isinstance(x, np.ndarray) else x for x in a])
            else:
                run_nb = None
        run_np()  # warmup
        t_np = best_of(run_np)
        if run_nb is not None:
            run_nb()  # warmup triggers compilation
            t_nb = best_of(run_nb)
            rows.append((label, t_np, t_nb, t_np / t_nb))
        else:
            rows.append((label, t_np, None, None))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numpy':>9}  {'numba':>9}  {'speedup':>7}")
    for label, t_np, t_nb, sp in rows:
        if t_nb is None:
            print(f"{label:<{width}}  {t_np:>8.4f}s  {'n/a':>9}  {'n/a':>7}")
        else:
            print(f"{label:<{width}}  {t_np:>8.4f}s  {t_nb:>8.4f}s  {sp:>6.1f}x")


if __name__ == "__main__":
    main()
