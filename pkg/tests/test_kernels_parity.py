"""Both kernel backends must produce matching results on shared inputs."""

import subprocess
import sys

import numpy as np
import pytest

from treejacobi import _kernels_numpy as knp
from treejacobi import build_complete_bipartite, kernels

try:
    from treejacobi import _kernels_numba as knb
    HAVE_NUMBA = True
except ImportError:
    knb = None
    HAVE_NUMBA = False

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not importable")

RNG = np.random.default_rng(20240819)


def _solver_inputs():
    g, params = build_complete_bipartite(2, 3, 1.0, 0.0)
    H = g.num_half_edges
    zs = np.array([0.3 + 0.9j, -1.2 + 0.4j, 2.0 + 0.05j])
    m0 = np.full((zs.shape[0], H), 1j, dtype=np.complex128)
    return (zs, m0, g.he_source, g.he_target, g.he_reversal,
            params.a**2, params.b, g.num_vertices, 1e-12, 100_000, 1.0)


@needs_numba
def test_solver_parity():
    args = _solver_inputs()
    m1, r1, i1 = knp.solve_m_batch(*args)
    m2, r2, i2 = knb.solve_m_batch(*args)
    assert np.allclose(m1, m2, atol=1e-13)
    assert np.all(r1 < 1e-12) and np.all(r2 < 1e-12)
    assert np.array_equal(i1, i2)


@needs_numba
def test_schur_samples_parity():
    N, cols = 300, 2
    pool = (RNG.standard_normal(N) + 1j * (0.1 + RNG.random(N))).astype(np.complex128)
    idx = RNG.integers(0, N, size=(N, cols))
    b = RNG.uniform(-0.5, 0.5, N)
    a2 = RNG.uniform(0.5, 1.5, (N, cols))
    z = 0.2 + 0.7j
    out1 = knp.schur_samples(pool, idx, b, a2, z)
    out2 = knb.schur_samples(pool, idx, b, a2, z)
    assert np.allclose(out1, out2, rtol=1e-14, atol=0)


@needs_numba
def test_tridiag_and_ql_parity():
    n = 40
    M = RNG.standard_normal((n, n))
    A = (M + M.T) / 2.0
    d1, e1 = knp.householder_tridiag(A.copy())
    d2, e2 = knb.householder_tridiag(A.copy())
    # tridiagonalization is sign-ambiguous per step; compare spectra
    v1, ok1 = knp.tql_eigenvalues(d1.copy(), e1.copy())
    v2, ok2 = knb.tql_eigenvalues(d2.copy(), e2.copy())
    assert ok1 and ok2
    assert np.allclose(np.sort(v1), np.sort(v2), atol=1e-10)
    assert np.allclose(np.sort(v1), np.linalg.eigvalsh(A), atol=1e-9)


@needs_numba
def test_rank_elimination_parity():
    n = 30
    L = RNG.standard_normal((n, 5))
    A = L @ L.T  # rank 5
    thr = 1e-10 * n
    r1, b1 = knp.rank_elimination(A.copy(), thr)
    r2, b2 = knb.rank_elimination(A.copy(), thr)
    assert r1 == r2 == 5
    assert b1 == b2


def test_dispatch_exposes_selected_backend():
    assert kernels.BACKEND in ("numba", "numpy")
    assert kernels.BACKEND == ("numba" if kernels.USE_NUMBA else "numpy")


def test_env_flag_forces_numpy_backend():
    code = (
        "import os; os.environ['TREEJACOBI_BACKEND']='numpy';"
        "from treejacobi import kernels; print(kernels.BACKEND)"
    )
    out = subprocess.run([sys.executable, "-c", code],
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_env_flag_rejects_unknown_backend():
    code = (
        "import os; os.environ['TREEJACOBI_BACKEND']='cuda';"
        "import treejacobi"
    )
    out = subprocess.run([sys.executable, "-c", code],
                         capture_output=True, text=True)
    assert out.returncode != 0
    assert "TREEJACOBI_BACKEND" in out.stderr
