"""Independent reference values for the test suite.

Everything here is computed from closed forms, transfer matrices, or
dense linear algebra, never through the package under test.  Tests
freeze these as the expected side of their assertions.
"""

import numpy as np


def regular_tree_m(z, k, a=1.0, b=0.0):
    """Half-tree m-function on the k-regular tree.

    Solves (k-1) a^2 m^2 + (z - b) m + 1 = 0 on the Herglotz branch.
    Real z is approached from above; the limit is realified when its
    imaginary part is negligible (z outside the band).
    """
    z = complex(z)
    realified = z.imag == 0.0
    if realified:
        z = z + 1e-9j
    c2 = (k - 1) * a * a
    disc = np.sqrt((z - b) ** 2 - 4.0 * c2 + 0j)
    roots = ((b - z) + disc) / (2.0 * c2), ((b - z) - disc) / (2.0 * c2)
    m = roots[0] if roots[0].imag > 0 else roots[1]
    if realified and abs(m.imag) < 1e-6:
        m = complex(m.real, 0.0)
    return m


def regular_tree_green(z, k, a=1.0, b=0.0):
    m = regular_tree_m(z, k, a, b)
    return 1.0 / (-z + b - k * a * a * m)


def theta_phi(z, k, a=1.0, b=0.0):
    """Floquet function of the two-vertex theta graph with k edges."""
    m = regular_tree_m(z, k, a, b)
    G = regular_tree_green(z, k, a, b)
    Q = 1.0 / (1.0 - a * a * m * m)
    return Q**k / G**2


def kesten_mckay_density(E, k):
    """Spectral density of the k-regular tree, zero off the band."""
    E = np.asarray(E, dtype=np.float64)
    band = 4.0 * (k - 1) - E * E
    rho = np.zeros_like(E)
    inside = band > 0
    rho[inside] = (
        k * np.sqrt(band[inside]) / (2.0 * np.pi * (k * k - E[inside] ** 2))
    )
    return rho


def kesten_mckay_ids(E, k, n_quad=200_001):
    """IDS of the k-regular tree by quadrature of the closed-form density."""
    edge = 2.0 * np.sqrt(k - 1.0)
    grid = np.linspace(-edge, edge, n_quad)
    rho = kesten_mckay_density(grid, k)
    cum = np.concatenate([[0.0], np.cumsum((rho[1:] + rho[:-1]) * np.diff(grid) / 2.0)])
    cum /= cum[-1]
    return np.interp(E, grid, cum, left=0.0, right=1.0)


def arcsine_density(E):
    """Density of the free Jacobi matrix on the line (a=1, b=0)."""
    E = np.asarray(E, dtype=np.float64)
    rho = np.zeros_like(E)
    inside = np.abs(E) < 2.0
    rho[inside] = 1.0 / (np.pi * np.sqrt(4.0 - E[inside] ** 2))
    return rho


def arcsine_ids(E):
    E = np.clip(np.asarray(E, dtype=np.float64), -2.0, 2.0)
    return 0.5 + np.arcsin(E / 2.0) / np.pi


def transfer_discriminant(a, b):
    """Discriminant polynomial of a period-p Jacobi matrix on the line.

    a[n] couples site n to n+1, b[n] is the diagonal; both period p.
    Returns a numpy poly1d D with bands exactly {E real : |D(E)| <= 2}.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p = a.shape[0]
    M = [[np.poly1d([1.0]), np.poly1d([0.0])], [np.poly1d([0.0]), np.poly1d([1.0])]]
    for n in range(p - 1, -1, -1):
        T = [
            [np.poly1d([1.0 / a[n], -b[n] / a[n]]), np.poly1d([-a[n - 1] / a[n]])],
            [np.poly1d([1.0]), np.poly1d([0.0])],
        ]
        M = [
            [
                M[i][0] * T[0][j] + M[i][1] * T[1][j]
                for j in range(2)
            ]
            for i in range(2)
        ]
    return M[0][0] + M[1][1]


def band_edges(a, b):
    """Sorted real solutions of D(E) = +-2 for the periodic line operator."""
    D = transfer_discriminant(a, b)
    edges = []
    for s in (2.0, -2.0):
        for r in (D - s).roots:
            if abs(r.imag) < 1e-9:
                edges.append(r.real)
    return np.sort(np.asarray(edges))


def halfline_m_fixed_point(a, b, z, start):
    """Periodic continued fraction by Mobius fixed point.

    m_start looking in the +direction: m_n = 1/(-z + b_n - a_n^2 m_{n+1}).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p = a.shape[0]
    P = np.eye(2, dtype=np.complex128)
    for j in range(p):
        n = (start + j) % p
        P = P @ np.array([[0.0, 1.0], [-a[n] ** 2, b[n] - z]])
    al, be, ga, de = P[0, 0], P[0, 1], P[1, 0], P[1, 1]
    disc = np.sqrt((de - al) ** 2 + 4.0 * ga * be + 0j)
    roots = ((al - de) + disc) / (2.0 * ga), ((al - de) - disc) / (2.0 * ga)
    return roots[0] if roots[0].imag > 0 else roots[1]


def k23_band_edges():
    """Support edges of the (3,2)-biregular tree: roots of z^4 - 6 z^2 + 1."""
    inner = np.sqrt(2.0) - 1.0
    outer = np.sqrt(2.0) + 1.0
    return inner, outer


K23_ATOM_MASS = 0.2  # (3 - 2) / 5 vertices


def anderson_constant_F(z, d, a=1.0, b=0.0):
    """Half-Thouless value for constant parameters on the d-regular tree."""
    m = regular_tree_m(z, d, a, b)
    G = 1.0 / (-complex(z) + b - d * a * a * m)
    return (d / 2.0 - 1.0) * np.log(G) - (d / 2.0) * np.log(m)


def dense_eigenvalues(matrix):
    return np.linalg.eigvalsh(matrix)


def dense_kernel_dim(matrix, lam, rtol=1e-8):
    s = np.linalg.svd(matrix - lam * np.eye(matrix.shape[0]), compute_uv=False)
    thr = rtol * max(s[0], 1.0)
    return int(np.sum(s < thr))
