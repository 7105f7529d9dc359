"""Numba-jitted implementations of the hot kernels.

Signature-compatible with _kernels_numpy; per-point scalar loops
instead of batch vectorisation.  All functions are cached to disk so
repeat runs skip compilation.
"""

import numpy as np
from numba import njit

_EPS = np.finfo(np.float64).eps
_WINDOW = 10
_SLACK = 2.0
_DELTA_FLOOR = 2.0**-16
_REGROW_PERIOD = 64


@njit(cache=True, nogil=True)
def solve_m_batch(zs, m0, he_source, he_target, he_rev, a2, b, p,
                  tol, max_iter, damping0):
    K, H = m0.shape
    m_out = m0.copy()
    res_out = np.zeros(K)
    iters_out = np.zeros(K, dtype=np.int64)
    S = np.empty(p, dtype=np.complex128)
    D = np.empty(H, dtype=np.complex128)
    win = np.empty(_WINDOW)
    for kp in range(K):
        z = zs[kp]
        mk = m_out[kp]
        delta = damping0
        since = 0
        for wi in range(_WINDOW):
            win[wi] = np.inf
        it = 0
        res = 0.0
        while True:
            for u in range(p):
                S[u] = 0.0 + 0.0j
            for f in range(H):
                S[he_source[f]] += a2[f] * mk[f]
            res = 0.0
            for f in range(H):
                Df = -z + b[he_target[f]] - (
                    S[he_target[f]] - a2[he_rev[f]] * mk[he_rev[f]]
                )
                D[f] = Df
                aD = abs(Df)
                sc = aD if aD > 1.0 else 1.0
                rf = abs(1.0 / mk[f] - Df) / sc
                if rf > res:
                    res = rf
            if res <= tol or it >= max_iter:
                break
            wmax = win[0]
            for wi in range(1, _WINDOW):
                if win[wi] > wmax:
                    wmax = win[wi]
            if res > _SLACK * wmax:
                delta *= 0.5
                if delta < _DELTA_FLOOR:
                    delta = _DELTA_FLOOR
                since = 0
                for wi in range(_WINDOW):
                    win[wi] = np.inf
            else:
                win[it % _WINDOW] = res
                since += 1
                if since >= _REGROW_PERIOD:
                    delta *= 2.0
                    if delta > damping0:
                        delta = damping0
                    since = 0
            for f in range(H):
                mk[f] = (1.0 - delta) * mk[f] + delta / D[f]
            it += 1
        res_out[kp] = res
        iters_out[kp] = it
    return m_out, res_out, iters_out


@njit(cache=True, nogil=True)
def schur_samples(pool, idx, b_draws, a2_draws, z):
    N, d = idx.shape
    out = np.empty(N, dtype=np.complex128)
    for i in range(N):
        s = 0.0 + 0.0j
        for j in range(d):
            s += a2_draws[i, j] * pool[idx[i, j]]
        out[i] = 1.0 / (-z + b_draws[i] - s)
    return out


@njit(cache=True, nogil=True)
def householder_tridiag(A):
    n = A.shape[0]
    C = A.copy()
    d = np.empty(n)
    e = np.zeros(max(n - 1, 0))
    v = np.empty(n)
    u = np.empty(n)
    w = np.empty(n)
    for k in range(n - 2):
        d[k] = C[k, k]
        nb = n - k - 1
        nx2 = 0.0
        for i in range(nb):
            xv = C[k + 1 + i, k]
            nx2 += xv * xv
        nx = np.sqrt(nx2)
        if nx == 0.0:
            e[k] = 0.0
            continue
        alpha = -nx if C[k + 1, k] >= 0.0 else nx
        vn2 = 0.0
        for i in range(nb):
            vv = C[k + 1 + i, k]
            if i == 0:
                vv -= alpha
            v[i] = vv
            vn2 += vv * vv
        if vn2 == 0.0:
            e[k] = alpha
            continue
        vn = np.sqrt(vn2)
        for i in range(nb):
            v[i] /= vn
        vb = v[:nb]
        kappa = 0.0
        for i in range(nb):
            wi = np.dot(C[k + 1 + i, k + 1:], vb)
            w[i] = wi
            kappa += v[i] * wi
        for i in range(nb):
            u[i] = w[i] - kappa * v[i]
        for i in range(nb):
            vi2 = 2.0 * v[i]
            ui2 = 2.0 * u[i]
            for j in range(nb):
                C[k + 1 + i, k + 1 + j] -= vi2 * u[j] + ui2 * v[j]
        e[k] = alpha
    if n >= 2:
        d[n - 2] = C[n - 2, n - 2]
        e[n - 2] = C[n - 1, n - 2]
    d[n - 1] = C[n - 1, n - 1]
    return d, e


@njit(cache=True, nogil=True)
def tql_eigenvalues(d, e):
    n = d.shape[0]
    dd_ = d.astype(np.float64).copy()
    ee = np.zeros(n)
    for i in range(n - 1):
        ee[i] = e[i]
    # absolute deflation floor at eps * norm(T): a purely relative test
    # stalls on clustered near-zero eigenvalues, whose diagonal entries
    # are rounding noise that each sweep refreshes at this magnitude
    anorm = 0.0
    for i in range(n):
        row = abs(dd_[i]) + abs(ee[i])
        if i > 0:
            row += abs(ee[i - 1])
        if row > anorm:
            anorm = row
    floor = _EPS * anorm
    ok = True
    for l in range(n):
        iterations = 0
        while True:
            mm = l
            while mm < n - 1:
                dd = abs(dd_[mm]) + abs(dd_[mm + 1])
                if abs(ee[mm]) <= _EPS * dd or abs(ee[mm]) <= floor:
                    break
                mm += 1
            if mm == l:
                break
            iterations += 1
            if iterations > 50:
                ok = False
                break
            g = (dd_[l + 1] - dd_[l]) / (2.0 * ee[l])
            r = np.hypot(g, 1.0)
            g = dd_[mm] - dd_[l] + ee[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            pshift = 0.0
            underflow = False
            for i in range(mm - 1, l - 1, -1):
                f = s * ee[i]
                bq = c * ee[i]
                r = np.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    dd_[i + 1] -= pshift
                    ee[mm] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = dd_[i + 1] - pshift
                r = (dd_[i] - g) * s + 2.0 * c * bq
                pshift = s * r
                dd_[i + 1] = g + pshift
                g = c * r - bq
            if not underflow:
                dd_[l] -= pshift
                ee[l] = g
                ee[mm] = 0.0
        if not ok:
            break
    return np.sort(dd_), ok


@njit(cache=True, nogil=True)
def rank_elimination(A, thr):
    B = A.copy()
    n = B.shape[0]
    rank = 0
    borderline = 0
    for k in range(n):
        piv = -1.0
        pi = k
        pj = k
        for i in range(k, n):
            for j in range(k, n):
                av = abs(B[i, j])
                if av > piv:
                    piv = av
                    pi = i
                    pj = j
        if thr / 10.0 < piv < thr * 10.0:
            borderline += 1
        if piv <= thr:
            break
        if pi != k:
            for j in range(n):
                tmp = B[k, j]
                B[k, j] = B[pi, j]
                B[pi, j] = tmp
        if pj != k:
            for i in range(n):
                tmp = B[i, k]
                B[i, k] = B[i, pj]
                B[i, pj] = tmp
        rank += 1
        for i in range(k + 1, n):
            factor = B[i, k] / B[k, k]
            for j in range(k, n):
                B[i, j] -= factor * B[k, j]
    return rank, borderline
