"""Pure-numpy implementations of the hot kernels.

Same call signatures and iteration semantics as the numba twins in
_kernels_numba.py; the self-consistency solver vectorises over the
batch of z points instead of looping point by point.
"""

import numpy as np

_EPS = np.finfo(np.float64).eps
_WINDOW = 10
_SLACK = 2.0
_DELTA_FLOOR = 2.0**-16
_REGROW_PERIOD = 64


def solve_m_batch(zs, m0, he_source, he_target, he_rev, a2, b, p,
                  tol, max_iter, damping0):
    """Damped fixed-point solve of the half-edge recursion, one z per row.

    Residual per half-edge is |1/m - D| / max(1, |D|) where D is the
    recursion denominator; a point converges when the max over
    half-edges drops to tol.  The damping factor halves whenever the
    residual blows past the worst of its recent window (factor-2 slack
    so transient wiggles do not trigger it) and regrows after a quiet
    stretch.
    """
    zs = np.asarray(zs, dtype=np.complex128)
    K, H = m0.shape
    m_out = np.array(m0, dtype=np.complex128)
    res_out = np.zeros(K)
    iters_out = np.zeros(K, dtype=np.int64)

    incid = np.zeros((H, p))
    incid[np.arange(H), he_source] = 1.0
    bt = b[he_target]
    a2r = a2[he_rev]

    idx = np.arange(K)          # original index of each active row
    mA = m_out.copy()
    zA = zs.copy()
    delta = np.full(K, damping0)
    since = np.zeros(K, dtype=np.int64)
    win = np.full((K, _WINDOW), np.inf)
    it = 0
    while idx.size:
        S = (mA * a2) @ incid
        D = -zA[:, None] + bt[None, :] - (S[:, he_target] - a2r * mA[:, he_rev])
        scale = np.maximum(1.0, np.abs(D))
        res = (np.abs(1.0 / mA - D) / scale).max(axis=1)

        done = (res <= tol) | (it >= max_iter)
        if done.any():
            sel = idx[done]
            m_out[sel] = mA[done]
            res_out[sel] = res[done]
            iters_out[sel] = it
            keep = ~done
            idx, mA, zA = idx[keep], mA[keep], zA[keep]
            D, res = D[keep], res[keep]
            delta, since, win = delta[keep], since[keep], win[keep]
            if not idx.size:
                break

        worse = res > _SLACK * win.max(axis=1)
        delta[worse] = np.maximum(delta[worse] * 0.5, _DELTA_FLOOR)
        since[worse] = 0
        win[worse] = np.inf
        ok = ~worse
        win[ok, it % _WINDOW] = res[ok]
        since[ok] += 1
        grow = since >= _REGROW_PERIOD
        delta[grow] = np.minimum(delta[grow] * 2.0, damping0)
        since[grow] = 0

        mA = (1.0 - delta)[:, None] * mA + delta[:, None] / D
        it += 1
    return m_out, res_out, iters_out


def schur_samples(pool, idx, b_draws, a2_draws, z):
    """out[i] = 1 / (-z + b_draws[i] - sum_j a2_draws[i,j] * pool[idx[i,j]])."""
    s = np.sum(a2_draws * pool[idx], axis=1)
    return 1.0 / (-z + b_draws - s)


def householder_tridiag(A):
    """Reduce a symmetric matrix to tridiagonal form; returns (d, e).

    d is the diagonal, e the subdiagonal (length n-1).  The input is
    copied, not modified.
    """
    A = np.array(A, dtype=np.float64)
    n = A.shape[0]
    d = np.empty(n)
    e = np.zeros(max(n - 1, 0))
    for k in range(n - 2):
        d[k] = A[k, k]
        x = A[k + 1:, k]
        nx = np.sqrt(np.dot(x, x))
        if nx == 0.0:
            e[k] = 0.0
            continue
        alpha = -nx if x[0] >= 0.0 else nx
        v = x.copy()
        v[0] -= alpha
        vn = np.sqrt(np.dot(v, v))
        if vn == 0.0:
            e[k] = alpha
            continue
        v /= vn
        blk = A[k + 1:, k + 1:]
        w = blk @ v
        u = w - np.dot(v, w) * v
        blk -= 2.0 * (np.outer(v, u) + np.outer(u, v))
        e[k] = alpha
    if n >= 2:
        d[n - 2] = A[n - 2, n - 2]
        e[n - 2] = A[n - 1, n - 2]
    d[n - 1] = A[n - 1, n - 1]
    return d, e


def tql_eigenvalues(d, e):
    """Implicit-shift QL eigenvalues of a symmetric tridiagonal matrix.

    Returns (values ascending, ok).  ok is False when some eigenvalue
    failed to settle within the rotation budget.
    """
    n = d.shape[0]
    d = d.astype(np.float64).copy()
    ee = np.zeros(n)
    if n > 1:
        ee[: n - 1] = e
    # absolute deflation floor at eps * norm(T): a purely relative test
    # stalls on clustered near-zero eigenvalues, whose diagonal entries
    # are rounding noise that each sweep refreshes at this magnitude
    anorm = 0.0
    for i in range(n):
        row = abs(d[i]) + abs(ee[i])
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
                dd = abs(d[mm]) + abs(d[mm + 1])
                if abs(ee[mm]) <= _EPS * dd or abs(ee[mm]) <= floor:
                    break
                mm += 1
            if mm == l:
                break
            iterations += 1
            if iterations > 50:
                ok = False
                break
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = np.hypot(g, 1.0)
            g = d[mm] - d[l] + ee[l] / (g + (r if g >= 0.0 else -r))
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
                    d[i + 1] -= pshift
                    ee[mm] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - pshift
                r = (d[i] - g) * s + 2.0 * c * bq
                pshift = s * r
                d[i + 1] = g + pshift
                g = c * r - bq
            if not underflow:
                d[l] -= pshift
                ee[l] = g
                ee[mm] = 0.0
        if not ok:
            break
    return np.sort(d), ok


def rank_elimination(A, thr):
    """Numerical rank via complete-pivot elimination.

    Returns (rank, borderline) where borderline counts pivots whose
    magnitude fell within a factor 10 of thr on either side.
    """
    B = np.array(A, dtype=np.float64)
    n = B.shape[0]
    rank = 0
    borderline = 0
    for k in range(n):
        sub = np.abs(B[k:, k:])
        flat = int(np.argmax(sub))
        w = n - k
        i = k + flat // w
        j = k + flat % w
        piv = sub[flat // w, flat % w]
        if thr / 10.0 < piv < thr * 10.0:
            borderline += 1
        if piv <= thr:
            break
        if i != k:
            B[[k, i], :] = B[[i, k], :]
        if j != k:
            B[:, [k, j]] = B[:, [j, k]]
        rank += 1
        if k + 1 < n:
            col = B[k + 1:, k] / B[k, k]
            B[k + 1:, k:] -= np.outer(col, B[k, k:])
    return rank, borderline
