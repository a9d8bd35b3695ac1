"""Mild-solution sweep: numba kernel and pure-numpy fallback.

One sweep fills ``X[M + j]`` for j = 1..N from the discrete mild equation

    x_j + h(t_j, x_{t_j}) = S(t_j) v0 + sum_{k<j} S(t_j - t_k) r_k + sum_{s <= t_j} S(t_j - s) J_s

with the integrands ``r_k`` (drift, diffusion, small-jump compensator) and the
jump vectors ``J_s`` evaluated on the left-point segments of the *source*
trajectory ``S``.  Passing ``S is X`` gives the causal time-stepping scheme;
passing the previous iterate gives one successive-approximation step.

All convolutions are carried in the eigen-coordinates of A, where the kernel
is diagonal.  Role order in the coefficient arrays is (h, f, g, F, G); kind
codes are 0 zero, 1 linear, 2 mark_additive; functional codes 0 now,
1 delay, 2 average.
"""

import numpy as np

from ._accel import NUMBA_ENABLED, njit
from .mittag_leffler import _table_point, table_eval

H, F_DRIFT, G_DIFF, F_SMALL, G_BIG = range(5)


@njit
def _lam(code, X, start, m, w, out):
    d = X.shape[1]
    if code == 0:
        for i in range(d):
            out[i] = X[start + m - 1, i]
    elif code == 1:
        for i in range(d):
            out[i] = X[start, i]
    else:
        for i in range(d):
            acc = 0.0
            for l in range(m):
                acc += w[l] * X[start + l, i]
            out[i] = acc


@njit
def _sweep_numba(X, S, M, N, step, kinds, funcs, coef, P, dw, jstep, jtime, jatom,
                 marks, rho, big, comp_lin, comp_add, w, E_tab, B, Binv, a_abs,
                 alpha, edges, coefs, tbeta, tkind, tasym, v0e, tol, maxit, stats):
    d = X.shape[1]
    du = dw.shape[1]
    m = M + 1
    acc = np.zeros((N + 1, d))
    lam = np.zeros(d)
    r = np.zeros(d)
    y = np.zeros(d)
    jv = np.zeros(d)
    R = np.zeros(d)
    cur = np.zeros(d)
    nxt = np.zeros(d)
    known = np.zeros(d)
    ev = 0
    n_events = jstep.shape[0]
    max_res = 0.0
    max_it = 0
    for j in range(1, N + 1):
        k = j - 1
        for i in range(d):
            r[i] = 0.0
        if kinds[F_DRIFT] == 1:
            _lam(funcs[F_DRIFT], S, k, m, w, lam)
            c = coef[F_DRIFT, k] * step
            for i in range(d):
                r[i] += c * lam[i]
        if kinds[G_DIFF] == 1:
            _lam(funcs[G_DIFF], S, k, m, w, lam)
            c = coef[G_DIFF, k]
            for i in range(d):
                acc_w = 0.0
                for l in range(du):
                    acc_w += P[i, l] * dw[k, l]
                r[i] += c * lam[i] * acc_w
        if kinds[F_SMALL] == 1:
            _lam(funcs[F_SMALL], S, k, m, w, lam)
            c = coef[F_SMALL, k] * step * comp_lin
            for i in range(d):
                r[i] -= c * lam[i]
        elif kinds[F_SMALL] == 2:
            c = coef[F_SMALL, k] * step
            for i in range(d):
                r[i] -= c * comp_add[i]
        for i in range(d):
            acc_y = 0.0
            for l in range(d):
                acc_y += Binv[i, l] * r[l]
            y[i] = acc_y
        for n in range(j, N + 1):
            for i in range(d):
                acc[n, i] += E_tab[i, n - k] * y[i]
        # jumps in (t_k, t_j], integrand on the pre-jump (left-point) segment
        while ev < n_events and jstep[ev] == k:
            atom = jatom[ev]
            role = G_BIG if big[atom] else F_SMALL
            kind = kinds[role]
            if kind != 0:
                c = coef[role, k] * rho[role - F_SMALL, atom]
                if kind == 1:
                    _lam(funcs[role], S, k, m, w, lam)
                    for i in range(d):
                        jv[i] = c * lam[i]
                else:
                    for i in range(d):
                        jv[i] = c * marks[atom, i]
                for i in range(d):
                    acc_y = 0.0
                    for l in range(d):
                        acc_y += Binv[i, l] * jv[l]
                    y[i] = acc_y
                s = jtime[ev]
                for n in range(j, N + 1):
                    lag = n * step - s
                    if lag < 0.0:
                        lag = 0.0
                    for i in range(d):
                        x = a_abs[i] * lag ** alpha
                        acc[n, i] += _table_point(x, edges, coefs, alpha, tbeta, tkind, tasym) * y[i]
            ev += 1
        for i in range(d):
            acc_r = 0.0
            for l in range(d):
                acc_r += B[i, l] * (E_tab[l, j] * v0e[l] + acc[j, l])
            R[i] = acc_r
        # neutral term: x_j = R - h(t_j, segment ending in x_j)
        row = M + j
        if kinds[H] == 0:
            for i in range(d):
                X[row, i] = R[i]
            continue
        ch = coef[H, j]
        fcode = funcs[H]
        for i in range(d):
            known[i] = 0.0
        if fcode == 1:
            for i in range(d):
                known[i] = X[j, i]
        elif fcode == 2:
            for l in range(m - 1):
                for i in range(d):
                    known[i] += w[l] * X[j + l, i]
        wl = 0.0
        if fcode == 0:
            wl = 1.0
        elif fcode == 2:
            wl = w[m - 1]
        for i in range(d):
            cur[i] = R[i]
        it = 0
        while True:
            it += 1
            diff = 0.0
            for i in range(d):
                nxt[i] = R[i] - ch * (known[i] + wl * cur[i])
                dd = abs(nxt[i] - cur[i])
                if dd > diff:
                    diff = dd
            for i in range(d):
                cur[i] = nxt[i]
            if diff <= tol:
                break
            if it >= maxit:
                stats[2] = j
                return 1
        for i in range(d):
            X[row, i] = cur[i]
        if diff > max_res:
            max_res = diff
        if it > max_it:
            max_it = it
    stats[0] = max_res
    stats[1] = max_it
    return 0


def _lam_np(code, X, start, m, w):
    if code == 0:
        return X[start + m - 1]
    if code == 1:
        return X[start]
    return w @ X[start:start + m]


def _sweep_numpy(X, S, M, N, step, kinds, funcs, coef, P, dw, jstep, jtime, jatom,
                 marks, rho, big, comp_lin, comp_add, w, E_tab, B, Binv, a_abs,
                 alpha, edges, coefs, tbeta, tkind, tasym, v0e, tol, maxit, stats):
    d = X.shape[1]
    m = M + 1
    acc = np.zeros((N + 1, d))
    bounds = np.searchsorted(jstep, np.arange(N + 1), side="left")
    max_res = 0.0
    max_it = 0
    for j in range(1, N + 1):
        k = j - 1
        r = np.zeros(d)
        if kinds[F_DRIFT] == 1:
            r += coef[F_DRIFT, k] * step * _lam_np(funcs[F_DRIFT], S, k, m, w)
        if kinds[G_DIFF] == 1:
            r += coef[G_DIFF, k] * _lam_np(funcs[G_DIFF], S, k, m, w) * (P @ dw[k])
        if kinds[F_SMALL] == 1:
            r -= coef[F_SMALL, k] * step * comp_lin * _lam_np(funcs[F_SMALL], S, k, m, w)
        elif kinds[F_SMALL] == 2:
            r -= coef[F_SMALL, k] * step * comp_add
        acc[j:] += E_tab[:, 1:N - k + 1].T * (Binv @ r)[None, :]
        lags_n = np.arange(j, N + 1) * step
        for ev in range(bounds[k], bounds[k + 1]):
            atom = jatom[ev]
            role = G_BIG if big[atom] else F_SMALL
            kind = kinds[role]
            if kind == 0:
                continue
            c = coef[role, k] * rho[role - F_SMALL, atom]
            if kind == 1:
                jv = c * _lam_np(funcs[role], S, k, m, w)
            else:
                jv = c * marks[atom]
            lag = np.maximum(lags_n - jtime[ev], 0.0)
            x = a_abs[:, None] * lag[None, :] ** alpha
            ker = np.empty(x.size)
            table_eval(x.ravel(), edges, coefs, alpha, tbeta, tkind, tasym, ker)
            acc[j:] += ker.reshape(x.shape).T * (Binv @ jv)[None, :]
        R = B @ (E_tab[:, j] * v0e + acc[j])
        row = M + j
        if kinds[H] == 0:
            X[row] = R
            continue
        ch = coef[H, j]
        fcode = funcs[H]
        if fcode == 0:
            known, wl = np.zeros(d), 1.0
        elif fcode == 1:
            known, wl = X[j].copy(), 0.0
        else:
            known, wl = w[:m - 1] @ X[j:j + m - 1], w[m - 1]
        cur = R.copy()
        it = 0
        while True:
            it += 1
            nxt = R - ch * (known + wl * cur)
            diff = float(np.max(np.abs(nxt - cur)))
            cur = nxt
            if diff <= tol:
                break
            if it >= maxit:
                stats[2] = j
                return 1
        X[row] = cur
        max_res = max(max_res, diff)
        max_it = max(max_it, it)
    stats[0] = max_res
    stats[1] = max_it
    return 0


sweep = _sweep_numba if NUMBA_ENABLED else _sweep_numpy


@njit
def _sq_sup_diff_numba(A, B, start):
    best = 0.0
    for j in range(start, A.shape[0]):
        s = 0.0
        for i in range(A.shape[1]):
            dd = A[j, i] - B[j, i]
            s += dd * dd
        if s > best:
            best = s
    return best


def _sq_sup_diff_numpy(A, B, start):
    return float(np.max(np.sum((A[start:] - B[start:]) ** 2, axis=1)))


sq_sup_diff = _sq_sup_diff_numba if NUMBA_ENABLED else _sq_sup_diff_numpy
