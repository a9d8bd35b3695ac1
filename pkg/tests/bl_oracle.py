"""Brute-force grid oracle for the bounded-Lipschitz LP on at most four support points."""

import numpy as np

GRID_STEP = 1e-3


def grid_bl(D, w, step=GRID_STEP):
    """max sum_i w_i f_i over |f_i - f_j| <= min(D_ij, 2), searched on a grid.

    Masses sum to zero, so f may be shifted to f_0 = 0; the capped Lipschitz
    bound then keeps every f_i within [-2, 2] and the spread within 2, so the
    optimum shifts back into [-1, 1].  The middle coordinates run over a grid
    and the last one is set in closed form at the end of its feasible interval.
    """
    D = np.minimum(np.asarray(D, dtype=float), 2.0)
    w = np.asarray(w, dtype=float)
    k = w.size
    if k == 1:
        return abs(w[0])
    if k == 2:
        return abs(w[1]) * D[0, 1]
    axes = [np.arange(-D[0, i], D[0, i] + step / 2, step) for i in range(1, k - 1)]
    mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
    f = [np.zeros(1)] + list(mesh)
    ok = np.ones(np.broadcast_shapes(*(m.shape for m in mesh)), dtype=bool)
    for i in range(1, k - 1):
        for j in range(i + 1, k - 1):
            ok &= np.abs(f[i] - f[j]) <= D[i, j] + 1e-12
    last = k - 1
    lo = np.maximum.reduce([np.broadcast_to(f[i] - D[i, last], ok.shape) for i in range(last)])
    hi = np.minimum.reduce([np.broadcast_to(f[i] + D[i, last], ok.shape) for i in range(last)])
    ok &= lo <= hi + 1e-12
    f_last = hi if w[last] >= 0 else lo
    val = w[last] * f_last
    for i in range(1, last):
        val = val + w[i] * f[i]
    return float(np.max(np.where(ok, val, -np.inf)))


def random_instance(rng, m=3):
    """Two weighted clouds of segments with at most four support points in total."""
    nP = int(rng.integers(1, 3))
    nQ = int(rng.integers(1, 5 - nP))
    P = rng.uniform(0.0, 1.6, size=(nP, m, 1))
    Q = rng.uniform(0.0, 1.6, size=(nQ, m, 1))
    wP = rng.dirichlet(np.ones(nP))
    wQ = rng.dirichlet(np.ones(nQ))
    return P, Q, wP, wQ
