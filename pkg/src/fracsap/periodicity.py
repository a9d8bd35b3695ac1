"""Square-mean and in-distribution S-asymptotic periodicity estimators.

Segments are compared in the grid sup-norm ``max_l |x(l) - y(l)|``.  The
bounded-Lipschitz distance between two empirical laws is

    d_BL(P, Q) = sup { mean_P f - mean_Q f : |f| <= 1, Lip(f) <= 1 },

computed exactly: for two uniform clouds of equal size it is the optimal
assignment cost under ``min(d, 2)`` (Kantorovich duality), otherwise a linear
program over the values of f at the distinct support points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse
from scipy.spatial.distance import cdist

from .errors import InvalidArgument
from .model import Preset, apply_functional, sup_norm

LP_CAP = 1000
ASSIGNMENT_CAP = 5000
DEFAULT_CHECKPOINTS = (5.0, 10.0, 20.0, 40.0, 80.0)
PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"


@dataclass
class EmpiricalLaw:
    samples: np.ndarray   # (n, m, d)
    t_label: float = math.nan

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 2:
            s = s[:, :, None]
        if s.ndim != 3 or s.shape[0] == 0:
            raise InvalidArgument("an empirical law needs samples shaped (n, m, d) with n >= 1")
        self.samples = s

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def shape(self):
        return self.samples.shape[1:]


def segment_distances(P, Q):
    """Pairwise grid sup-norm distances, shape (len(P), len(Q))."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    D = np.zeros((P.shape[0], Q.shape[0]))
    for l in range(P.shape[1]):
        np.maximum(D, cdist(P[:, l, :], Q[:, l, :]), out=D)
    return D


def _assignment_bl(D):
    cost = np.minimum(D, 2.0)
    r, c = optimize.linear_sum_assignment(cost)
    return float(cost[r, c].sum() / D.shape[0])


def bl_lp(points_dist, weights):
    """max sum_i w_i f_i  s.t.  |f_i - f_j| <= d_ij, -1 <= f_i <= 1.

    ``points_dist`` is the (k, k) distance matrix of distinct support points and
    ``weights`` the signed mass differences.  Constraints with d_ij >= 2 are
    implied by the bounds and dropped.
    """
    k = len(weights)
    if k == 1:
        return abs(float(weights[0]))
    i, j = np.nonzero(np.triu(points_dist < 2.0, 1))
    n_con = i.size
    if n_con:
        rows = np.repeat(np.arange(n_con), 2)
        cols = np.stack([i, j], axis=1).ravel()
        vals = np.tile([1.0, -1.0], n_con)
        half = sparse.csr_matrix((vals, (rows, cols)), shape=(n_con, k))
        A = sparse.vstack([half, -half]).tocsr()
        b = np.concatenate([points_dist[i, j], points_dist[i, j]])
    else:
        A, b = None, None
    res = optimize.linprog(-np.asarray(weights, dtype=float), A_ub=A, b_ub=b,
                           bounds=[(-1.0, 1.0)] * k, method="highs")
    if res.status != 0:
        raise RuntimeError(f"bounded-Lipschitz LP failed: {res.message}")
    return max(0.0, float(-res.fun))


def bl_distance(P: EmpiricalLaw, Q: EmpiricalLaw, wP=None, wQ=None, cap=LP_CAP, method="auto") -> float:
    """Exact d_BL between two (optionally weighted) empirical laws.

    ``method`` is ``"assignment"`` (uniform clouds of equal size only),
    ``"lp"`` or ``"auto"``.  The LP is capped at ``cap`` combined samples.
    """
    if P.shape != Q.shape:
        raise InvalidArgument(f"law shapes differ: {P.shape} vs {Q.shape}")
    uniform = wP is None and wQ is None and P.n == Q.n
    if method == "auto":
        method = "assignment" if uniform else "lp"
    if method == "assignment":
        if not uniform:
            raise InvalidArgument("the assignment solver needs uniform clouds of equal size")
        if P.n > ASSIGNMENT_CAP:
            raise InvalidArgument(f"{P.n} samples exceed the cap {ASSIGNMENT_CAP}; subsample first")
        return _assignment_bl(segment_distances(P.samples, Q.samples))
    if method != "lp":
        raise InvalidArgument(f"unknown method {method!r}")
    if P.n + Q.n > cap:
        raise InvalidArgument(f"combined support {P.n + Q.n} exceeds the LP cap {cap}; subsample first")
    wP = np.full(P.n, 1.0 / P.n) if wP is None else _weights(wP, P.n)
    wQ = np.full(Q.n, 1.0 / Q.n) if wQ is None else _weights(wQ, Q.n)
    pts = np.concatenate([P.samples, Q.samples])
    flat = pts.reshape(pts.shape[0], -1)
    uniq, inv = np.unique(flat, axis=0, return_inverse=True)
    w = np.bincount(inv.ravel(), weights=np.concatenate([wP, -wQ]), minlength=uniq.shape[0])
    pts_u = uniq.reshape((-1,) + P.shape)
    return bl_lp(segment_distances(pts_u, pts_u), w)


def _weights(w, n):
    w = np.asarray(w, dtype=float)
    if w.shape != (n,) or np.any(w < 0) or not math.isclose(w.sum(), 1.0, rel_tol=1e-9):
        raise InvalidArgument("weights must be nonnegative and sum to 1")
    return w


# ---------------------------------------------------------------------------
# ensemble estimators


def _pair(ensemble, t, omega):
    if omega < 0:
        raise InvalidArgument("omega must be >= 0")
    return ensemble.segments(t), ensemble.segments(t + omega)


def pathwise_gaps(ensemble, t, omega):
    """||x_{t+omega} - x_t||_C for every path."""
    a, b = _pair(ensemble, t, omega)
    return sup_norm(b - a)


def _mean_se(v):
    v = np.asarray(v, dtype=float)
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def mean_square_gap(ensemble, t, omega):
    """Coupled estimate of E||x_{t+omega} - x_t||_C^2 with its standard error."""
    return _mean_se(pathwise_gaps(ensemble, t, omega) ** 2)


def truncated_moment_bound(ensemble, t, omega):
    """Coupled estimate of E(2 ^ ||x_{t+omega} - x_t||_C) with its standard error."""
    return _mean_se(np.minimum(pathwise_gaps(ensemble, t, omega), 2.0))


def coupled_bl(ensemble, t, omega) -> float:
    """d_BL between the clouds {x_t} and {x_{t+omega}} built from the same paths."""
    a, b = _pair(ensemble, t, omega)
    return bl_distance(EmpiricalLaw(a, t), EmpiricalLaw(b, t + omega))


def distribution_gap(ensemble, t, omega, n_boot=200, seed=0, shared=False, max_per_cloud=None):
    """d_BL(law x_{t+omega}, law x_t) from disjoint path halves, with a bootstrap SE.

    With ``shared=True`` both clouds use all paths (so omega = 0 gives 0).
    """
    n = ensemble.n_paths
    if shared:
        ia = ib = np.arange(n)
    else:
        if n < 2:
            raise InvalidArgument("disjoint clouds need at least two paths")
        half = n // 2
        ia, ib = np.arange(half), np.arange(half, 2 * half)
    if max_per_cloud is not None:
        ia, ib = ia[:max_per_cloud], ib[:max_per_cloud]
    A = ensemble.segments(t)[ia]
    B = ensemble.segments(t + omega)[ib]
    D = np.minimum(segment_distances(A, B), 2.0)
    k = D.shape[0]
    est = _assignment_cost(D)
    if n_boot <= 0:
        return est, 0.0
    boots = np.empty(n_boot)
    for r in range(n_boot):
        rng = np.random.default_rng([int(seed), r])
        boots[r] = _assignment_cost(D[np.ix_(rng.integers(0, k, k), rng.integers(0, k, k))])
    return est, float(boots.std(ddof=1))


def _assignment_cost(C):
    r, c = optimize.linear_sum_assignment(C)
    return float(C[r, c].sum() / C.shape[0])


# ---------------------------------------------------------------------------
# coefficient-level checks


def coefficient_sap_gap(preset: Preset, t, omega, probes, role="f", noise=None, loading=None) -> float:
    """Max over probe segments of the squared coefficient gap between t + omega and t.

    ``role`` selects the norm: plain vector norm for h and f, the Q-weighted
    Frobenius norm for g, and the rate-weighted sum over atoms on the proper
    side of the jump threshold for F (small) and G (big).
    """
    probes = np.asarray(probes, dtype=float)
    if probes.ndim == 2:
        probes = probes[None]
    if probes.shape[0] == 0:
        raise InvalidArgument("probe set is empty")
    if not preset.active:
        return 0.0
    t1 = t + omega
    best = 0.0
    for seg in probes:
        if role in ("h", "f"):
            v = float(np.sum((preset.vector(t1, seg) - preset.vector(t, seg)) ** 2))
        elif role == "g":
            if noise is None:
                raise InvalidArgument("the g gap needs the noise spec")
            load = np.eye(seg.shape[-1], noise.dim) if loading is None else loading
            diff = preset.matrix(t1, seg, load) - preset.matrix(t, seg, load)
            v = float(np.sum(diff ** 2 * np.asarray(noise.Q_diag)[None, :]))
        elif role in ("F", "G"):
            if noise is None:
                raise InvalidArgument("jump gaps need the noise spec")
            side = noise.big_mask() if role == "G" else ~noise.big_mask()
            marks = noise.mark_array()
            v = float(sum(noise.rates[k] * np.sum((preset.jump(t1, seg, marks[k])
                                                    - preset.jump(t, seg, marks[k])) ** 2)
                          for k in np.flatnonzero(side)))
        else:
            raise InvalidArgument(f"unknown role {role!r}")
        best = max(best, v)
    return best


def coefficient_output_gap(ensemble, preset: Preset, t, omega):
    """Coupled E||c(t+omega) Lambda[x_{t+omega}] - c(t) Lambda[x_t]||^2 with its SE."""
    a, b = _pair(ensemble, t, omega)
    ya = float(preset.c(t)) * apply_functional(preset.functional, a)
    yb = float(preset.c(t + omega)) * apply_functional(preset.functional, b)
    return _mean_se(np.sum((yb - ya) ** 2, axis=-1))


# ---------------------------------------------------------------------------
# reports and verdicts


@dataclass
class PeriodicityReport:
    t_checkpoints: list
    omega: float
    n_paths: int
    ms_gaps: list = field(default_factory=list)
    ms_se: list = field(default_factory=list)
    bl_gaps: list = field(default_factory=list)
    bl_se: list = field(default_factory=list)
    trunc_bounds: list = field(default_factory=list)
    trunc_se: list = field(default_factory=list)
    coupled_bl: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    COLUMNS = ("t", "ms_gap", "ms_se", "bl_gap", "bl_se", "trunc_bound", "trunc_se", "coupled_bl")

    def rows(self):
        return [tuple(float(v) for v in r) for r in zip(
            self.t_checkpoints, self.ms_gaps, self.ms_se, self.bl_gaps, self.bl_se,
            self.trunc_bounds, self.trunc_se, self.coupled_bl)]

    def to_dict(self):
        out = {"omega": float(self.omega), "n_paths": int(self.n_paths)}
        for name, col in zip(self.COLUMNS, zip(*self.rows()) if self.t_checkpoints else [()] * 8):
            out[name] = list(col)
        out["verdicts"] = dict(self.verdicts)
        return out


def decay_verdict(estimates, stderrs, fraction=0.25, z=2.0):
    """PASS when the SE-inflated running max over the last half of the checkpoints
    is at most ``fraction`` times the SE-deflated first estimate.

    FAIL when even the SE-deflated tail maximum exceeds ``fraction`` times the
    SE-inflated first estimate; INCONCLUSIVE otherwise.
    """
    est = np.asarray(estimates, dtype=float)
    se = np.asarray(stderrs, dtype=float)
    if est.size < 4:
        raise InvalidArgument("a decay verdict needs at least 4 checkpoints")
    tail = slice(est.size // 2, None)
    if np.max(est[tail] + z * se[tail]) <= fraction * (est[0] - z * se[0]):
        return PASS
    if np.max(est[tail] - z * se[tail]) > fraction * (est[0] + z * se[0]):
        return FAIL
    return INCONCLUSIVE


def sap_decay_verdict(report: PeriodicityReport, which="mean_square", fraction=0.25, z=2.0):
    if which == "mean_square":
        return decay_verdict(report.ms_gaps, report.ms_se, fraction, z)
    if which == "distribution":
        return decay_verdict(report.bl_gaps, report.bl_se, fraction, z)
    raise InvalidArgument(f"unknown gap kind {which!r}")


def domination_checks(report: PeriodicityReport, k=3.0):
    """Per checkpoint: coupled d_BL <= trunc + k SE and trunc <= sqrt(ms) + k combined SE."""
    out = []
    for bl, tr, tse, ms, mse in zip(report.coupled_bl, report.trunc_bounds, report.trunc_se,
                                    report.ms_gaps, report.ms_se):
        root = math.sqrt(ms)
        root_se = mse / (2.0 * root) if root > 0 else math.sqrt(mse)
        comb = math.hypot(tse, root_se)
        out.append((bl <= tr + k * tse, tr <= root + k * comb))
    return out


def periodicity_report(ensemble, omega, checkpoints=DEFAULT_CHECKPOINTS, n_boot=200, seed=0,
                       fraction=0.25, max_per_cloud=500) -> PeriodicityReport:
    """All gap estimates at each checkpoint plus mean-square and distribution verdicts."""
    rep = PeriodicityReport([float(t) for t in checkpoints], float(omega), ensemble.n_paths)
    for t in rep.t_checkpoints:
        m, s = mean_square_gap(ensemble, t, omega)
        rep.ms_gaps.append(m)
        rep.ms_se.append(s)
        if ensemble.n_paths >= 2:
            b, bs = distribution_gap(ensemble, t, omega, n_boot=n_boot, seed=seed,
                                     max_per_cloud=max_per_cloud)
        else:
            b, bs = distribution_gap(ensemble, t, omega, n_boot=0, shared=True)
        rep.bl_gaps.append(b)
        rep.bl_se.append(bs)
        m, s = truncated_moment_bound(ensemble, t, omega)
        rep.trunc_bounds.append(m)
        rep.trunc_se.append(s)
        rep.coupled_bl.append(coupled_bl(ensemble, t, omega))
    if len(rep.t_checkpoints) >= 4:
        rep.verdicts["mean_square"] = sap_decay_verdict(rep, "mean_square", fraction)
        rep.verdicts["distribution"] = sap_decay_verdict(rep, "distribution", fraction)
    return rep
