"""Discrete mild solutions: causal time stepping and successive approximations."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidArgument, SolverError
from .mittag_leffler import get_table
from .model import FUNCTIONALS, KINDS, ROLES, ModelSpec, apply_functional, sup_norm, trapezoid_weights
from .noise import NoisePath, derive_seed, sample_path
from .solution_operator import OperatorTable

SCHEMES = ("time_step", "picard")
_ALIGN_TOL = 1e-12


@dataclass(frozen=True)
class SolverConfig:
    step: float
    horizon: float
    scheme: str = "time_step"
    picard_max_iter: int = 10
    picard_tol: float = 0.0
    neutral_tol: float = 1e-12
    neutral_max_iter: int = 100

    def __post_init__(self):
        if not (self.step > 0 and math.isfinite(self.step)):
            raise InvalidArgument("step must be positive")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise InvalidArgument("horizon must be positive")
        if self.scheme not in SCHEMES:
            raise InvalidArgument(f"scheme must be one of {SCHEMES}")
        if self.picard_max_iter < 1:
            raise InvalidArgument("picard_max_iter must be >= 1")
        if not self.neutral_tol > 0:
            raise InvalidArgument("neutral_tol must be positive")

    @property
    def n_steps(self):
        return int(round(self.horizon / self.step))

    def grid(self):
        return self.step * np.arange(self.n_steps + 1)


def steps_in(length, step, what="length"):
    """Number of grid steps in ``length``; raises unless it is a whole number."""
    q = length / step
    n = round(q)
    if n < 1 or abs(q - n) > _ALIGN_TOL * max(1.0, abs(q)):
        raise InvalidArgument(f"{what}={length} is not a multiple of the step {step}")
    return int(n)


def check_alignment(model: ModelSpec, cfg: SolverConfig):
    steps_in(model.tau, cfg.step, "tau")
    steps_in(model.omega, cfg.step, "omega")
    steps_in(cfg.horizon, cfg.step, "horizon")


@dataclass
class Segment:
    times: np.ndarray   # theta grid shifted to absolute time
    values: np.ndarray  # (m, d)

    @property
    def norm(self) -> float:
        return float(sup_norm(self.values))


@dataclass
class Trajectory:
    grid: np.ndarray      # -tau .. T, uniform
    values: np.ndarray    # (M + N + 1, d)
    n_hist: int           # M: number of steps in [-tau, 0]
    jump_steps: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    neutral_residual: float = 0.0
    seed: int | None = None

    @property
    def step(self):
        return float(self.grid[1] - self.grid[0])

    @property
    def times(self):
        """Grid points t >= 0."""
        return self.grid[self.n_hist:]

    @property
    def path(self):
        """Values at t >= 0."""
        return self.values[self.n_hist:]

    def index(self, t):
        q = t / self.step
        j = round(q)
        if abs(q - j) > 1e-9 * max(1.0, abs(q)) or not 0 <= j <= len(self.grid) - 1 - self.n_hist:
            raise InvalidArgument(f"t={t} is not a grid time in [0, T]")
        return int(j)


def segment_at(traj: Trajectory, t) -> Segment:
    """History window x_t on [t - tau, t]; t must be a grid time (no interpolation)."""
    j = traj.index(t)
    sl = slice(j, j + traj.n_hist + 1)
    return Segment(traj.grid[sl].copy(), traj.values[sl].copy())


@dataclass
class PicardDiagnostics:
    sup_diffs: list
    iterations_run: int
    converged: bool


# ---------------------------------------------------------------------------
# preparation shared across paths


class Prepared:
    """Path-independent arrays for one (model, config): read-only once built."""

    def __init__(self, model: ModelSpec, cfg: SolverConfig):
        model.check_dimensions()
        check_alignment(model, cfg)
        self.model = model
        self.cfg = cfg
        self.M = steps_in(model.tau, cfg.step, "tau")
        self.N = cfg.n_steps
        self.step = cfg.step
        self.grid = cfg.grid()
        self.full_grid = cfg.step * np.arange(-self.M, self.N + 1)
        spec = model.sectorial
        co = model.coefficients
        noise = model.noise
        d = model.dim
        self.phi = model.phi_grid(cfg.step)
        self.table = OperatorTable(spec, cfg.step, self.N)
        self.B, self.Binv = (np.ascontiguousarray(a) for a in spec.basis_pair())
        self.a_abs = np.abs(np.asarray(spec.eigenvalues))
        self.kinds = np.array([KINDS.index(co.preset(r).kind) for r in ROLES], dtype=np.int64)
        self.funcs = np.array([FUNCTIONALS.index(co.preset(r).functional) for r in ROLES],
                              dtype=np.int64)
        self.coef = np.stack([co.preset(r).c(self.grid) for r in ROLES])
        self.P = np.ascontiguousarray(co.loading(d, noise.dim))
        self.marks = noise.mark_array()
        self.big = noise.big_mask()
        self.rho = np.array([[co.preset(r).rho(u) for u in self.marks] for r in ("F", "G")]
                            ).reshape(2, noise.n_atoms)
        small = np.flatnonzero(~self.big)
        rates = np.asarray(noise.rates)
        self.comp_lin = float(sum(rates[k] * self.rho[0, k] for k in small))
        comp_add = np.zeros(d)
        if co.F.kind == "mark_additive":
            for k in small:
                comp_add += rates[k] * self.rho[0, k] * self.marks[k, :d]
        self.comp_add = comp_add
        self.w = trapezoid_weights(self.M + 1)
        v0 = self.phi[-1] + co.h.vector(0.0, self.phi)
        self.v0e = self.Binv @ v0
        edges, coefs, self.ml_alpha, beta, kind, asym = get_table(spec.alpha, 1.0).kernel_args()
        self.table_args = (edges, coefs, beta, kind, asym)

    def check_noise(self, noise: NoisePath):
        if noise.grid.shape != self.grid.shape or np.max(np.abs(noise.grid - self.grid)) > 1e-9 * self.step:
            raise InvalidArgument("noise grid does not match the solver grid")
        if noise.dw.shape != (self.N, self.model.noise.dim):
            raise InvalidArgument("noise increments have the wrong shape")

    def jump_steps(self, noise: NoisePath):
        """Left-point step index k for each event: s in (t_k, t_{k+1}]."""
        k = np.searchsorted(self.grid, noise.jump_times, side="left") - 1
        return np.clip(k, 0, self.N - 1).astype(np.int64)

    def new_values(self):
        X = np.empty((self.M + self.N + 1, self.model.dim))
        X[: self.M + 1] = self.phi
        return X

    def sweep(self, X, S, noise: NoisePath, jstep):
        stats = np.zeros(3)
        status = _kernels.sweep(
            X, S, self.M, self.N, self.step, self.kinds, self.funcs, self.coef, self.P,
            np.ascontiguousarray(noise.dw), jstep, noise.jump_times, noise.jump_atoms,
            self.marks, self.rho, self.big, self.comp_lin, self.comp_add, self.w,
            self.table.eig, self.B, self.Binv, self.a_abs, self.ml_alpha, *self.table_args,
            self.v0e, self.cfg.neutral_tol, self.cfg.neutral_max_iter, stats)
        if status != 0:
            raise SolverError(
                f"neutral fixed-point iteration did not reach {self.cfg.neutral_tol:g} in "
                f"{self.cfg.neutral_max_iter} iterations at step {int(stats[2])}")
        return float(stats[0])

    def trajectory(self, X, noise, jstep, residual, seed=None):
        return Trajectory(self.full_grid, X, self.M, jstep + 1 if jstep.size else jstep,
                          residual, seed)

    def free_part(self):
        """S(t_j) v0 on the grid (the zeroth successive approximation)."""
        # same summation order as the sweep kernels, so a zero-coefficient
        # model reproduces this bit-for-bit and Picard stops with D_1 = 0
        e = self.table.eig * self.v0e[:, None]
        out = np.zeros((self.N + 1, self.model.dim))
        for i in range(self.model.dim):
            for l in range(self.model.dim):
                out[:, i] += self.B[i, l] * (e[l] + 0.0)
        return out


def simulate_mild(model: ModelSpec, cfg: SolverConfig, noise: NoisePath, prepared=None) -> Trajectory:
    """Causal time stepping of the discrete mild equation on one noise path."""
    prep = prepared or Prepared(model, cfg)
    prep.check_noise(noise)
    X = prep.new_values()
    jstep = prep.jump_steps(noise)
    res = prep.sweep(X, X, noise, jstep)
    return prep.trajectory(X, noise, jstep, res)


def picard_iterate(model: ModelSpec, cfg: SolverConfig, noise: NoisePath, prepared=None):
    """Successive approximations on one fixed noise path.

    ``sup_diffs[n-1]`` is D_n = max_j |x^n(t_j) - x^{n-1}(t_j)|^2; iteration
    stops when D_n <= ``cfg.picard_tol`` or after ``cfg.picard_max_iter``
    iterations.
    """
    prep = prepared or Prepared(model, cfg)
    prep.check_noise(noise)
    jstep = prep.jump_steps(noise)
    prev = prep.new_values()
    prev[prep.M:] = prep.free_part()
    diffs = []
    converged = False
    res = 0.0
    for _ in range(cfg.picard_max_iter):
        X = prep.new_values()
        res = prep.sweep(X, prev, noise, jstep)
        diffs.append(_kernels.sq_sup_diff(X, prev, prep.M))
        prev = X
        if diffs[-1] <= cfg.picard_tol:
            converged = True
            break
    traj = prep.trajectory(prev, noise, jstep, res)
    return traj, PicardDiagnostics(diffs, len(diffs), converged)


def mild_residual(model: ModelSpec, cfg: SolverConfig, noise: NoisePath, traj: Trajectory) -> float:
    """Max over the grid of |x_j + h(t_j, x_{t_j}) - RHS_j| with RHS rebuilt from ``traj``.

    Uses explicit operator matrices and direct sums, independently of the
    eigen-coordinate sweep kernels.
    """
    prep = Prepared(model, cfg)
    co = model.coefficients
    M, N, h = prep.M, prep.N, prep.step
    X = traj.values
    grid = prep.grid
    d = model.dim
    mats = prep.table.rows().reshape(N + 1, d, d)
    segs = np.stack([X[k:k + M + 1] for k in range(N + 1)])
    r = np.zeros((N + 1, d))
    for k in range(N):
        seg, t = segs[k], grid[k]
        r[k] += co.f.vector(t, seg) * h if co.f.active else 0.0
        if co.g.active:
            r[k] += co.g.matrix(t, seg, prep.P) @ noise.dw[k]
        if co.F.active:
            for a in np.flatnonzero(~prep.big):
                r[k] -= h * model.noise.rates[a] * co.F.jump(t, seg, prep.marks[a])
    ml = get_table(model.sectorial.alpha, 1.0)
    jstep = prep.jump_steps(noise)
    worst = 0.0
    v0 = prep.phi[-1] + co.h.vector(0.0, prep.phi)
    for j in range(1, N + 1):
        rhs = mats[j] @ v0
        for k in range(j):
            rhs = rhs + mats[j - k] @ r[k]
        for s, atom, k in zip(noise.jump_times, noise.jump_atoms, jstep):
            if k >= j:
                continue
            preset = co.G if prep.big[atom] else co.F
            if not preset.active:
                continue
            lag = grid[j] - s
            e = ml(prep.a_abs * lag ** model.sectorial.alpha)
            kern = (prep.B * e) @ prep.Binv
            rhs = rhs + kern @ preset.jump(grid[k], segs[k], prep.marks[atom])
        lhs = X[M + j] + (co.h.vector(grid[j], segs[j]) if co.h.active else 0.0)
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


# ---------------------------------------------------------------------------
# ensembles


@dataclass
class Ensemble:
    grid: np.ndarray        # full grid -tau .. T
    values: np.ndarray      # (n_paths, M + N + 1, d)
    n_hist: int
    seeds: list
    master_seed: int
    scheme: str
    diagnostics: list = field(default_factory=list)

    @property
    def n_paths(self):
        return self.values.shape[0]

    @property
    def step(self):
        return float(self.grid[1] - self.grid[0])

    def index(self, t):
        q = t / self.step
        j = round(q)
        if abs(q - j) > 1e-9 * max(1.0, abs(q)) or not 0 <= j <= self.values.shape[1] - 1 - self.n_hist:
            raise InvalidArgument(f"t={t} is not a grid time in [0, T]")
        return int(j)

    def segments(self, t, paths=None):
        """Segment clouds at time t, shape (n, M + 1, d)."""
        j = self.index(t)
        v = self.values if paths is None else self.values[paths]
        return v[:, j:j + self.n_hist + 1]

    def trajectory(self, p) -> Trajectory:
        return Trajectory(self.grid, self.values[p], self.n_hist, seed=self.seeds[p])


def run_ensemble(model: ModelSpec, cfg: SolverConfig, n_paths, master_seed, threads=1,
                 scheme=None, prepared=None) -> Ensemble:
    """Simulate ``n_paths`` paths with seeds ``derive_seed(master_seed, p)``.

    Results are independent of ``threads``: each path owns its seed and its
    output slot, and all shared arrays are read-only.
    """
    if n_paths < 1:
        raise InvalidArgument("n_paths must be >= 1")
    scheme = scheme or cfg.scheme
    prep = prepared or Prepared(model, cfg)
    d = model.dim
    try:
        values = np.empty((n_paths, prep.M + prep.N + 1, d))
    except MemoryError as exc:
        raise SolverError(f"ensemble of {n_paths} paths does not fit in memory") from exc
    seeds = [derive_seed(master_seed, p) for p in range(n_paths)]
    diags = [None] * n_paths

    def one(p):
        noise = sample_path(model.noise, prep.grid, seeds[p])
        if scheme == "picard":
            traj, diag = picard_iterate(model, cfg, noise, prepared=prep)
            diags[p] = diag
        else:
            traj = simulate_mild(model, cfg, noise, prepared=prep)
        values[p] = traj.values

    if threads <= 1:
        for p in range(n_paths):
            one(p)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one, range(n_paths)))
    return Ensemble(prep.full_grid, values, prep.M, seeds, int(master_seed), scheme,
                    diags if scheme == "picard" else [])


def coefficient_process(ensemble: Ensemble, preset, t):
    """c(t) Lambda[x_t] for every path (used by the composition checks)."""
    segs = ensemble.segments(t)
    return float(preset.c(t)) * apply_functional(preset.functional, segs)
