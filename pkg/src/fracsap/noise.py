"""Finite-activity Levy noise: Q-Wiener increments plus atomic Poisson jumps.

Jump marks with ``|u| >= 1`` are big jumps (integrated against N), the rest
are small jumps (integrated against the compensated measure).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, ValidationError

JUMP_THRESHOLD = 1.0

_WIENER_STREAM = 0
_JUMP_STREAM0 = 1


@dataclass(frozen=True)
class LevySpec:
    dim: int
    drift: tuple
    Q_diag: tuple
    marks: tuple = ()
    rates: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "drift", tuple(float(v) for v in self.drift))
        object.__setattr__(self, "Q_diag", tuple(float(v) for v in self.Q_diag))
        object.__setattr__(self, "marks", tuple(tuple(float(c) for c in m) for m in self.marks))
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        self.validate()

    @classmethod
    def from_atoms(cls, dim, drift, Q_diag, atoms=()):
        atoms = list(atoms)
        return cls(dim, drift, Q_diag, tuple(np.atleast_1d(m) for m, _ in atoms),
                   tuple(r for _, r in atoms))

    def validate(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError("must be a positive integer", "noise.dim")
        if len(self.drift) != self.dim:
            raise ValidationError(f"expected {self.dim} entries", "noise.drift")
        if len(self.Q_diag) != self.dim:
            raise ValidationError(f"expected {self.dim} entries", "noise.Q")
        if not all(math.isfinite(q) and q >= 0 for q in self.Q_diag):
            raise ValidationError("covariance eigenvalues must be finite and >= 0", "noise.Q")
        if not all(math.isfinite(a) for a in self.drift):
            raise ValidationError("must be finite", "noise.drift")
        if len(self.marks) != len(self.rates):
            raise ValidationError("marks and rates differ in length", "noise.atoms")
        for k, (m, r) in enumerate(zip(self.marks, self.rates)):
            if len(m) != self.dim:
                raise ValidationError(f"mark has {len(m)} entries, expected {self.dim}",
                                      f"noise.atoms[{k}].mark")
            if not all(math.isfinite(c) for c in m) or not any(m):
                raise ValidationError("mark must be finite and nonzero", f"noise.atoms[{k}].mark")
            if not (math.isfinite(r) and r > 0):
                raise ValidationError("rate must be finite and > 0", f"noise.atoms[{k}].rate")

    @property
    def n_atoms(self):
        return len(self.rates)

    @property
    def trace_Q(self):
        return float(sum(self.Q_diag))

    def mark_array(self):
        return np.array(self.marks, dtype=float).reshape(self.n_atoms, self.dim)

    def mark_norms(self):
        return np.linalg.norm(self.mark_array(), axis=1)

    def big_mask(self):
        """True for atoms integrated against N (``|u| >= 1``)."""
        return self.mark_norms() >= JUMP_THRESHOLD


def big_jump_intensity(spec: LevySpec) -> float:
    """b = nu({|u| >= 1})."""
    rates = np.asarray(spec.rates)
    return float(rates[spec.big_mask()].sum()) if spec.n_atoms else 0.0


def small_jump_compensator(spec: LevySpec, integrand):
    """Sum over small atoms of rate * integrand(mark); zero if there are none."""
    total = None
    for k in np.flatnonzero(~spec.big_mask()):
        v = spec.rates[k] * np.asarray(integrand(spec.mark_array()[k]), dtype=float)
        total = v if total is None else total + v
    if total is None:
        return np.zeros(np.shape(integrand(np.zeros(spec.dim))))
    return total


@dataclass
class NoisePath:
    grid: np.ndarray          # t_0 = 0 < ... < t_N
    dw: np.ndarray            # (N, dim) Wiener increments
    jump_times: np.ndarray    # sorted, in (0, t_N]
    jump_atoms: np.ndarray    # atom index per event

    @property
    def horizon(self):
        return float(self.grid[-1])

    def truncate(self, j):
        """Noise restricted to [0, t_j]."""
        keep = self.jump_times <= self.grid[j]
        return NoisePath(self.grid[: j + 1].copy(), self.dw[:j].copy(),
                         self.jump_times[keep].copy(), self.jump_atoms[keep].copy())

    def counts(self, n_atoms):
        return np.bincount(self.jump_atoms, minlength=n_atoms)


def check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise InvalidArgument("grid needs at least two points")
    if grid[0] != 0.0 or not np.all(np.diff(grid) > 0) or not np.all(np.isfinite(grid)):
        raise InvalidArgument("grid must start at 0 and be strictly increasing")
    return grid


def derive_seed(master_seed, index) -> int:
    """64-bit per-path seed from (master seed, path index); independent of scheduling."""
    ss = np.random.SeedSequence(int(master_seed) % 2**128, spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _generator(seed, stream):
    return np.random.Generator(np.random.Philox(key=[int(seed) % 2**64, stream]))


def _arrival_times(rng, rate, horizon):
    """Poisson arrival times on (0, horizon] from exponential gaps, drawn in blocks."""
    mean = rate * horizon
    block = int(mean + 6.0 * math.sqrt(mean) + 16)
    t = np.cumsum(rng.exponential(1.0 / rate, block))
    while t[-1] <= horizon:
        t = np.concatenate([t, t[-1] + np.cumsum(rng.exponential(1.0 / rate, block))])
    return t[: np.searchsorted(t, horizon, side="right")]


def sample_path(spec: LevySpec, grid, seed) -> NoisePath:
    """Deterministic function of (spec, grid, seed).

    Each component of the noise uses its own Philox stream keyed by
    (seed, stream id), so the Wiener part and every atom are independent and
    adding an atom does not perturb the others.
    """
    spec.validate()
    grid = check_grid(grid)
    dt = np.diff(grid)
    rng = _generator(seed, _WIENER_STREAM)
    sd = np.sqrt(np.asarray(spec.Q_diag))
    dw = rng.standard_normal((dt.size, spec.dim)) * np.sqrt(dt)[:, None] * sd[None, :]
    horizon = grid[-1]
    times, atoms = [], []
    for k, rate in enumerate(spec.rates):
        t = _arrival_times(_generator(seed, _JUMP_STREAM0 + k), rate, horizon)
        times.append(t)
        atoms.append(np.full(t.size, k, dtype=np.int64))
    times = np.concatenate(times) if times else np.zeros(0)
    atoms = np.concatenate(atoms) if atoms else np.zeros(0, dtype=np.int64)
    order = np.argsort(times, kind="stable")
    return NoisePath(grid, dw, times[order], atoms[order])


def levy_values(spec: LevySpec, noise: NoisePath) -> np.ndarray:
    """L(t_j) = a t + w(t) + compensated small jumps + big jumps, shape (N+1, dim)."""
    grid = noise.grid
    marks = spec.mark_array()
    big = spec.big_mask()
    out = np.zeros((grid.size, spec.dim))
    out += grid[:, None] * np.asarray(spec.drift)[None, :]
    out[1:] += np.cumsum(noise.dw, axis=0)
    comp = np.zeros(spec.dim)
    for k in np.flatnonzero(~big):
        comp += spec.rates[k] * marks[k]
    out -= grid[:, None] * comp[None, :]
    for s, k in zip(noise.jump_times, noise.jump_atoms):
        out[grid >= s] += marks[k]
    return out
