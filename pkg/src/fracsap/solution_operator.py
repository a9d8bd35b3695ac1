"""Fractional solution operator S_alpha(t) = E_alpha(A t^alpha) for real-diagonalizable A."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, ValidationError
from .mittag_leffler import get_table, ml_eval
from .validation import ValidationReport

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class SectorialSpec:
    """Sectorial operator of type ``mu`` and angle ``theta`` with decay constants C, M.

    The operator is ``basis @ diag(eigenvalues) @ inv(basis)``; ``basis=None``
    means the identity (a diagonal or scalar operator).
    """

    alpha: float
    eigenvalues: tuple
    mu: float
    theta: float
    C: float = 1.0
    M: float = 1.0
    basis: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", tuple(float(a) for a in np.atleast_1d(self.eigenvalues)))
        if self.basis is not None:
            b = np.array(self.basis, dtype=float)
            b.flags.writeable = False
            object.__setattr__(self, "basis", b)

    @classmethod
    def scalar(cls, a, alpha, mu=None, theta=0.3, C=1.0, M=1.0):
        return cls(alpha=alpha, eigenvalues=(a,), mu=a if mu is None else mu,
                   theta=theta, C=C, M=M)

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def structural_check(self):
        """Raise if the spec cannot be evaluated at all (hypotheses are separate)."""
        if not self.eigenvalues:
            raise ValidationError("at least one eigenvalue is required", "operator.eigenvalues")
        for name in ("alpha", "mu", "theta", "C", "M"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError("must be finite", f"operator.{name}")
        if not all(math.isfinite(a) for a in self.eigenvalues):
            raise ValidationError("must be finite", "operator.eigenvalues")
        if not 0.0 < self.alpha <= 2.0:
            raise ValidationError(f"alpha={self.alpha} outside (0, 2]", "operator.alpha")
        if self.M <= 0 or self.C <= 0:
            raise ValidationError("C and M must be positive", "operator.C")
        if self.basis is not None:
            b = self.basis
            if b.shape != (self.dim, self.dim):
                raise InvalidArgument(f"basis must be {self.dim}x{self.dim}, got {b.shape}")
            if not np.all(np.isfinite(b)) or np.linalg.cond(b) > _COND_LIMIT:
                raise InvalidArgument("basis matrix is not invertible")

    def basis_pair(self):
        if self.basis is None:
            eye = np.eye(self.dim)
            return eye, eye
        return self.basis, np.linalg.inv(self.basis)

    def condition_number(self) -> float:
        return 1.0 if self.basis is None else float(np.linalg.cond(self.basis))

    def matrix(self):
        b, binv = self.basis_pair()
        return b @ np.diag(self.eigenvalues) @ binv


@dataclass(frozen=True)
class OperatorValue:
    t: float
    matrix: np.ndarray


def check_sectorial(spec: SectorialSpec) -> ValidationReport:
    """Report on type, angle and spectrum placement; never raises."""
    rep = ValidationReport("sector check")
    rep.add("1 < alpha < 2", 1.0 < spec.alpha < 2.0, spec.alpha, "(1, 2)")
    rep.add("mu < 0", spec.mu < 0, spec.mu, 0.0)
    bound = math.pi * (1.0 - spec.alpha / 2.0)
    rep.add("0 < theta < pi(1 - alpha/2)", 0.0 < spec.theta < bound, spec.theta, bound)
    for i, a in enumerate(spec.eigenvalues):
        rep.add(f"eigenvalue[{i}] <= mu < 0", a <= spec.mu < 0, a, spec.mu)
    rep.add("C >= 1", spec.C >= 1.0, spec.C, 1.0)
    rep.add("M > 0", spec.M > 0, spec.M, 0.0)
    if spec.basis is not None:
        try:
            cond = spec.condition_number()
        except np.linalg.LinAlgError:
            cond = math.inf
        rep.add("basis invertible", cond < _COND_LIMIT, cond, _COND_LIMIT)
    return rep


def solution_operator_eval(spec: SectorialSpec, t) -> OperatorValue:
    """Exact S_alpha(t) via :func:`~fracsap.mittag_leffler.ml_eval`."""
    t = float(t)
    if not math.isfinite(t) or t < 0:
        raise InvalidArgument(f"t must be finite and >= 0, got {t}")
    spec.structural_check()
    if t == 0.0:
        return OperatorValue(0.0, np.eye(spec.dim))
    e = np.array([ml_eval(spec.alpha, 1.0, a * t ** spec.alpha) for a in spec.eigenvalues])
    if spec.basis is None:
        return OperatorValue(t, np.diag(e))
    b, binv = spec.basis_pair()
    return OperatorValue(t, (b * e) @ binv)


def eigen_kernel(spec: SectorialSpec, times) -> np.ndarray:
    """E_alpha(a_i t^alpha) for every eigenvalue (rows) and time (columns), table precision."""
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise InvalidArgument("times must be >= 0")
    a = np.asarray(spec.eigenvalues)
    if np.any(a > 0):
        raise InvalidArgument("table evaluation needs a nonpositive spectrum")
    table = get_table(spec.alpha, 1.0)
    return table(-a[:, None] * times[None, :] ** spec.alpha)


def operator_matrices(spec: SectorialSpec, times) -> np.ndarray:
    """Stack of S_alpha(t) matrices, shape (len(times), d, d)."""
    spec.structural_check()
    e = eigen_kernel(spec, times)
    b, binv = spec.basis_pair()
    out = np.einsum("ik,kn,kj->nij", b, e, binv)
    out[np.asarray(times) == 0] = np.eye(spec.dim)
    return out


class OperatorTable:
    """S_alpha on the lags 0, h, 2h, ..., n h, shared read-only by all paths."""

    def __init__(self, spec: SectorialSpec, step, n):
        spec.structural_check()
        self.spec = spec
        self.step = float(step)
        self.lags = self.step * np.arange(n + 1)
        self.eig = eigen_kernel(spec, self.lags)
        self.eig[:, 0] = 1.0
        self.eig.flags.writeable = False
        self.basis, self.basis_inv = spec.basis_pair()

    def matrix(self, n) -> np.ndarray:
        return (self.basis * self.eig[:, n]) @ self.basis_inv

    def rows(self):
        """Row-major S entries for every lag, shape (n+1, d*d)."""
        mats = np.einsum("ik,kn,kj->nij", self.basis, self.eig, self.basis_inv)
        mats[0] = np.eye(self.spec.dim)
        return mats.reshape(len(self.lags), -1)


def _spectral_norms(spec, times):
    mats = operator_matrices(spec, times)
    if spec.dim == 1:
        return np.abs(mats[:, 0, 0])
    return np.linalg.norm(mats, ord=2, axis=(1, 2))


def decay_envelope(spec: SectorialSpec, t_grid) -> float:
    """max over the grid of ||S(t)|| (1 + |mu| t^alpha) / M (spectral norm)."""
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0 or np.any(t < 0) or not np.all(np.isfinite(t)):
        raise InvalidArgument("t_grid must be nonempty, finite and nonnegative")
    spec.structural_check()
    norms = _spectral_norms(spec, t)
    return float(np.max(norms * (1.0 + abs(spec.mu) * t ** spec.alpha)) / spec.M)


@dataclass
class EnvelopeStudy:
    coarse: float
    refined: float
    half_horizon: float
    rel_refinement: float
    rel_horizon: float
    stable: bool
    divergent: bool
    condition_number: float


def envelope_study(spec: SectorialSpec, horizon=100.0, n=4000, tol=0.05) -> EnvelopeStudy:
    """Empirical C on [0, horizon] at n and 2n points, plus a horizon-growth test.

    ``divergent`` is set when C on [0, horizon] exceeds C on [0, horizon/2] by
    more than ``tol`` (the supremum keeps growing with the horizon); ``stable``
    requires both a refinement change within ``tol`` and no divergence.
    """
    coarse_grid = np.linspace(0.0, horizon, n + 1)
    fine_grid = np.linspace(0.0, horizon, 2 * n + 1)
    c1 = decay_envelope(spec, coarse_grid)
    c2 = decay_envelope(spec, fine_grid)
    c_half = decay_envelope(spec, fine_grid[fine_grid <= horizon / 2])
    rel_ref = abs(c2 - c1) / c1
    rel_hor = (c2 - c_half) / c_half
    divergent = rel_hor > tol
    return EnvelopeStudy(c1, c2, c_half, rel_ref, rel_hor,
                         stable=rel_ref <= tol and not divergent,
                         divergent=divergent,
                         condition_number=spec.condition_number())
