"""Problem instances: coefficient presets, hypothesis validation and contraction constants.

Every shipped coefficient is linear in the history segment,

    c(t) * Lambda[phi]               (h, f; g acts as c(t) diag(Lambda[phi]) P)
    c(t) * rho(u) * Lambda[phi]      (F, G)

with ``c(t) = c_per(t) + c0 / (1 + t)**p`` and ``c_per`` a finite Fourier
series of period ``omega``.  ``Lambda`` picks the present value, the delayed
value, or the trapezoidal window average.  Every such coefficient vanishes at
the zero segment and has an analytically known Lipschitz constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument, ValidationError
from .noise import LevySpec, big_jump_intensity
from .solution_operator import SectorialSpec, check_sectorial
from .validation import ValidationReport

FUNCTIONALS = ("now", "delay", "average")
KINDS = ("zero", "linear", "mark_additive")
MARK_SCALES = ("one", "norm")
ROLES = ("h", "f", "g", "F", "G")


@dataclass(frozen=True)
class Profile:
    """Scalar time profile c(t) = mean + sum_n (cos_n cos + sin_n sin)(2 pi n t / period) + c0/(1+t)^p."""

    mean: float = 0.0
    cos: tuple = ()
    sin: tuple = ()
    period: float = 1.0
    c0: float = 0.0
    p: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "cos", tuple(float(v) for v in self.cos))
        object.__setattr__(self, "sin", tuple(float(v) for v in self.sin))
        if not self.period > 0:
            raise ValidationError("period must be positive", "profile.period")
        if self.c0 != 0 and self.p < 1:
            raise ValidationError("decay exponent p must be >= 1", "profile.p")

    @classmethod
    def constant(cls, value):
        return cls(mean=float(value))

    def periodic_part(self, t):
        # reduce the phase first so that c_per(t + period) == c_per(t) bit-exactly
        t = np.mod(np.asarray(t, dtype=float), self.period)
        out = np.full_like(t, self.mean)
        w = 2.0 * math.pi / self.period
        for n, a in enumerate(self.cos, start=1):
            out += a * np.cos(n * w * t)
        for n, b in enumerate(self.sin, start=1):
            out += b * np.sin(n * w * t)
        return out

    def decay_part(self, t):
        t = np.asarray(t, dtype=float)
        return self.c0 / (1.0 + t) ** self.p

    def __call__(self, t):
        return self.periodic_part(t) + self.decay_part(t)

    def sup_bound(self) -> float:
        """Upper bound on sup_t |c(t)|; exact for a constant plus a same-sign decay."""
        n = max(len(self.cos), len(self.sin))
        cos = self.cos + (0.0,) * (n - len(self.cos))
        sin = self.sin + (0.0,) * (n - len(self.sin))
        harmonics = sum(math.hypot(a, b) for a, b in zip(cos, sin))
        return abs(self.mean) + harmonics + abs(self.c0)

    @property
    def is_periodic(self):
        return self.c0 == 0.0


def apply_functional(functional, seg):
    """Lambda[seg] for segments shaped (..., m, d) sampled on a uniform grid over [-tau, 0]."""
    seg = np.asarray(seg, dtype=float)
    if functional == "now":
        return seg[..., -1, :]
    if functional == "delay":
        return seg[..., 0, :]
    if functional == "average":
        return np.tensordot(trapezoid_weights(seg.shape[-2]), seg, axes=([0], [-2]))
    raise InvalidArgument(f"unknown functional {functional!r}")


def trapezoid_weights(m):
    """Weights of the normalised trapezoid rule on m equispaced points (sum to 1)."""
    if m == 1:
        return np.ones(1)
    w = np.full(m, 1.0 / (m - 1))
    w[0] = w[-1] = 0.5 / (m - 1)
    return w


@dataclass(frozen=True)
class Preset:
    kind: str = "zero"
    profile: Profile = field(default_factory=Profile)
    functional: str = "now"
    mark_scale: str = "one"
    loading: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kind {self.kind!r}", "coefficients.kind")
        if self.functional not in FUNCTIONALS:
            raise ValidationError(f"unknown functional {self.functional!r}", "coefficients.functional")
        if self.mark_scale not in MARK_SCALES:
            raise ValidationError(f"unknown mark_scale {self.mark_scale!r}", "coefficients.mark_scale")
        if self.loading is not None:
            object.__setattr__(self, "loading", np.atleast_2d(np.asarray(self.loading, dtype=float)))

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def linear(cls, profile, functional="now", **kw):
        if not isinstance(profile, Profile):
            profile = Profile.constant(profile)
        return cls("linear", profile, functional, **kw)

    @property
    def active(self):
        return self.kind != "zero"

    def c(self, t):
        if not self.active:
            return np.zeros_like(np.asarray(t, dtype=float))
        return self.profile(t)

    def rho(self, u):
        if self.mark_scale == "norm":
            return float(np.linalg.norm(u))
        return 1.0

    # evaluation -- t scalar, seg (m, d) ------------------------------------

    def vector(self, t, seg):
        seg = np.asarray(seg, dtype=float)
        if self.kind == "zero":
            return np.zeros(seg.shape[-1])
        if self.kind == "mark_additive":
            raise InvalidArgument("mark_additive presets are only valid for F and G")
        return float(self.c(t)) * apply_functional(self.functional, seg)

    def matrix(self, t, seg, loading):
        """g(t, seg) as a d x dim_U matrix."""
        seg = np.asarray(seg, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(loading)
        lam = apply_functional(self.functional, seg)
        return float(self.c(t)) * lam[:, None] * loading

    def jump(self, t, seg, u):
        seg = np.asarray(seg, dtype=float)
        if self.kind == "zero":
            return np.zeros(seg.shape[-1])
        if self.kind == "mark_additive":
            return float(self.c(t)) * self.rho(u) * np.asarray(u, dtype=float)
        return float(self.c(t)) * self.rho(u) * apply_functional(self.functional, seg)


def default_loading(d, dim_u):
    p = np.zeros((d, dim_u))
    for i in range(min(d, dim_u)):
        p[i, i] = 1.0
    return p


@dataclass(frozen=True)
class CoefficientSet:
    h: Preset = field(default_factory=Preset)
    f: Preset = field(default_factory=Preset)
    g: Preset = field(default_factory=Preset)
    F: Preset = field(default_factory=Preset)
    G: Preset = field(default_factory=Preset)
    k0: float = 0.5
    L: float = 1.0
    sap_omega: float = 1.0

    def preset(self, role) -> Preset:
        return getattr(self, role)

    def loading(self, d, dim_u):
        if self.g.loading is not None:
            return self.g.loading
        return default_loading(d, dim_u)


@dataclass(frozen=True)
class InitialSegment:
    """History phi on [-tau, 0]: constant, affine in theta, or explicit grid values."""

    kind: str = "constant"
    value: tuple = (1.0,)
    slope: tuple | None = None
    values: tuple | None = None

    def sample(self, tau, m, d):
        theta = np.linspace(-tau, 0.0, m)
        if self.kind == "constant":
            v = np.broadcast_to(np.asarray(self.value, dtype=float), (d,))
            return np.tile(v, (m, 1))
        if self.kind == "affine":
            v = np.broadcast_to(np.asarray(self.value, dtype=float), (d,))
            s = np.broadcast_to(np.asarray(self.slope or (0.0,), dtype=float), (d,))
            return v[None, :] + theta[:, None] * s[None, :]
        if self.kind == "values":
            arr = np.asarray(self.values, dtype=float).reshape(-1, d)
            if arr.shape[0] != m:
                raise ValidationError(
                    f"phi has {arr.shape[0]} grid values, the grid needs {m}", "model.phi.values")
            return arr.copy()
        raise ValidationError(f"unknown kind {self.kind!r}", "model.phi.kind")


@dataclass(frozen=True)
class ModelSpec:
    sectorial: SectorialSpec
    noise: LevySpec
    tau: float
    omega: float
    phi: InitialSegment
    coefficients: CoefficientSet

    @property
    def dim(self):
        return self.sectorial.dim

    def check_dimensions(self):
        d, du = self.dim, self.noise.dim
        co = self.coefficients
        if co.g.loading is not None and co.g.loading.shape != (d, du):
            raise ValidationError(f"loading must be {d}x{du}, got {co.g.loading.shape}",
                                  "coefficients.g.loading")
        for role in ("F", "G"):
            if co.preset(role).kind == "mark_additive" and du != d:
                raise ValidationError("mark_additive needs dim U == dim H", f"coefficients.{role}")
        for role in ("h", "f", "g"):
            if co.preset(role).kind == "mark_additive":
                raise ValidationError("mark_additive is only valid for F and G",
                                      f"coefficients.{role}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValidationError("must be positive", "model.tau")
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValidationError("must be positive", "model.omega")
        phi = self.phi.sample(self.tau, 3 if self.phi.kind != "values" else
                              len(self.phi.values) // max(d, 1), d)
        if not np.all(np.isfinite(phi)):
            raise ValidationError("must be finite", "model.phi")

    def phi_grid(self, step):
        m = int(round(self.tau / step)) + 1
        return self.phi.sample(self.tau, m, self.dim)


# ---------------------------------------------------------------------------
# constants


def kappa1(alpha, mu) -> float:
    """|mu|^(-1/alpha) pi / (alpha sin(pi/alpha)) = int_0^inf dt / (1 + |mu| t^alpha)."""
    _check_kappa_args(alpha, mu)
    return abs(mu) ** (-1.0 / alpha) * math.pi / (alpha * math.sin(math.pi / alpha))


def kappa2(alpha, mu):
    """Square-integral constant, as printed and as the exact integral.

    Returns ``(printed, exact)`` where ``printed`` is
    |mu|^(-1/(2 alpha)) pi / (2 alpha sin(pi/(2 alpha))) and ``exact`` is
    int_0^inf (1 + |mu| t^alpha)^-2 dt = |mu|^(-1/alpha) (1 - 1/alpha) pi / (alpha sin(pi/alpha)).
    The two differ; both are exposed on purpose.
    """
    _check_kappa_args(alpha, mu)
    m = abs(mu)
    printed = m ** (-1.0 / (2 * alpha)) * math.pi / (2 * alpha * math.sin(math.pi / (2 * alpha)))
    exact = m ** (-1.0 / alpha) * (1.0 - 1.0 / alpha) * math.pi / (alpha * math.sin(math.pi / alpha))
    return printed, exact


def _check_kappa_args(alpha, mu):
    if not (math.isfinite(alpha) and 1.0 < alpha <= 2.0):
        raise InvalidArgument(f"alpha must lie in (1, 2], got {alpha}")
    if not (math.isfinite(mu) and mu < 0):
        raise InvalidArgument(f"mu must be negative, got {mu}")


VARIANTS = ("paper_literal", "quadrature_exact")


def contraction_terms(alpha, mu, C, M, k0, L, b, variant="paper_literal"):
    if variant not in VARIANTS:
        raise InvalidArgument(f"variant must be one of {VARIANTS}")
    k1 = kappa1(alpha, mu)
    printed, exact = kappa2(alpha, mu)
    k2 = printed if variant == "paper_literal" else exact
    cm2 = (C * M) ** 2
    return (5.0 * k0 ** 2, 5.0 * cm2 * L * k1 ** 2 * (1.0 + b), 20.0 * L * cm2 * k2)


def contraction_constant(model: ModelSpec, variant="paper_literal") -> float:
    """Theta = 5 k0^2 + 5 (CM)^2 L kappa1^2 (1 + b) + 20 L (CM)^2 kappa2."""
    s = model.sectorial
    co = model.coefficients
    return float(sum(contraction_terms(s.alpha, s.mu, s.C, s.M, co.k0, co.L,
                                       big_jump_intensity(model.noise), variant)))


def check_contraction(model: ModelSpec, variant="paper_literal"):
    theta = contraction_constant(model, variant)
    return theta < 1.0, 1.0 - theta


# ---------------------------------------------------------------------------
# analytic preset constants


def preset_constants(co: CoefficientSet, noise: LevySpec, d) -> dict:
    """Lipschitz constants implied by the preset forms (squared, except h)."""
    marks = noise.mark_array()
    big = noise.big_mask()
    rates = np.asarray(noise.rates)

    def sup_c(role):
        p = co.preset(role)
        return p.profile.sup_bound() if p.kind == "linear" else 0.0

    def jump_sum(role, side):
        p = co.preset(role)
        return float(sum(rates[k] * p.rho(marks[k]) ** 2 for k in np.flatnonzero(side)))

    load = co.loading(d, noise.dim)
    q_load = float(np.max((load ** 2) @ np.asarray(noise.Q_diag))) if d else 0.0
    return {
        "h": sup_c("h"),
        "f": sup_c("f") ** 2,
        "g": sup_c("g") ** 2 * q_load,
        "F": sup_c("F") ** 2 * jump_sum("F", ~big),
        "G": sup_c("G") ** 2 * jump_sum("G", big),
    }


# ---------------------------------------------------------------------------
# validation


def _segment_pairs(rng, n, m, d):
    """Constant-vs-zero pairs first (they attain Lambda's Lipschitz bound), then random pairs."""
    n_const = max(1, n // 4)
    phi = rng.standard_normal((n, m, d))
    psi = rng.standard_normal((n, m, d))
    psi[:n_const] = 0.0
    phi[:n_const] = rng.standard_normal((n_const, 1, d))
    return phi, psi


def sup_norm(seg):
    """Grid sup-norm of segments shaped (..., m, d)."""
    return np.max(np.linalg.norm(np.asarray(seg), axis=-1), axis=-1)


def role_quotient(model: ModelSpec, role, t, phi, psi):
    """Squared Lipschitz quotient of one coefficient at time t for one segment pair."""
    co = model.coefficients
    p = co.preset(role)
    noise = model.noise
    denom = sup_norm(phi - psi) ** 2
    if denom == 0:
        return 0.0
    if role in ("h", "f"):
        num = np.sum((p.vector(t, phi) - p.vector(t, psi)) ** 2)
    elif role == "g":
        load = co.loading(model.dim, noise.dim)
        diff = p.matrix(t, phi, load) - p.matrix(t, psi, load)
        num = float(np.sum(diff ** 2 * np.asarray(noise.Q_diag)[None, :]))
    else:
        side = noise.big_mask() if role == "G" else ~noise.big_mask()
        marks = noise.mark_array()
        num = sum(noise.rates[k] * np.sum((p.jump(t, phi, marks[k]) - p.jump(t, psi, marks[k])) ** 2)
                  for k in np.flatnonzero(side))
    return float(num / denom)


def zero_residual(model: ModelSpec, role, t, m):
    co = model.coefficients
    p = co.preset(role)
    zero = np.zeros((m, model.dim))
    if role in ("h", "f"):
        out = p.vector(t, zero)
    elif role == "g":
        out = p.matrix(t, zero, co.loading(model.dim, model.noise.dim))
    else:
        marks = model.noise.mark_array()
        out = np.array([p.jump(t, zero, u) for u in marks]) if len(marks) else np.zeros(1)
    return float(np.max(np.abs(out))) if np.size(out) else 0.0


def validate_hypotheses(model: ModelSpec, sample_budget=400, seed=0, m=9, t_max=None) -> ValidationReport:
    """Check the sector, the neutral contraction bound, zero-at-zero and empirical Lipschitz quotients.

    Quotients are sampled on ``sample_budget`` (segment pair, time) draws, with
    times including 0; declared constants are authoritative and the sampled
    quotients can only falsify them.
    """
    if sample_budget < 100:
        raise InvalidArgument("sample_budget must be >= 100")
    model.check_dimensions()
    co = model.coefficients
    rep = ValidationReport("hypothesis check")
    rep.extend(check_sectorial(model.sectorial), prefix="sector: ")
    rep.add("0 < k0 < 1", 0.0 < co.k0 < 1.0, co.k0, "(0, 1)")
    rep.add("0 < L < inf", 0.0 < co.L < math.inf, co.L, "(0, inf)")
    rep.add("trace Q finite", math.isfinite(model.noise.trace_Q), model.noise.trace_Q)

    rng = np.random.default_rng(seed)
    if t_max is None:
        t_max = 20.0 * max(co.sap_omega, model.omega)
    times = np.concatenate([[0.0], rng.uniform(0.0, t_max, sample_budget - 1)])
    phi, psi = _segment_pairs(rng, sample_budget, m, model.dim)

    zero_t = np.concatenate([[0.0], times[1:32]])
    for role in ROLES:
        res = max(zero_residual(model, role, t, m) for t in zero_t)
        rep.add(f"{role}(t, 0) = 0", res < 1e-12, res, 1e-12)

    analytic = preset_constants(co, model.noise, model.dim)
    for role in ROLES:
        q = max(role_quotient(model, role, t, a, b) for t, a, b in zip(times, phi, psi))
        limit = co.k0 ** 2 if role == "h" else co.L
        rep.add(f"{role} Lipschitz quotient <= {'k0^2' if role == 'h' else 'L'}",
                q <= limit * (1 + 1e-12), q, limit)
        bound = analytic[role] ** 2 if role == "h" else analytic[role]
        rep.add(f"{role} preset bound <= declared", bound <= limit * (1 + 1e-12), bound, limit,
                detail="analytic constant of the preset form")
    return rep
