r"""Two-parameter Mittag-Leffler function on the real axis.

.. math::

    E_{\alpha,\beta}(z) = \sum_{k \ge 0} \frac{z^k}{\Gamma(\alpha k + \beta)}

Two evaluation regimes are used:

* the Taylor series, summed in extended precision (``mpmath``) with a working
  precision chosen from the size of the largest term, so that cancellation on
  the negative axis cannot eat the result;
* for :math:`z \le -z_{switch}` the large-argument expansion

  .. math::

      E_{\alpha,\beta}(z) \approx \frac{2}{\alpha}\,\mathrm{Re}\big[\zeta^{1-\beta} e^{\zeta}\big]
          - \sum_{k=1}^{K} \frac{z^{-k}}{\Gamma(\beta - \alpha k)},
      \qquad \zeta = |z|^{1/\alpha} e^{i\pi/\alpha},

  valid for :math:`1 < \alpha \le 2` (the exponential part is absent for
  :math:`\alpha < 1` and is the single real residue :math:`e^z` for
  :math:`\alpha = \beta = 1`).  The algebraic part is divergent, so it is
  truncated before its smallest term, and the regime is only accepted when
  twice that term is below :data:`ASYMPTOTIC_TOL`.  Otherwise the series is used.

:class:`MittagLefflerTable` is a fast double-precision evaluator of
:math:`x \mapsto E_{\alpha,\beta}(-x)` built from the exact routine (piecewise
Chebyshev interpolation up to the point where the asymptotic regime becomes
accurate, the asymptotic expansion beyond).  The solver uses it for all kernel
values.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import rgamma

from ._accel import NUMBA_ENABLED, njit
from .errors import FracSapError, InvalidArgument

Z_SWITCH = 5.0
ASYMPTOTIC_TOL = 1e-15
BOUNDARY_TOL = 1e-9
_ASYM_TERMS = 400


def _check_params(alpha, beta):
    for name, v in (("alpha", alpha), ("beta", beta)):
        if not math.isfinite(v):
            raise InvalidArgument(f"{name} must be finite, got {v!r}")
    if not 0.0 < alpha <= 2.0:
        raise InvalidArgument(f"alpha must lie in (0, 2], got {alpha}")
    if beta <= 0.0:
        raise InvalidArgument(f"beta must be positive, got {beta}")


# ---------------------------------------------------------------------------
# series regime


class _SeriesCoefficients:
    """Growing cache of 1/Gamma(alpha*k + beta) as integer mantissa/shift pairs.

    Each coefficient is stored as (m, e) with c = m * 2**-e and m carrying
    ``prec`` bits (``dps`` decimal digits plus guard bits), so the series can
    be summed in exact integer arithmetic without losing the tiny tail terms.
    """

    def __init__(self, alpha, beta, dps):
        self.alpha = alpha
        self.beta = beta
        self.dps = dps
        self.prec = int(math.ceil(dps * math.log2(10.0))) + 16
        self.values = []

    def get(self, n):
        if len(self.values) < n:
            with mpmath.workdps(self.dps + 10):
                a = mpmath.mpf(self.alpha)
                b = mpmath.mpf(self.beta)
                for k in range(len(self.values), n):
                    man, exp = mpmath.frexp(mpmath.rgamma(a * k + b))
                    self.values.append((int(mpmath.nint(mpmath.ldexp(man, self.prec))),
                                        self.prec - int(exp)))
        return self.values


@lru_cache(maxsize=64)
def _series_coefficients(alpha, beta, dps):
    return _SeriesCoefficients(alpha, beta, dps)


def _series_dps(alpha, x, extra=0):
    # largest term of the series is roughly exp(|z|**(1/alpha))
    peak_digits = x ** (1.0 / alpha) / math.log(10.0) if x > 1.0 else 0.0
    dps = 25 + int(math.ceil(peak_digits)) + extra
    return 5 * int(math.ceil(dps / 5))


def ml_series(alpha, beta, z, extra_dps=0):
    """Taylor series of E_{alpha,beta}(z) in extended precision.

    Summation stops once past the largest term and the current term is below
    1e-22 relative to max(1, |partial sum|); beyond the peak the term ratio is
    decreasing, so the omitted tail is bounded by a geometric series.
    """
    x = abs(z)
    dps = _series_dps(alpha, x, extra_dps)
    coeffs = _series_coefficients(alpha, beta, dps)
    prec = coeffs.prec
    k_peak = int(x ** (1.0 / alpha) / alpha) + 2 if x > 0 else 0
    num, den = float(z).as_integer_ratio()
    zfix = (num << prec) // den
    tol_shift = 73  # 2**-73 ~ 1e-22
    total = 0
    power = 1 << prec
    k = 0
    chunk = 64
    while True:
        c = coeffs.get(k + chunk)
        for kk in range(k, k + chunk):
            m, e = c[kk]
            term = (power * m) >> e
            total += term
            power = (power * zfix) >> prec
            if kk > k_peak and abs(term) <= max(1 << (prec - tol_shift), abs(total) >> tol_shift):
                return total / (1 << prec)
        k += chunk
        if k > 100000:  # pragma: no cover - defensive
            raise FracSapError("Mittag-Leffler series failed to converge")


# ---------------------------------------------------------------------------
# asymptotic regime


@lru_cache(maxsize=64)
def asymptotic_coefficients(alpha, beta, n=_ASYM_TERMS):
    """1/Gamma(beta - alpha*k) for k = 1..n (zero at the poles of Gamma)."""
    k = np.arange(1, n + 1, dtype=float)
    c = rgamma(beta - alpha * k)
    c[~np.isfinite(c)] = 0.0
    c.flags.writeable = False
    return c


def _exp_kind(alpha, beta):
    """0: no exponential part, 1: single real residue, 2: conjugate pair, -1: unsupported."""
    if alpha < 1.0:
        return 0
    if alpha == 1.0:
        return 1 if beta == 1.0 else -1
    return 2


def ml_asymptotic(alpha, beta, z):
    """Large negative-argument expansion of E_{alpha,beta}(z).

    Returns ``(value, error_bound)``; ``error_bound`` is twice the first
    omitted term of the algebraic part, or ``inf`` if the expansion does not
    apply to (alpha, beta).
    """
    if z >= 0:
        raise InvalidArgument("asymptotic regime is implemented for z < 0 only")
    kind = _exp_kind(alpha, beta)
    if kind < 0:
        return math.nan, math.inf
    return _asymptotic_scalar(float(alpha), float(beta), float(-z), kind,
                              asymptotic_coefficients(alpha, beta))


@njit
def _asymptotic_scalar(alpha, beta, x, kind, coeffs):
    value = 0.0
    if kind == 2:
        r = x ** (1.0 / alpha)
        ang = math.pi / alpha
        zeta = complex(r * math.cos(ang), r * math.sin(ang))
        # zeta**(1 - beta) on the principal branch
        w = cmath.exp((1.0 - beta) * cmath.log(zeta) + zeta)
        value = 2.0 / alpha * w.real
    elif kind == 1:
        value = x ** (1.0 - beta) * math.exp(-x)
    inv = -1.0 / x
    power = 1.0
    prev = np.inf
    alg = 0.0
    bound = 0.0
    for k in range(coeffs.shape[0]):
        power *= inv
        c = coeffs[k]
        if c == 0.0:
            continue
        term = power * c
        mag = abs(term)
        if mag > prev:
            bound = 2.0 * prev
            break
        alg += term
        prev = mag
        bound = 2.0 * mag
        if mag < 1e-20:
            break
    return value - alg, bound


# ---------------------------------------------------------------------------
# public scalar entry point


def ml_eval(alpha, beta, z, z_switch=Z_SWITCH):
    """Evaluate E_{alpha,beta}(z) for real z.

    Accurate to an absolute 1e-12 (in practice ~1e-15) wherever the function
    is O(1).  Raises :class:`InvalidArgument` for non-finite input or
    parameters outside 0 < alpha <= 2, beta > 0.
    """
    alpha = float(alpha)
    beta = float(beta)
    z = float(z)
    _check_params(alpha, beta)
    if not math.isfinite(z):
        raise InvalidArgument(f"z must be finite, got {z!r}")
    if z == 0.0:
        return 1.0 / math.gamma(beta)
    if z <= -z_switch:
        value, bound = ml_asymptotic(alpha, beta, z)
        if bound <= ASYMPTOTIC_TOL:
            _regimes_agree(alpha, beta, float(z_switch))
            return value
    return ml_series(alpha, beta, z)


@lru_cache(maxsize=256)
def _regimes_agree(alpha, beta, z_switch):
    """Cross-check both regimes once per parameter pair on [-2 z_switch, -z_switch]."""
    for z in np.linspace(-2.0 * z_switch, -z_switch, 5):
        value, bound = ml_asymptotic(alpha, beta, z)
        if bound <= ASYMPTOTIC_TOL:
            _boundary_check(alpha, beta, float(z), value)
    return True


def _boundary_check(alpha, beta, z, value):
    ref = ml_series(alpha, beta, z)
    if abs(ref - value) <= BOUNDARY_TOL:
        return
    ref = ml_series(alpha, beta, z, extra_dps=30)
    if abs(ref - value) > BOUNDARY_TOL:
        raise FracSapError(
            f"Mittag-Leffler regimes disagree at z={z}: series {ref!r}, "
            f"asymptotic {value!r}"
        )


def ml_eval_array(alpha, beta, z):
    """Elementwise :func:`ml_eval` (slow; use :class:`MittagLefflerTable` in loops)."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    for idx, v in np.ndenumerate(z):
        out[idx] = ml_eval(alpha, beta, v)
    return out


# ---------------------------------------------------------------------------
# fast table


def _find_asymptotic_start(alpha, beta, ds):
    kind = _exp_kind(alpha, beta)
    if kind < 0:
        raise InvalidArgument(
            f"no large-argument expansion for alpha={alpha}, beta={beta}; "
            "table evaluation is unavailable"
        )
    coeffs = asymptotic_coefficients(alpha, beta)
    s = 1.0
    while True:
        ok = all(
            _asymptotic_scalar(alpha, beta, (s + j * ds) ** alpha, kind, coeffs)[1]
            <= ASYMPTOTIC_TOL
            for j in range(4)
        )
        if ok and s ** alpha >= Z_SWITCH:
            return s
        s += ds
        if s > 400:  # pragma: no cover - defensive
            raise FracSapError("asymptotic regime never becomes accurate")


class MittagLefflerTable:
    """Fast evaluator of ``x -> E_{alpha,beta}(-x)`` for ``x >= 0``.

    Panels are uniform in ``x`` on [0, 1] and uniform in ``s = x**(1/alpha)``
    beyond, up to the point where the asymptotic expansion is accurate to
    :data:`ASYMPTOTIC_TOL`; each panel holds a Chebyshev interpolant in ``x``
    built from :func:`ml_series`.  Construction costs about a second; use
    :func:`get_table` to share instances.
    """

    def __init__(self, alpha, beta=1.0, ds=0.5, nodes=22):
        _check_params(float(alpha), float(beta))
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.kind = _exp_kind(self.alpha, self.beta)
        s_max = _find_asymptotic_start(self.alpha, self.beta, ds)
        edges = list(np.linspace(0.0, 1.0, 5))
        s = 1.0 + ds
        while s < s_max + 0.5 * ds:
            edges.append(s ** self.alpha)
            s += ds
        self.edges = np.asarray(edges)
        self.x_max = float(self.edges[-1])
        self.asym = asymptotic_coefficients(self.alpha, self.beta)
        cheb = np.cos(np.pi * (np.arange(nodes) + 0.5) / nodes)
        coefs = np.empty((len(self.edges) - 1, nodes))
        for p in range(len(self.edges) - 1):
            lo, hi = self.edges[p], self.edges[p + 1]
            xs = 0.5 * (lo + hi) + 0.5 * (hi - lo) * cheb
            vals = np.array([ml_series(self.alpha, self.beta, -x) for x in xs])
            coefs[p] = np.polynomial.chebyshev.chebfit(cheb, vals, nodes - 1)
        self.coefs = coefs

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or not np.all(np.isfinite(x)):
            raise InvalidArgument("table arguments must be finite and >= 0")
        flat = np.ascontiguousarray(x.ravel())
        out = np.empty_like(flat)
        table_eval(flat, self.edges, self.coefs, self.alpha, self.beta,
                   self.kind, self.asym, out)
        return out.reshape(x.shape)

    def kernel_args(self):
        """Arrays the compiled solver kernels need to evaluate the table."""
        return self.edges, self.coefs, self.alpha, self.beta, self.kind, self.asym


@lru_cache(maxsize=32)
def get_table(alpha, beta=1.0):
    return MittagLefflerTable(alpha, beta)


@njit
def _table_point(x, edges, coefs, alpha, beta, kind, asym):
    n_panels = coefs.shape[0]
    if x >= edges[n_panels]:
        return _asymptotic_scalar(alpha, beta, x, kind, asym)[0]
    p = np.searchsorted(edges, x, side="right") - 1
    if p >= n_panels:
        p = n_panels - 1
    lo = edges[p]
    hi = edges[p + 1]
    u = (2.0 * x - lo - hi) / (hi - lo)
    # Clenshaw
    c = coefs[p]
    b1 = 0.0
    b2 = 0.0
    for k in range(c.shape[0] - 1, 0, -1):
        b1, b2 = 2.0 * u * b1 - b2 + c[k], b1
    return u * b1 - b2 + c[0]


@njit
def _table_eval_numba(x, edges, coefs, alpha, beta, kind, asym, out):
    for i in range(x.shape[0]):
        out[i] = _table_point(x[i], edges, coefs, alpha, beta, kind, asym)


def _table_eval_numpy(x, edges, coefs, alpha, beta, kind, asym, out):
    n_panels = coefs.shape[0]
    inside = x < edges[n_panels]
    xi = x[inside]
    p = np.clip(np.searchsorted(edges, xi, side="right") - 1, 0, n_panels - 1)
    lo = edges[p]
    hi = edges[p + 1]
    u = (2.0 * xi - lo - hi) / (hi - lo)
    c = coefs[p]
    b1 = np.zeros_like(xi)
    b2 = np.zeros_like(xi)
    for k in range(c.shape[1] - 1, 0, -1):
        b1, b2 = 2.0 * u * b1 - b2 + c[:, k], b1
    out[inside] = u * b1 - b2 + c[:, 0]
    for i in np.flatnonzero(~inside):
        out[i] = _asymptotic_scalar(alpha, beta, x[i], kind, asym)[0]


table_eval = _table_eval_numba if NUMBA_ENABLED else _table_eval_numpy
