"""Closed-form densities for Brownian motion observed at a fraction of its lifetime.

A Brownian motion started at ``x > 0`` is killed when it first reaches zero,
at time ``tau``.  This module evaluates the law of ``B(u * tau)`` for
``0 < u < 1`` together with the auxiliary densities it is built from:

* ``hitting_time_density`` / ``hitting_time_cdf``: the law of ``tau``;
* ``killed_transition_density``: the transition density of the killed motion;
* ``excursion_marginal_density``: the one-time marginal of the 3-d Bessel
  bridge from ``x`` to ``0`` over ``[0, T]``;
* ``halfway_density`` and its CDF / quantile / tail constant.

All functions accept numpy arrays for the continuous argument and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

U_MIN = 1e-12
U_MAX = 1.0 - 1e-12

# Below this exponent exp() underflows to 0 in double precision.
_EXP_FLOOR = -745.0

# halfway_cdf integrates (0, y] directly up to this multiple of x, and uses
# the complement of the tail integral beyond it.
DIRECT_CDF_LIMIT = 100.0

CDF_TOL = 1e-11


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a density."""


@dataclass(frozen=True)
class HalfwayParams:
    """Start point ``x > 0`` and lifetime fraction ``u`` in (0, 1)."""

    x: float
    u: float

    def __post_init__(self):
        x, u = float(self.x), float(self.u)
        if not (math.isfinite(x) and x > 0):
            raise DomainError(f"x must be positive and finite, got {self.x!r}")
        if not (U_MIN <= u <= U_MAX):
            raise DomainError(f"u must lie in [{U_MIN}, {U_MAX}], got {self.u!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)


def _check_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")


def _check_u(u):
    if not (U_MIN <= u <= U_MAX):
        raise DomainError(f"u must lie in [{U_MIN}, {U_MAX}], got {u!r}")


def _as_array(name, value, *, strict=False):
    arr = np.asarray(value, dtype=float)
    bad = (arr <= 0) if strict else (arr < 0)
    if np.any(bad) or np.any(np.isnan(arr)):
        kind = "positive" if strict else "nonnegative"
        raise DomainError(f"{name} must be {kind}")
    return arr


def _scalar_or_array(arr):
    return float(arr) if arr.ndim == 0 else arr


def _safe_exp(arg):
    arg = np.asarray(arg, dtype=float)
    return np.where(arg <= _EXP_FLOOR, 0.0, np.exp(np.maximum(arg, _EXP_FLOOR)))


def normal_cdf(z):
    """Standard normal CDF, computed through erfc to keep the lower tail accurate."""
    return 0.5 * special.erfc(-np.asarray(z, dtype=float) / math.sqrt(2.0))


def hitting_time_density(x, t):
    """Density of the first hitting time of 0 for a Brownian motion started at x.

    f(x; t) = x / sqrt(2 pi t^3) * exp(-x^2 / 2t)
    """
    _check_positive("x", float(x))
    t = _as_array("t", t, strict=True)
    with np.errstate(over="ignore"):
        out = x / np.sqrt(2.0 * np.pi * t**3) * _safe_exp(-(x * x) / (2.0 * t))
    return _scalar_or_array(out)


def hitting_time_cdf(x, t):
    """P(tau <= t) = 2 Phi(-x / sqrt(t)) = erfc(x / sqrt(2t))."""
    _check_positive("x", float(x))
    t = _as_array("t", t)
    with np.errstate(divide="ignore"):
        out = np.where(t == 0, 0.0, special.erfc(x / np.sqrt(2.0 * np.where(t == 0, 1.0, t))))
    return _scalar_or_array(out)


def _one_minus_exp(z):
    # 1 - exp(-z) for z >= 0 without cancellation
    return -np.expm1(-z)


def killed_transition_density(x, t, y):
    """Transition density of Brownian motion killed at 0.

    Density of ``B_t`` on the event that the motion stayed positive on
    ``[0, t]``.  Evaluated as
    ``(2 pi t)^(-1/2) exp(-(y-x)^2 / 2t) (1 - exp(-2xy/t))``, which is exactly
    symmetric in ``x`` and ``y``.
    """
    x = _as_array("x", x, strict=True)
    t = _as_array("t", t, strict=True)
    y = _as_array("y", y)
    d = y - x
    gauss = _safe_exp(-(d * d) / (2.0 * t)) / np.sqrt(2.0 * np.pi * t)
    out = gauss * _one_minus_exp(2.0 * (x * y) / t)
    return _scalar_or_array(out)


def excursion_marginal_density(x, u, T, y):
    """Density at time ``u*T`` of a 3-d Bessel bridge from ``x`` to 0 over ``[0, T]``.

    This is the law of a Brownian motion from ``x`` conditioned to first hit
    zero exactly at ``T``, observed at ``u*T``.  The bridge mean is
    ``m = x(1-u)`` and the Gaussian variance is ``v = T u (1-u)``; the density
    is ``y / (m sqrt(2 pi v)) * [exp(-(y-m)^2/2v) - exp(-(y+m)^2/2v)]``.
    """
    x = float(x)
    u = float(u)
    _check_positive("x", x)
    _check_u(u)
    T = _as_array("T", T, strict=True)
    if not np.all(np.isfinite(T)):
        raise DomainError("T must be finite")
    y = _as_array("y", y)
    m = x * (1.0 - u)
    v = T * u * (1.0 - u)
    d = y - m
    gauss = _safe_exp(-(d * d) / (2.0 * v)) / np.sqrt(2.0 * np.pi * v)
    out = (y / m) * gauss * _one_minus_exp(2.0 * x * y / (T * u))
    return _scalar_or_array(out)


def halfway_density(params: HalfwayParams, y):
    """Density of ``B(u*tau)`` at ``y``.

    p(u,x;y) = 4 sqrt(u(1-u)) x y^2 /
               (pi [(y-x)^2 (1-u) + y^2 u] [(y+x)^2 (1-u) + y^2 u])
    """
    x, u = params.x, params.u
    y = _as_array("y", y)
    w = 1.0 - u
    c = 4.0 * math.sqrt(u * w) * x / math.pi
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        # near: y^2 / (lo * hi) as (y/lo)(y/hi)
        lo = (y - x) ** 2 * w + y * y * u
        hi = (y + x) ** 2 * w + y * y * u
        near = c * (y / lo) * (y / hi)
        # far: divide through by y^2 so that huge y cannot overflow
        r = x / y
        far = c / (y * ((1.0 - r) ** 2 * w + u)) / (y * ((1.0 + r) ** 2 * w + u))
    out = np.where(y == 0, 0.0, np.where(y < x, near, far))
    return _scalar_or_array(out)


def tail_constant(params: HalfwayParams) -> float:
    """lim y^2 p(u,x;y) as y -> infinity, i.e. 4 x sqrt(u(1-u)) / pi."""
    return 4.0 * params.x * math.sqrt(params.u * (1.0 - params.u)) / math.pi


def _tail_mass(params: HalfwayParams, y0, tol):
    """P(B(u tau) > y0), integrated in s = x/y over (0, x/y0]."""
    from .quadrature import integrate_adaptive

    x = params.x

    def g(s):
        return halfway_density(params, x / s) * x / (s * s)

    return integrate_adaptive(g, 0.0, x / y0, tol).value


def halfway_cdf(params: HalfwayParams, y, tol=CDF_TOL):
    """P(B(u tau) <= y), by quadrature of ``halfway_density``.

    Scalars go through one adaptive integral; arrays are integrated
    cumulatively between sorted points, which is much cheaper for large
    samples.
    """
    from .quadrature import cumulative_integral, integrate_adaptive

    y = _as_array("y", y)
    x = params.x
    split = DIRECT_CDF_LIMIT * x

    if y.ndim == 0:
        yv = float(y)
        if yv == 0:
            return 0.0
        if math.isinf(yv):
            return 1.0
        if yv <= split:
            res = integrate_adaptive(lambda s: halfway_density(params, s), 0.0, yv, tol)
            return min(1.0, res.value)
        return max(0.0, 1.0 - _tail_mass(params, yv, tol))

    flat = y.ravel()
    out = np.empty_like(flat)
    near = flat <= split
    if np.any(near):
        out[near] = cumulative_integral(lambda s: halfway_density(params, s), 0.0, flat[near], tol)
    far = ~near
    if np.any(far):
        with np.errstate(divide="ignore"):
            s_pts = x / flat[far]

        def g(s):
            return halfway_density(params, x / s) * x / (s * s)

        out[far] = 1.0 - cumulative_integral(g, 0.0, s_pts, tol)
    return np.clip(out, 0.0, 1.0).reshape(y.shape)


class QuantileError(RuntimeError):
    """Raised when the CDF cannot be bracketed."""


def halfway_quantile(params: HalfwayParams, q, xtol=1e-10, max_expansions=1000):
    """Inverse of ``halfway_cdf`` by bracket expansion and bisection."""
    q = float(q)
    if not (0.0 < q < 1.0):
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    x = params.x
    lo, hi = x * q, x / (1.0 - q)
    f_lo = halfway_cdf(params, lo)
    n = 0
    while f_lo > q:
        hi, lo = lo, lo / 2.0
        f_lo = halfway_cdf(params, lo)
        n += 1
        if n > max_expansions:
            raise QuantileError(f"could not bracket quantile {q}")
    while halfway_cdf(params, hi) < q:
        lo, hi = hi, hi * 2.0
        n += 1
        if n > max_expansions:
            raise QuantileError(f"could not bracket quantile {q}")
    while hi - lo > xtol * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if halfway_cdf(params, mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
