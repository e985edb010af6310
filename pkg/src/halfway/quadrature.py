"""Adaptive Gauss-Kronrod quadrature and the integral oracles for the halfway density.

Integrands are called with numpy arrays of abscissae and must return arrays of
the same shape.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .analytic import (
    HalfwayParams,
    excursion_marginal_density,
    hitting_time_density,
    killed_transition_density,
)

# Kronrod 15-point nodes on [0, 1] (symmetric), with the embedded 7-point
# Gauss rule on the odd-indexed nodes.  Values from QUADPACK's qk15.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]

RULE_SIZE = 15
MAX_INTERVALS = 10_000


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool = True


class QuadratureError(RuntimeError):
    """Adaptive integration failed; ``result`` holds the best estimate."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


def _gk15(f, a, b):
    """Apply the 7/15 pair to each interval ``[a_i, b_i]`` (arrays)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    pts = mid[:, None] + half[:, None] * NODES[None, :]
    vals = np.asarray(f(pts), dtype=float)
    if vals.shape != pts.shape:
        vals = np.broadcast_to(vals, pts.shape)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError("integrand returned a non-finite value")
    k = half * (vals @ KRONROD_WEIGHTS)
    g = half * (vals @ GAUSS_WEIGHTS)
    return k, np.abs(k - g)


def integrate_adaptive(f, a, b, tol=1e-10, rel_tol=0.0, max_intervals=MAX_INTERVALS):
    """Globally adaptive Gauss-Kronrod integration of ``f`` over ``[a, b]``.

    The interval with the largest error estimate is bisected until the summed
    estimate drops below ``max(tol, rel_tol * |value|)``.  The error estimate
    is the raw Kronrod-Gauss difference, which bounds the error of the
    Kronrod value very conservatively for smooth integrands.

    Raises QuadratureError (carrying the best estimate) when ``max_intervals``
    is exhausted.
    """
    a = float(a)
    b = float(b)
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if not tol > 0:
        raise ValueError("tol must be positive")

    k, e = _gk15(f, a, b)
    value, err = float(k[0]), float(e[0])
    evals = RULE_SIZE
    # max-heap on error; the counter keeps ordering deterministic on ties
    heap = [(-err, 0, a, b, value)]
    counter = 1
    while err > max(tol, rel_tol * abs(value)):
        if len(heap) >= max_intervals:
            res = QuadResult(value, err, evals, converged=False)
            raise QuadratureError(
                f"no convergence on [{a}, {b}] after {len(heap)} intervals "
                f"(estimate {value!r}, error {err:.3g})",
                res,
            )
        neg_e, _, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # interval cannot be split further in floating point
            res = QuadResult(value, err, evals, converged=False)
            raise QuadratureError(f"interval collapsed near {mid!r}", res)
        k, e = _gk15(f, [lo, mid], [mid, hi])
        evals += 2 * RULE_SIZE
        for j, (l, h) in enumerate(((lo, mid), (mid, hi))):
            heapq.heappush(heap, (-float(e[j]), counter, l, h, float(k[j])))
            counter += 1
        # re-sum rather than update incrementally so rounding stays bounded
        value = math.fsum(item[4] for item in heap)
        err = math.fsum(-item[0] for item in heap)
    return QuadResult(value, err, evals)


def _endpoint_growth(g):
    near, nearer = 1.0 - 1e-6, 1.0 - 1e-9
    v1 = abs(float(np.asarray(g(np.array([near])))[0]))
    v2 = abs(float(np.asarray(g(np.array([nearer])))[0]))
    return v1, v2


def integrate_semi_infinite(f, a=0.0, tol=1e-10, rel_tol=0.0, scale=1.0,
                            max_intervals=MAX_INTERVALS):
    """Integrate ``f`` over ``(a, inf)`` via ``t = a + scale * (s / (1 - s))^2``.

    Squaring the usual ``s / (1 - s)`` map keeps ``1 - s ~ t^(-1/2)``
    representable far out, so tails as heavy as ``t^(-3/2)`` are integrated
    to full accuracy (they map to a bounded function).  For ``f ~ t^(-p)``
    the mapped integrand behaves like ``(1 - s)^(2p - 3)``; growth like
    ``1/(1 - s)`` or faster means ``f`` is not integrable and is rejected.
    """
    a = float(a)
    scale = float(scale)
    if not scale > 0:
        raise ValueError("scale must be positive")

    def g(s):
        s = np.asarray(s, dtype=float)
        w = 1.0 - s
        # a node can round onto s = 1 once intervals shrink to a few ulps
        inside = w > 0
        ws = np.where(inside, w, 1.0)
        r = s / ws
        jac = 2.0 * scale * r / (ws * ws)
        return np.where(inside, f(a + scale * r * r) * jac, 0.0)

    v1, v2 = _endpoint_growth(g)
    # growth over three decades of (1 - s): 10^(3(3-2p)) for f ~ t^-p
    if v2 > 300.0 * v1 and v2 > 1e-300:
        raise QuadratureError("integrand does not decay fast enough on (a, inf)")
    return integrate_adaptive(g, 0.0, 1.0, tol, rel_tol, max_intervals)


def cumulative_integral(f, a, points, tol=1e-11, max_rounds=60):
    """Return ``[int_a^p f for p in points]`` for many points at once.

    Points are sorted internally; the gaps between consecutive points are
    integrated with the 7/15 pair in vectorised batches, and any gap whose
    error estimate exceeds its share of ``tol`` is bisected.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1:
        raise ValueError("points must be one-dimensional")
    if np.any(pts < a):
        raise ValueError("points must not lie below the lower limit")
    order = np.argsort(pts, kind="stable")
    sp = pts[order]
    finite = np.isfinite(sp)
    if not np.all(finite):
        raise ValueError("points must be finite")
    edges = np.concatenate([[a], sp])
    lo_all, hi_all = edges[:-1], edges[1:]
    span = max(sp[-1] - a, np.finfo(float).tiny) if sp.size else 1.0

    totals = np.zeros(sp.size)
    live = np.flatnonzero(hi_all > lo_all)
    lo, hi, owner = lo_all[live], hi_all[live], live
    for _ in range(max_rounds):
        if owner.size == 0:
            break
        k, e = _gk15(f, lo, hi)
        ok = e <= tol * (hi - lo) / span
        # give up refining gaps too narrow to bisect further
        ok |= (hi - lo) <= 4.0 * np.spacing(np.maximum(np.abs(lo), np.abs(hi)))
        np.add.at(totals, owner[ok], k[ok])
        bad = ~ok
        mid = 0.5 * (lo[bad] + hi[bad])
        lo = np.concatenate([lo[bad], mid])
        hi = np.concatenate([mid, hi[bad]])
        owner = np.concatenate([owner[bad], owner[bad]])
    else:
        if owner.size:
            raise QuadratureError("cumulative integral did not converge")
    out = np.empty_like(pts)
    out[order] = np.cumsum(totals)
    return out


def _characteristic_scale(x, y):
    # the mixing integrands carry their mass around t ~ (x + y)^2
    return (x + y) ** 2


def halfway_density_oracle_killed(params: HalfwayParams, y, rel_tol=1e-10):
    """Halfway density as a mixture over the lifetime.

    ``p(u,x;y) = int_0^inf q(x, u t, y) f(y; t - u t) dt``: the motion is at
    ``y`` at time ``u t`` without having been killed, and from ``y`` its
    remaining lifetime is ``(1 - u) t``.
    """
    x, u = params.x, params.u
    y = float(y)
    if not y > 0:
        raise ValueError("y must be positive")

    def integrand(t):
        t = np.asarray(t, dtype=float)
        safe = np.where(t > 0, t, 1.0)
        val = killed_transition_density(x, u * safe, y) * hitting_time_density(y, (1.0 - u) * safe)
        return np.where(t > 0, val, 0.0)

    return integrate_semi_infinite(
        integrand, 0.0, tol=1e-300, rel_tol=rel_tol, scale=_characteristic_scale(x, y)
    ).value


def halfway_density_oracle_excursion(params: HalfwayParams, y, rel_tol=1e-10):
    """Halfway density as the Bessel-bridge marginal averaged over the lifetime.

    ``p(u,x;y) = int_0^inf q_{uT}(x; y) f(x; T) dT``.
    """
    x, u = params.x, params.u
    y = float(y)
    if not y > 0:
        raise ValueError("y must be positive")

    def integrand(T):
        T = np.asarray(T, dtype=float)
        safe = np.where(T > 0, T, 1.0)
        val = excursion_marginal_density(x, u, safe, y) * hitting_time_density(x, safe)
        return np.where(T > 0, val, 0.0)

    return integrate_semi_infinite(
        integrand, 0.0, tol=1e-300, rel_tol=rel_tol, scale=_characteristic_scale(x, y)
    ).value
