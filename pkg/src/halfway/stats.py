"""Empirical distribution tools for checking samplers against reference CDFs.

Only CDF- and quantile-based statistics live here: the halfway law has an
infinite mean, so moment diagnostics would be meaningless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class KsReport:
    d_n: float
    n: int
    p_value: float

    @property
    def scaled(self) -> float:
        """``d_n * sqrt(n)``, the quantity compared with Kolmogorov critical values."""
        return self.d_n * math.sqrt(self.n)


def _sorted_nonempty(samples):
    arr = np.sort(np.asarray(samples, dtype=float).ravel())
    if arr.size == 0:
        raise ValueError("samples must be nonempty")
    return arr


class Ecdf:
    """Right-continuous empirical CDF: F(y) = #{samples <= y} / n."""

    def __init__(self, samples):
        self._sorted = _sorted_nonempty(samples)
        self.n = self._sorted.size

    def __call__(self, y):
        counts = np.searchsorted(self._sorted, y, side="right")
        out = counts / self.n
        return float(out) if np.ndim(out) == 0 else out


def ecdf(samples) -> Ecdf:
    return Ecdf(samples)


def ks_statistic(samples, cdf) -> KsReport:
    """One-sample Kolmogorov-Smirnov distance between ``samples`` and ``cdf``.

    ``cdf`` is called once on the sorted sample array.  The supremum is
    attained at the sample points, where it is the larger of
    ``i/n - F(y_i)`` and ``F(y_i) - (i-1)/n``.
    """
    ys = _sorted_nonempty(samples)
    n = ys.size
    f = np.asarray(cdf(ys), dtype=float)
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - f)
    d_minus = np.max(f - (i - 1) / n)
    d = float(min(1.0, max(d_plus, d_minus, 0.0)))
    return KsReport(d_n=d, n=n, p_value=ks_p_value(d, n))


def kolmogorov_q(lam, term_tol=1e-12):
    """Asymptotic Kolmogorov survival function Q(lam) = 2 sum (-1)^(k-1) exp(-2 k^2 lam^2)."""
    lam = float(lam)
    # 1 - Q(lam) < 1e-20 here, and the series would need ~1/lam terms
    if lam < 0.15:
        return 1.0
    total = 0.0
    k = 1
    sign = 1.0
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        total += sign * term
        if term < term_tol:
            break
        sign = -sign
        k += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_p_value(d_n, n) -> float:
    if not 0.0 <= d_n <= 1.0:
        raise ValueError("d_n must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be positive")
    return kolmogorov_q(d_n * math.sqrt(n))


def empirical_quantile(samples, q):
    """Nearest-rank quantile: the ceil(q n)-th smallest sample."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    ys = _sorted_nonempty(samples)
    n = ys.size
    # guard against q*n landing a hair above an integer
    rank = min(n, max(1, math.ceil(q * n - 1e-9)))
    return float(ys[rank - 1])
