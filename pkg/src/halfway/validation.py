"""Validation checks comparing closed forms, integral oracles and samplers.

Each check returns a :class:`CheckRecord`; :func:`run_validation` assembles
them into a :class:`ValidationReport`.  Nothing here depends on wall-clock
time except the ``runtime`` fields, so two runs with the same seed produce
identical reports once those are dropped.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .analytic import (
    DIRECT_CDF_LIMIT,
    HalfwayParams,
    _tail_mass,
    excursion_marginal_density,
    halfway_cdf,
    halfway_density,
    halfway_quantile,
    hitting_time_cdf,
    tail_constant,
)
from .quadrature import (
    cumulative_integral,
    halfway_density_oracle_excursion,
    halfway_density_oracle_killed,
    integrate_adaptive,
)
from .samplers import PathConfig, RngStream, sample_batch, sample_excursion_at, sample_tau
from .stats import kolmogorov_q, ks_statistic

SCHEMA_VERSION = 1

GRID_U = (0.1, 0.25, 0.5, 0.75, 0.9)
GRID_X = (0.5, 1.0, 2.0)
GRID_NY = 40
KS_CRITICAL = 1.95
N_STREAMS = 8


def grid_pairs():
    return [(u, x) for u in GRID_U for x in GRID_X]


def grid_y(x, n=GRID_NY):
    return x * np.logspace(-2.0, 2.0, n)


@dataclass
class CheckRecord:
    name: str
    params: dict
    observed: float
    threshold: float
    passed: bool
    runtime: float = 0.0
    details: dict = field(default_factory=dict)


@dataclass
class ValidationReport:
    seed: int
    mode: str
    checks: list
    overall_pass: bool
    version: str = __version__
    schema_version: int = SCHEMA_VERSION

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "version": self.version,
            "seed": self.seed,
            "mode": self.mode,
            "checks": [asdict(c) for c in self.checks],
            "overall_pass": self.overall_pass,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data):
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {data.get('schema_version')!r}")
        checks = [CheckRecord(**c) for c in data["checks"]]
        return cls(
            seed=data["seed"],
            mode=data["mode"],
            checks=checks,
            overall_pass=data["overall_pass"],
            version=data["version"],
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def without_timing(self):
        d = self.to_dict()
        for c in d["checks"]:
            c.pop("runtime", None)
        return d


def sub_seed(seed, tag):
    """Independent 63-bit seed for check ``tag`` derived from the master seed."""
    ss = np.random.SeedSequence([int(seed), int(tag)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        rec = fn(*args, **kwargs)
        rec.runtime = time.perf_counter() - t0
        return rec

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _rel(a, b):
    return abs(a - b) / abs(b)


# --------------------------------------------------------------------------
# analytic and oracle checks


@_timed
def check_three_way_agreement(tol=1e-6, runtime_limit=60.0):
    """Closed form vs the lifetime-mixture oracle vs the Bessel-bridge oracle."""
    t0 = time.perf_counter()
    worst = 0.0
    where = None
    for u, x in grid_pairs():
        params = HalfwayParams(x, u)
        for y in grid_y(x):
            closed = halfway_density(params, y)
            killed = halfway_density_oracle_killed(params, y)
            excursion = halfway_density_oracle_excursion(params, y)
            err = max(_rel(killed, closed), _rel(excursion, closed), _rel(killed, excursion))
            if err > worst:
                worst, where = err, {"u": u, "x": x, "y": float(y)}
    elapsed = time.perf_counter() - t0
    return CheckRecord(
        name="three_way_density_agreement",
        params={"u": list(GRID_U), "x": list(GRID_X), "y": "40 log-spaced in [0.01x, 100x]",
                "runtime_limit": runtime_limit},
        observed=worst,
        threshold=tol,
        passed=bool(worst <= tol and elapsed <= runtime_limit),
        details={"worst_at": where},
    )


def total_mass(params: HalfwayParams):
    split = DIRECT_CDF_LIMIT * params.x
    head = integrate_adaptive(lambda s: halfway_density(params, s), 0.0, split, 1e-12).value
    return head + _tail_mass(params, split, 1e-12)


@_timed
def check_normalization(tol=1e-8):
    worst = max(abs(total_mass(HalfwayParams(x, u)) - 1.0) for u, x in grid_pairs())
    return CheckRecord(
        name="normalization",
        params={"u": list(GRID_U), "x": list(GRID_X)},
        observed=worst,
        threshold=tol,
        passed=bool(worst <= tol),
    )


@_timed
def check_scale_invariance(tol=1e-12):
    worst = 0.0
    for u, x in grid_pairs():
        y = grid_y(x)
        p = halfway_density(HalfwayParams(x, u), y)
        p1 = halfway_density(HalfwayParams(1.0, u), y / x) / x
        worst = max(worst, float(np.max(np.abs(p - p1) / p)))
    return CheckRecord(
        name="scale_invariance",
        params={"u": list(GRID_U), "x": list(GRID_X)},
        observed=worst,
        threshold=tol,
        passed=bool(worst <= tol),
    )


@_timed
def check_tail_law(tol=1e-4, y_over_x=1e3):
    worst = 0.0
    for u, x in grid_pairs():
        params = HalfwayParams(x, u)
        y = y_over_x * x
        worst = max(worst, abs(y * y * halfway_density(params, y) / tail_constant(params) - 1.0))
    return CheckRecord(
        name="tail_law",
        params={"u": list(GRID_U), "x": list(GRID_X), "y_over_x": y_over_x},
        observed=worst,
        threshold=tol,
        passed=bool(worst <= tol),
    )


@_timed
def check_quantile_roundtrip(tol=1e-8, levels=(0.01, 0.1, 0.5, 0.9, 0.99)):
    worst = 0.0
    for u, x in grid_pairs():
        params = HalfwayParams(x, u)
        for q in levels:
            worst = max(worst, abs(halfway_cdf(params, halfway_quantile(params, q)) - q))
    return CheckRecord(
        name="cdf_quantile_roundtrip",
        params={"u": list(GRID_U), "x": list(GRID_X), "q": list(levels)},
        observed=worst,
        threshold=tol,
        passed=bool(worst <= tol),
    )


@_timed
def check_ks_p_value(lam=1.358, target=0.05, tol=0.002):
    q = kolmogorov_q(lam)
    return CheckRecord(
        name="ks_p_value_sanity",
        params={"lambda": lam, "target": target},
        observed=q,
        threshold=tol,
        passed=bool(abs(q - target) <= tol),
    )


# --------------------------------------------------------------------------
# sampler checks


@_timed
def check_tau_sampler(seed, n=100_000, x=1.0):
    s = sub_seed(seed, 5)
    draws = sample_tau(RngStream(s, 0), x, size=n)
    rep = ks_statistic(draws, lambda t: hitting_time_cdf(x, t))
    return CheckRecord(
        name="tau_sampler_ks",
        params={"x": x, "n": n, "seed": s},
        observed=rep.scaled,
        threshold=KS_CRITICAL,
        passed=bool(rep.scaled <= KS_CRITICAL),
        details={"d_n": rep.d_n, "p_value": rep.p_value},
    )


def excursion_cdf(x, u, T):
    """CDF of the Bessel-bridge marginal, by cumulative quadrature of its density."""

    def cdf(y):
        y = np.asarray(y, dtype=float)
        return np.clip(
            cumulative_integral(lambda s: excursion_marginal_density(x, u, T, s), 0.0, y.ravel(), 1e-11),
            0.0, 1.0,
        ).reshape(y.shape)

    return cdf


@_timed
def check_excursion_sampler(seed, n=100_000, x=1.0, u=0.5, T=1.0):
    s = sub_seed(seed, 6)
    draws = sample_excursion_at(RngStream(s, 0), x, u, T, size=n)
    rep = ks_statistic(draws, excursion_cdf(x, u, T))
    return CheckRecord(
        name="excursion_sampler_ks",
        params={"x": x, "u": u, "T": T, "n": n, "seed": s},
        observed=rep.scaled,
        threshold=KS_CRITICAL,
        passed=bool(rep.scaled <= KS_CRITICAL),
        details={"d_n": rep.d_n, "p_value": rep.p_value},
    )


@_timed
def check_exact_sampler(seed, n=100_000, threads=1, runtime_limit=300.0):
    t0 = time.perf_counter()
    s = sub_seed(seed, 7)
    per_pair = []
    for u, x in grid_pairs():
        params = HalfwayParams(x, u)
        batch = sample_batch(params, n, "exact", seed=s, n_streams=N_STREAMS, threads=threads)
        rep = ks_statistic(batch.values, lambda y: halfway_cdf(params, y))
        per_pair.append({"u": u, "x": x, "scaled_ks": rep.scaled})
    worst = max(p["scaled_ks"] for p in per_pair)
    elapsed = time.perf_counter() - t0
    return CheckRecord(
        name="exact_sampler_ks",
        params={"u": list(GRID_U), "x": list(GRID_X), "n": n, "seed": s, "n_streams": N_STREAMS,
                "runtime_limit": runtime_limit},
        observed=worst,
        threshold=KS_CRITICAL,
        passed=bool(worst <= KS_CRITICAL and elapsed <= runtime_limit),
        details={"per_pair": per_pair},
    )


def path_ks(params, dt, bridge, seed, n_uncensored, t_max, threads=1):
    """KS distance of the first ``n_uncensored`` path-simulated draws."""
    cfg = PathConfig(dt=dt, t_max=t_max, bridge_correction=bridge)
    # censoring at t_max=1e4 is under 1%; 2% headroom is always enough
    n_req = int(math.ceil(n_uncensored * 1.02))
    batch = sample_batch(params, n_req, "path", cfg, seed=seed, n_streams=N_STREAMS, threads=threads)
    if batch.values.size < n_uncensored:
        raise RuntimeError("too many censored paths")
    vals = batch.values[:n_uncensored]
    return ks_statistic(vals, lambda y: halfway_cdf(params, y)).d_n, batch.n_censored


@_timed
def check_path_sampler(seed, threads=1, n=20_000, t_max=1e4, ladder=(1e-1, 1e-2, 1e-3),
                       d_tol=0.02):
    """Three sub-criteria for the Euler path simulator at (u=0.5, x=1)."""
    params = HalfwayParams(1.0, 0.5)
    s = sub_seed(seed, 8)
    on, off, cens = {}, {}, {}
    for dt in ladder:
        on[dt], cens[dt] = path_ks(params, dt, True, s, n, t_max, threads)
        off[dt], _ = path_ks(params, dt, False, s, n, t_max, threads)
    finest = ladder[-1]
    ks_on = [on[dt] for dt in ladder]
    decreasing = all(a > b for a, b in zip(ks_on, ks_on[1:]))
    correction_helps = all(on[dt] <= off[dt] for dt in ladder)
    return CheckRecord(
        name="path_sampler",
        params={"u": 0.5, "x": 1.0, "n_uncensored": n, "t_max": t_max, "ladder": list(ladder),
                "seed": s, "n_streams": N_STREAMS},
        observed=on[finest],
        threshold=d_tol,
        passed=bool(on[finest] <= d_tol and decreasing and correction_helps),
        details={
            "ks_bridge_on": [on[dt] for dt in ladder],
            "ks_bridge_off": [off[dt] for dt in ladder],
            "censored_bridge_on": [cens[dt] for dt in ladder],
            "finest_within_tolerance": bool(on[finest] <= d_tol),
            "strictly_decreasing": bool(decreasing),
            "correction_no_worse": bool(correction_helps),
        },
    )


def expected_censored_fraction(x, t_max):
    return 1.0 - hitting_time_cdf(x, t_max)


@_timed
def check_censoring(seed, threads=1, n=100_000, x=1.0, t_max=1e6, dt=0.1, tol=3e-4):
    """Censored fraction of the path simulator against P(tau > t_max).

    With the bridge correction the killing time is accurate to one step, so a
    coarse ``dt`` measures the same fraction at a fraction of the cost.
    """
    s = sub_seed(seed, 9)
    params = HalfwayParams(x, 0.5)
    cfg = PathConfig(dt=dt, t_max=t_max, bridge_correction=True)
    batch = sample_batch(params, n, "path", cfg, seed=s, n_streams=N_STREAMS, threads=threads)
    frac = batch.n_censored / n
    expected = expected_censored_fraction(x, t_max)
    return CheckRecord(
        name="censoring_calibration",
        params={"x": x, "t_max": t_max, "dt": dt, "n": n, "seed": s, "n_streams": N_STREAMS},
        observed=frac,
        threshold=tol,
        passed=bool(abs(frac - expected) <= tol),
        details={"expected": expected, "n_censored": batch.n_censored},
    )


# --------------------------------------------------------------------------


def quick_checks():
    return [
        check_three_way_agreement,
        check_normalization,
        check_scale_invariance,
        check_tail_law,
        check_quantile_roundtrip,
        check_ks_p_value,
    ]


def full_checks(seed, threads):
    return [
        lambda: check_tau_sampler(seed),
        lambda: check_excursion_sampler(seed),
        lambda: check_exact_sampler(seed, threads=threads),
        lambda: check_path_sampler(seed, threads=threads),
        lambda: check_censoring(seed, threads=threads),
    ]


def run_validation(seed=42, full=False, threads=1, progress=None) -> ValidationReport:
    """Run the quick (analytic + oracle) checks, plus the sampler checks if ``full``."""
    checks = list(quick_checks())
    if full:
        checks += full_checks(seed, threads)
    records = []
    for check in checks:
        rec = check()
        records.append(rec)
        if progress is not None:
            progress(rec)
    return ValidationReport(
        seed=int(seed),
        mode="full" if full else "quick",
        checks=records,
        overall_pass=all(r.passed for r in records),
    )
