"""Random sampling of the hitting time, the Bessel-bridge marginal and B(u*tau).

Two routes to ``B(u*tau)`` are provided:

* ``sample_halfway_exact`` draws the lifetime ``T`` exactly and then the
  position of a 3-d Bessel bridge from ``x`` to 0 over ``[0, T]`` at ``u*T``;
* ``simulate_path_halfway`` runs an Euler scheme until the first crossing of
  zero and then replays the same random numbers to find the path value at
  ``u * tau_hat``.

Randomness comes from :class:`RngStream`, a pair of numpy generators keyed by
``(seed, stream_id)``.  The main generator drives the Gaussian increments and
can be replayed from a saved state; the auxiliary generator supplies every
other draw so that replay never disturbs it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np

from .analytic import DomainError, HalfwayParams, _check_positive, _check_u

_MAIN, _AUX = 0, 1


class RngStream:
    """Replayable random stream identified by ``(seed, stream_id)``."""

    def __init__(self, seed: int, stream_id: int = 0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if stream_id < 0:
            raise ValueError("stream_id must be nonnegative")
        self.seed = seed
        self.stream_id = stream_id
        self.main = self._generator(_MAIN)
        self.aux = self._generator(_AUX)
        self._initial = (self.main.bit_generator.state, self.aux.bit_generator.state)

    def _generator(self, sub):
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, sub))
        return np.random.Generator(np.random.PCG64(ss))

    def reset(self):
        """Rewind both generators to their initial state."""
        self.main.bit_generator.state = self._initial[0]
        self.aux.bit_generator.state = self._initial[1]

    def checkpoint(self):
        return self.main.bit_generator.state

    def replay_from(self, state):
        """A fresh generator reproducing the main sequence from ``state``."""
        gen = np.random.Generator(np.random.PCG64())
        gen.bit_generator.state = state
        return gen

    def normal(self, size=None):
        return self.main.standard_normal(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


# --------------------------------------------------------------------------
# exact samplers


def _nonzero_normals(gen, n):
    z = gen.standard_normal(n)
    zero = z == 0.0
    while np.any(zero):
        z[zero] = gen.standard_normal(int(zero.sum()))
        zero = z == 0.0
    return z


def tau_from_normal(x, z):
    """Hitting time of 0 from ``x`` as ``(x / z)^2`` for a standard normal ``z``."""
    r = x / z
    return r * r


def sample_tau(stream: RngStream, x, size=None):
    """Draw first hitting times of 0 for Brownian motion started at ``x``."""
    _check_positive("x", float(x))
    n = 1 if size is None else int(size)
    t = tau_from_normal(float(x), _nonzero_normals(stream.main, n))
    return float(t[0]) if size is None else t


def excursion_from_draws(x, u, T, xi, theta):
    """Bessel-bridge position at ``u*T`` from a normal ``xi`` and a chi^2_2 ``theta``.

    The bridge runs from ``x`` to 0 over ``[0, T]``.  Its position is
    ``b * sqrt((xi + a)^2 + theta)`` with ``a = x sqrt((1-u)/(T u))`` and
    ``b = sqrt((1-u) T u)``.
    """
    w = 1.0 - u
    a = x * np.sqrt(w / (T * u))
    b = np.sqrt(w * T * u)
    s = xi + a
    return b * np.sqrt(s * s + theta)


def _excursion_draws(stream, x, u, T, n):
    xi = stream.main.standard_normal(n)
    theta = 2.0 * stream.main.standard_exponential(n)
    return excursion_from_draws(x, u, T, xi, theta)


def sample_excursion_at(stream: RngStream, x, u, T, size=None):
    """Draw the position at ``u*T`` of a 3-d Bessel bridge from ``x`` to 0 over ``[0, T]``."""
    x, u, T = float(x), float(u), float(T)
    _check_positive("x", x)
    _check_u(u)
    _check_positive("T", T)
    n = 1 if size is None else int(size)
    r = _excursion_draws(stream, x, u, T, n)
    return float(r[0]) if size is None else r


def sample_halfway_exact(stream: RngStream, params: HalfwayParams, size=None):
    """Draw ``B(u*tau)`` exactly: lifetime first, then the bridge marginal.

    Every step is homogeneous in ``x``, so for a power-of-two factor ``c`` the
    draws at ``c*x`` are bit-identical to ``c`` times the draws at ``x``.
    """
    n = 1 if size is None else int(size)
    T = tau_from_normal(params.x, _nonzero_normals(stream.main, n))
    r = _excursion_draws(stream, params.x, params.u, T, n)
    return float(r[0]) if size is None else r


# --------------------------------------------------------------------------
# path simulation


@dataclass(frozen=True)
class PathConfig:
    dt: float = 1e-3
    t_max: float = 1e6
    bridge_correction: bool = True
    record_every: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        if not (math.isfinite(self.t_max) and self.t_max >= self.dt):
            raise ValueError(f"t_max must be finite and >= dt, got {self.t_max!r}")
        if self.n_steps >= 2**62:
            raise ValueError("t_max / dt overflows the step counter")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be a positive integer")

    @property
    def n_steps(self) -> int:
        return max(1, int(math.floor(self.t_max / self.dt * (1.0 + 1e-12))))

    @classmethod
    def for_params(cls, params: HalfwayParams, dt=1e-3, t_max=None, bridge_correction=True):
        """Config with the default horizon ``10^6 x^2``."""
        if t_max is None:
            t_max = 1e6 * params.x**2
        return cls(dt=dt, t_max=t_max, bridge_correction=bridge_correction)


@dataclass(frozen=True)
class PathOutcome:
    hit: bool
    tau_hat: float
    value_at_u_tau: float | None
    censored: bool
    steps: int = 0


# exp(-37) is below the resolution of a 53-bit uniform
_CROSSING_CUTOFF = 37.0
_MAX_REJECTIONS = 10_000


@numba.njit(nogil=True, cache=True)
def _positive_bridge_value(aux, a, b, s1, s2):
    """Brownian bridge from ``a`` to ``b`` (both > 0) over ``s1 + s2``, at ``s1``,
    conditioned to stay positive.  Rejection from the unconditioned bridge."""
    length = s1 + s2
    mean = a + (s1 / length) * (b - a)
    sd = math.sqrt(s1 * s2 / length)
    y = mean
    for _ in range(_MAX_REJECTIONS):
        y = mean + sd * aux.standard_normal()
        if y <= 0.0:
            continue
        accept = -math.expm1(-2.0 * a * y / s1) * -math.expm1(-2.0 * y * b / s2)
        if aux.random() < accept:
            return y
    return abs(y)


@numba.njit(nogil=True, cache=True)
def _bessel_bridge_value(aux, a, length, s):
    """3-d Bessel bridge from ``a`` to 0 over ``length``, evaluated at ``s``."""
    frac = s / length
    w = 1.0 - frac
    scale_a = a * math.sqrt(w / (length * frac))
    scale_b = math.sqrt(w * length * frac)
    xi = aux.standard_normal() + scale_a
    theta = 2.0 * aux.standard_exponential()
    return scale_b * math.sqrt(xi * xi + theta)


@numba.njit(nogil=True, cache=True)
def _path_kernel(main, replay, aux, x, u, dt, n_steps, bridge):
    """One path.  Returns (hit, tau_hat, value_at_u_tau, steps)."""
    sq = math.sqrt(dt)
    b = x
    hit = False
    tau = 0.0
    k = 0
    b_last = x
    while k < n_steps:
        bn = b + sq * main.standard_normal()
        if bn <= 0.0:
            tau = k * dt + dt * b / (b - bn)
            hit = True
            b_last = b
            break
        if bridge:
            e = 2.0 * b * bn / dt
            if e < _CROSSING_CUTOFF:
                if aux.random() < math.exp(-e):
                    tau = (k + 1) * dt
                    hit = True
                    b_last = b
                    break
        b = bn
        k += 1
    if not hit:
        return False, 0.0, 0.0, k
    # tau falls in [t_k, t_{k+1}], the path is positive at t_0..t_k
    s = u * tau
    j = int(math.floor(s / dt))
    if j > k:
        j = k
    bj = x
    for _ in range(j):
        bj = bj + sq * replay.standard_normal()
    offset = s - j * dt
    if offset <= 0.0:
        return True, tau, bj, k + 1
    if j == k:
        if offset >= tau - j * dt:
            return True, tau, 0.0, k + 1
        # last grid point before the crossing: bridge down to 0 at tau
        return True, tau, _bessel_bridge_value(aux, b_last, tau - j * dt, offset), k + 1
    bj1 = bj + sq * replay.standard_normal()
    rest = dt - offset
    if rest <= 0.0:
        return True, tau, bj1, k + 1
    return True, tau, _positive_bridge_value(aux, bj, bj1, offset, rest), k + 1


def simulate_path_halfway(stream: RngStream, params: HalfwayParams, config: PathConfig) -> PathOutcome:
    """Simulate one Euler path to its first crossing of 0 and read it at ``u * tau_hat``.

    Crossing of a step with a negative endpoint is located by linear
    interpolation; with ``bridge_correction`` a step whose endpoints are both
    positive is still killed with the Brownian-bridge crossing probability
    ``exp(-2 B_k B_{k+1} / dt)``, at the step's right end.  The path is not
    stored: the increments up to the grid interval containing ``u * tau_hat``
    are regenerated from a checkpoint of the main generator, and the value
    inside that interval is drawn from the bridge law given its endpoints,
    conditioned to stay positive (in the crossing interval the bridge ends at
    0 at ``tau_hat``).
    """
    state = stream.checkpoint()
    replay = stream.replay_from(state)
    hit, tau, value, steps = _path_kernel(
        stream.main, replay, stream.aux, params.x, params.u,
        float(config.dt), config.n_steps, bool(config.bridge_correction),
    )
    if not hit:
        return PathOutcome(False, float(config.n_steps * config.dt), None, True, steps)
    return PathOutcome(True, float(tau), float(value), False, steps)


# --------------------------------------------------------------------------
# batches


@dataclass
class SampleBatch:
    values: np.ndarray
    params: HalfwayParams
    method: str
    seed: int
    n_streams: int
    n_requested: int
    n_censored: int
    config: PathConfig | None = None
    per_stream: list = field(default_factory=list)

    def metadata(self):
        meta = {
            "x": self.params.x,
            "u": self.params.u,
            "method": self.method,
            "seed": self.seed,
            "n_streams": self.n_streams,
            "n_requested": self.n_requested,
            "n_censored": self.n_censored,
            "n_values": int(self.values.size),
        }
        if self.config is not None:
            meta.update(
                dt=self.config.dt,
                t_max=self.config.t_max,
                bridge_correction=self.config.bridge_correction,
            )
        return meta


def partition(n, n_streams):
    """Draw counts per stream: as even as possible, earlier streams take the remainder."""
    base, extra = divmod(n, n_streams)
    return [base + (1 if i < extra else 0) for i in range(n_streams)]


def _run_stream(params, method, config, seed, stream_id, count):
    stream = RngStream(seed, stream_id)
    if count == 0:
        return np.empty(0), 0
    if method == "exact":
        return sample_halfway_exact(stream, params, size=count), 0
    out = np.empty(count)
    kept = 0
    censored = 0
    for _ in range(count):
        res = simulate_path_halfway(stream, params, config)
        if res.censored:
            censored += 1
        else:
            out[kept] = res.value_at_u_tau
            kept += 1
    return out[:kept], censored


def sample_batch(params: HalfwayParams, n, method="exact", config=None, seed=0,
                 n_streams=1, threads=1) -> SampleBatch:
    """Draw ``n`` samples split over ``n_streams`` consecutive streams.

    The result depends only on the arguments, not on ``threads``: stream
    ``i`` always produces the same draws and results are concatenated in
    stream order.
    """
    n = int(n)
    n_streams = int(n_streams)
    if n < 1:
        raise ValueError("n must be positive")
    if n_streams < 1:
        raise ValueError("n_streams must be positive")
    if method not in ("exact", "path"):
        raise ValueError(f"unknown method {method!r}")
    if method == "path" and config is None:
        config = PathConfig.for_params(params)
    counts = partition(n, n_streams)
    jobs = [(params, method, config, seed, i, c) for i, c in enumerate(counts)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            results = list(pool.map(lambda job: _run_stream(*job), jobs))
    else:
        results = [_run_stream(*job) for job in jobs]
    values = np.concatenate([r[0] for r in results])
    n_censored = sum(r[1] for r in results)
    return SampleBatch(
        values=values,
        params=params,
        method=method,
        seed=int(seed),
        n_streams=n_streams,
        n_requested=n,
        n_censored=n_censored,
        config=config if method == "path" else None,
        per_stream=[int(r[0].size) for r in results],
    )


__all__ = [
    "DomainError",
    "PathConfig",
    "PathOutcome",
    "RngStream",
    "SampleBatch",
    "excursion_from_draws",
    "partition",
    "sample_batch",
    "sample_excursion_at",
    "sample_halfway_exact",
    "sample_tau",
    "simulate_path_halfway",
    "tau_from_normal",
]
