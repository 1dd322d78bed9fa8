"""Brownian paths with exact Gaussian increments and their exponential functionals.

Brownian values on the time grid are exact; the only approximation is the
quadrature of the time integral.  Random streams are keyed by
``(seed, stream, block)`` through :class:`numpy.random.SeedSequence`, so a
block of :data:`BLOCK_PATHS` paths can be regenerated on its own and blocks
can be produced by any number of worker threads with identical output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

#: Paths per random block.  Part of the reproducibility contract: changing it
#: changes every sample.
BLOCK_PATHS = 1024

#: Drifts whose integrals are always accumulated by :func:`simulate_batch`.
#: Extra columns cost one matrix-vector product each, so the estimators share
#: one batch instead of re-simulating per drift.
STANDARD_DRIFTS = (-0.5, 0.0, 0.5, 1.0)


class Scheme(str, Enum):
    LEFT_RIEMANN = "left"
    TRAPEZOID = "trapezoid"


def _check_scheme(scheme) -> Scheme:
    try:
        return Scheme(scheme)
    except ValueError:
        raise ValueError(f"unknown quadrature scheme {scheme!r}") from None


@dataclass(frozen=True)
class PathConfig:
    """Parameters of one simulation stream.

    ``horizon == 0`` is accepted as the degenerate empty path.
    """

    horizon: float
    steps: int = 2048
    drift: float = 0.0
    seed: int = 0
    scheme: Scheme = Scheme.TRAPEZOID
    stream: int = 0

    def __post_init__(self):
        if not math.isfinite(self.horizon) or self.horizon < 0:
            raise ValueError(f"horizon must be >= 0, got {self.horizon}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "scheme", _check_scheme(self.scheme))

    @property
    def dt(self) -> float:
        return self.horizon / self.steps


@dataclass(frozen=True)
class BrownianIncrements:
    """``steps`` i.i.d. N(0, dt) draws plus the integer tag of the stream they came from."""

    values: np.ndarray
    dt: float
    tag: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def steps(self) -> int:
        return self.values.shape[-1]

    def grid_values(self) -> np.ndarray:
        """B at the grid points s_0 = 0, ..., s_n."""
        out = np.zeros(self.values.shape[:-1] + (self.steps + 1,))
        np.cumsum(self.values, axis=-1, out=out[..., 1:])
        return out

    def refine(self, rng: Optional[np.random.Generator] = None) -> "BrownianIncrements":
        """Insert Brownian-bridge midpoints, halving dt on the same Brownian path.

        Without an explicit ``rng`` the midpoint noise comes from a stream
        derived from the tag, so refinement is reproducible.
        """
        if rng is None:
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence(0x6272_6964, spawn_key=tuple(self.tag) + (self.steps,)))
            )
        z = rng.standard_normal(self.values.shape)
        half = 0.5 * self.values
        spread = 0.5 * math.sqrt(self.dt) * z
        fine = np.empty(self.values.shape[:-1] + (2 * self.steps,))
        fine[..., 0::2] = half + spread
        fine[..., 1::2] = half - spread
        return BrownianIncrements(fine, self.dt / 2, tuple(self.tag) + (self.steps,))


@dataclass(frozen=True)
class PathSample:
    """Terminal functionals of one path.

    ``ratio`` and ``girsanov_state`` always refer to the driftless integral.
    ``girsanov_state`` is ``None`` when no ``y`` was supplied or the path blew
    up (integral reached 2/y).
    """

    terminal_log: float
    martingale: float
    integral: float
    ratio: float
    drift: float = 0.0
    y: Optional[float] = None
    girsanov_state: Optional[float] = None
    blown: bool = False


def block_generator(seed: int, stream: int, block: int) -> np.random.Generator:
    """Generator for one block of paths; independent of every other (stream, block)."""
    ss = np.random.SeedSequence(seed, spawn_key=(stream, block))
    return np.random.Generator(np.random.PCG64(ss))


def brownian_increments(config: PathConfig, index: int = 0) -> BrownianIncrements:
    """Increments of path ``index`` in the stream, identical to the row used by batches."""
    if index < 0:
        raise ValueError("path index must be nonnegative")
    block, row = divmod(index, BLOCK_PATHS)
    rng = block_generator(config.seed, config.stream, block)
    # rows are filled in order, so the first row+1 rows match a full block draw
    z = rng.standard_normal((row + 1, config.steps))[row]
    z *= math.sqrt(config.dt)
    return BrownianIncrements(z, config.dt, (config.seed, config.stream, index))


def quadrature_weights(steps: int, dt: float, scheme: Scheme) -> np.ndarray:
    w = np.full(steps + 1, dt)
    if scheme is Scheme.TRAPEZOID:
        w[0] = w[-1] = 0.5 * dt
    else:
        w[-1] = 0.0
    return w


def running_integral(values: np.ndarray, dt: float, scheme: Scheme) -> np.ndarray:
    """Cumulative quadrature of grid values along the last axis, starting at 0."""
    out = np.zeros_like(values)
    if scheme is Scheme.TRAPEZOID:
        pieces = 0.5 * dt * (values[..., 1:] + values[..., :-1])
    else:
        pieces = dt * values[..., :-1]
    np.cumsum(pieces, axis=-1, out=out[..., 1:])
    return out


def functionals_from_increments(
    increments: BrownianIncrements,
    drift: float = 0.0,
    y: Optional[float] = None,
    scheme: Scheme = Scheme.TRAPEZOID,
) -> PathSample:
    """Terminal functionals for given increments.

    This is also the hook for deterministic tests (e.g. all-zero increments).
    """
    scheme = _check_scheme(scheme)
    if y is not None and not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    dt = increments.dt
    b = increments.grid_values()
    s = dt * np.arange(b.shape[-1])
    w = quadrature_weights(increments.steps, dt, scheme)
    base = np.exp(b - 0.5 * s)
    integral0 = float(base @ w)
    integral = integral0 if drift == 0 else float(base @ (w * np.exp(drift * s)))
    return _sample(float(b[-1]), s[-1], integral, integral0, drift, y)


def _sample(b_t, t, integral, integral0, drift, y) -> PathSample:
    m = math.exp(b_t - 0.5 * t)
    state = None
    blown = False
    if y is not None:
        # the quadrature sum is nondecreasing, so the terminal value decides blow-up
        blown = integral0 >= 2.0 / y
        if not blown:
            state = -m / (1.0 / y - 0.5 * integral0)
    return PathSample(
        terminal_log=b_t,
        martingale=m,
        integral=integral,
        ratio=integral0 / m,
        drift=drift,
        y=y,
        girsanov_state=state,
        blown=blown,
    )


def simulate_path(config: PathConfig, y: Optional[float] = None, *, index: int = 0) -> PathSample:
    """Simulate path ``index`` of the configured stream."""
    if y is not None and not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    if config.horizon == 0:
        return _sample(0.0, 0.0, 0.0, 0.0, config.drift, y)
    inc = brownian_increments(config, index)
    return functionals_from_increments(inc, config.drift, y, config.scheme)


@dataclass(frozen=True)
class GirsanovPath:
    """Grid values of B, M, the running integral and R up to the blow-up step."""

    times: np.ndarray
    brownian: np.ndarray
    martingale: np.ndarray
    integral: np.ndarray
    state: np.ndarray
    y: float
    blown: bool


def girsanov_path(increments: BrownianIncrements, y: float, scheme: Scheme = Scheme.TRAPEZOID) -> GirsanovPath:
    if not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    scheme = _check_scheme(scheme)
    b = increments.grid_values()
    times = increments.dt * np.arange(b.shape[-1])
    m = np.exp(b - 0.5 * times)
    a = running_integral(m, increments.dt, scheme)
    gap = 1.0 / y - 0.5 * a
    blown = bool(np.any(gap <= 0))
    with np.errstate(divide="ignore"):
        r = np.where(gap > 0, -m / np.where(gap > 0, gap, 1.0), np.nan)
    return GirsanovPath(times, b, m, a, r, y, blown)


def sde_residual(increments: BrownianIncrements, y: float, scheme: Scheme = Scheme.TRAPEZOID) -> float:
    """|R_t - (-y + sum R dB - 1/2 sum R^2 dt)| with left-point (Ito) sums.

    Returns nan for a path that blew up before t.
    """
    p = girsanov_path(increments, y, scheme)
    if p.blown:
        return math.nan
    r = p.state
    dt = increments.dt
    ito = np.dot(r[:-1], increments.values) - 0.5 * dt * np.dot(r[:-1], r[:-1])
    return abs(r[-1] - (-y + ito))


@dataclass(frozen=True)
class PathBatch:
    """Terminal functionals of paths ``0 .. n-1`` of a stream, as arrays.

    ``integrals`` maps a drift nu to the integral of
    exp(sigma B_s + (nu - 1/2) sigma^2 s) over [0, horizon].
    """

    horizon: float
    steps: int
    scheme: Scheme
    seed: int
    stream: int
    volatility: float
    terminal_log: np.ndarray
    integrals: dict = field(repr=False)

    @property
    def n(self) -> int:
        return self.terminal_log.shape[0]

    @property
    def martingale(self) -> np.ndarray:
        s = self.volatility
        return np.exp(s * self.terminal_log - 0.5 * s * s * self.horizon)

    def integral(self, drift: float = 0.0) -> np.ndarray:
        try:
            return self.integrals[float(drift)]
        except KeyError:
            raise KeyError(f"drift {drift} was not simulated; have {sorted(self.integrals)}") from None

    def drifted_exponential(self, drift: float) -> np.ndarray:
        """exp(sigma B_t + (nu - 1/2) sigma^2 t), the integrand at the horizon."""
        s = self.volatility
        return np.exp(s * self.terminal_log + (drift - 0.5) * s * s * self.horizon)

    @property
    def ratio(self) -> np.ndarray:
        return self.integral(0.0) / self.martingale


def _simulate_block(block, n, horizon, steps, scheme, seed, stream, volatility, drifts):
    m = min(BLOCK_PATHS, n - block * BLOCK_PATHS)
    dt = horizon / steps
    rng = block_generator(seed, stream, block)
    z = rng.standard_normal((m, steps))
    z *= math.sqrt(dt)
    np.cumsum(z, axis=1, out=z)
    terminal = z[:, -1].copy()
    s = dt * np.arange(1, steps + 1)
    z *= volatility
    z -= 0.5 * volatility**2 * s
    np.exp(z, out=z)
    w = quadrature_weights(steps, dt, scheme)
    s0 = np.concatenate(([0.0], s))
    weights = np.stack([w * np.exp(d * volatility**2 * s0) for d in drifts], axis=1)
    ints = z @ weights[1:] + weights[0]
    return terminal, ints


def simulate_batch(
    horizon: float,
    n: int,
    *,
    steps: int = 2048,
    seed: int = 0,
    stream: int = 0,
    scheme: Scheme = Scheme.TRAPEZOID,
    drifts: Iterable[float] = (),
    volatility: float = 1.0,
    threads: int = 1,
) -> PathBatch:
    """Simulate ``n`` paths and keep their terminal functionals.

    Results do not depend on ``threads``.  Identical arguments return a
    cached, read-only batch.
    """
    scheme = _check_scheme(scheme)
    config = PathConfig(horizon, steps, 0.0, seed, scheme, stream)
    if config.horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if not volatility > 0:
        raise ValueError(f"volatility must be positive, got {volatility}")
    if int(threads) != threads or threads < 1:
        raise ValueError("threads must be a positive integer")
    key_drifts = tuple(sorted(set(float(d) for d in STANDARD_DRIFTS) | set(float(d) for d in drifts)))
    return _cached_batch(float(horizon), int(n), int(steps), scheme, int(seed), int(stream), key_drifts,
                         float(volatility), int(threads))


# threads is not part of the logical key, but keeping it in the cache key lets
# callers check thread-count independence without clearing the cache.
@lru_cache(maxsize=12)
def _cached_batch(horizon, n, steps, scheme, seed, stream, drifts, volatility, threads):
    nblocks = -(-n // BLOCK_PATHS)

    def work(block):
        return _simulate_block(block, n, horizon, steps, scheme, seed, stream, volatility, drifts)

    if threads == 1 or nblocks == 1:
        parts = [work(b) for b in range(nblocks)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(nblocks)))
    terminal = np.concatenate([p[0] for p in parts])
    ints = np.concatenate([p[1] for p in parts], axis=0)
    terminal.setflags(write=False)
    integrals = {}
    for j, d in enumerate(drifts):
        col = np.ascontiguousarray(ints[:, j])
        col.setflags(write=False)
        integrals[d] = col
    return PathBatch(horizon, steps, scheme, seed, stream, volatility, terminal, integrals)


def clear_cache() -> None:
    _cached_batch.cache_clear()
