"""Closed-form ground truths: the infinite-horizon gamma law and Yor's formula."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, stats

from .estimators import (
    DEFAULT_CONFIG,
    EstimateWithCI,
    IdentityReport,
    SamplingConfig,
    compare,
)
from .paths import simulate_batch

_EPS = 1e-15
_TINY = 1e-300
_MAX_ITER = 1000


def _series_lower(a: float, x: np.ndarray) -> np.ndarray:
    """Regularized P(a, x) by the power series; use for x < a + 1."""
    ap = np.full_like(x, a)
    term = np.full_like(x, 1.0 / a)
    total = term.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(_MAX_ITER):
        ap[active] += 1.0
        term[active] *= x[active] / ap[active]
        total[active] += term[active]
        active &= np.abs(term) >= np.abs(total) * _EPS
        if not active.any():
            break
    return total * np.exp(-x + a * np.log(x) - math.lgamma(a))


def _fraction_upper(a: float, x: np.ndarray) -> np.ndarray:
    """Regularized Q(a, x) by the Legendre continued fraction (modified Lentz); x >= a + 1."""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = b + an / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= _EPS
        if not active.any():
            break
    return h * np.exp(-x + a * np.log(x) - math.lgamma(a))


def _split(a, x):
    if not (math.isfinite(a) and a > 0):
        raise ValueError(f"shape must be positive, got {a}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("x must be nonnegative")
    return float(a), x


def gammainc_lower(a: float, x) -> np.ndarray:
    """Regularized lower incomplete gamma P(a, x)."""
    a, x = _split(a, x)
    out = np.zeros_like(x)
    lo = (x > 0) & (x < a + 1)
    hi = (x >= a + 1) & np.isfinite(x)
    out[lo] = _series_lower(a, x[lo])
    out[hi] = 1.0 - _fraction_upper(a, x[hi])
    out[np.isinf(x)] = 1.0
    return out if out.ndim else float(out)


def gammainc_upper(a: float, x) -> np.ndarray:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    a, x = _split(a, x)
    out = np.ones_like(x)
    lo = (x > 0) & (x < a + 1)
    hi = (x >= a + 1) & np.isfinite(x)
    out[lo] = 1.0 - _series_lower(a, x[lo])
    out[hi] = _fraction_upper(a, x[hi])
    out[np.isinf(x)] = 0.0
    return out if out.ndim else float(out)


# ------------------------------------------------------------------- gamma law


@dataclass(frozen=True)
class GammaLawSpec:
    """int_0^inf exp(-2 B_s - mu s) ds has the law of 1 / (2 gamma), gamma ~ Gamma(mu / 2)."""

    mu: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be positive, got {self.mu}")

    @property
    def shape(self) -> float:
        return self.mu / 2


def dufresne_cdf(x, spec: GammaLawSpec):
    """P{1 / (2 gamma) <= x} = Q(mu/2, 1/(2x))."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x must be positive")
    with np.errstate(divide="ignore"):
        return gammainc_upper(spec.shape, 0.5 / x)


def dufresne_density_max(spec: GammaLawSpec) -> float:
    """Maximum of the density of 1 / (2 gamma): 2 v^(k+1) e^(-v) / Gamma(k) at v = k + 1."""
    k = spec.shape
    return 2.0 * math.exp((k + 1) * math.log(k + 1) - (k + 1) - math.lgamma(k))


def truncation_allowance(spec: GammaLawSpec, horizon: float) -> float:
    """Bound on sup_x |P{I_T <= x} - P{I_inf <= x}| for the integral truncated at T.

    I_inf = I_T + exp(-2 B_T - mu T) I' with I' an independent copy of I_inf,
    so the gap is at most P{remainder > delta} + delta * max density, for any
    delta; the bound is minimised over delta.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    k, mu, sd = spec.shape, spec.mu, 2.0 * math.sqrt(horizon)
    # expectation over gamma by quantile quadrature; small quantiles (large I')
    # dominate, so the grid is geometric near 0 and the cut-off mass is added
    q_floor = 1e-14
    q = np.geomspace(q_floor, 1.0, 4001)
    g = stats.gamma(k).ppf(q[:-1])
    dq = np.diff(q)
    log2g = np.log(2.0 * g)

    def exceed(log_delta):
        # log remainder = -2 B_T - mu T - log(2 gamma); integrand decreasing in q
        tail = stats.norm.sf((log_delta + mu * horizon + log2g) / sd)
        return float(np.dot(tail, dq)) + q_floor

    fmax = dufresne_density_max(spec)

    def bound(log_delta):
        return exceed(log_delta) + math.exp(log_delta) * fmax

    grid = np.linspace(-60.0, 0.0, 121)
    values = [bound(v) for v in grid]
    i = int(np.argmin(values))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(bound, bounds=(lo, hi), method="bounded")
    return float(min(res.fun, values[i], 1.0))


ALLOWANCE_TARGET = 1e-3


def default_horizon(spec: GammaLawSpec) -> float:
    """Start at 10/mu and double until the truncation allowance is below 1e-3."""
    horizon = 10.0 / spec.mu
    while truncation_allowance(spec, horizon) > ALLOWANCE_TARGET:
        horizon *= 2
    return horizon


def ks_statistic(samples, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance between the empirical CDF and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


KS_COEFFICIENT = 1.63  # alpha ~ 0.01
KS_MIN_SAMPLES = 1000


@dataclass(frozen=True)
class KSResult:
    statistic: float
    critical: float
    allowance: float
    n: int
    mu: float
    oracle_mu: float
    horizon: float

    @property
    def threshold(self) -> float:
        return self.critical + self.allowance

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold


def dufresne_samples(spec: GammaLawSpec, horizon: float, n: int,
                     config: Optional[SamplingConfig] = None) -> np.ndarray:
    """int_0^T exp(2 B_s - mu s) ds, which has the law of the -2 B_s version."""
    config = config or DEFAULT_CONFIG
    # exp(2 B_s + (nu - 1/2) 4 s) = exp(2 B_s - mu s)  for  nu = 1/2 - mu/4
    nu = 0.5 - spec.mu / 4.0
    batch = simulate_batch(horizon, n, steps=config.steps, seed=config.seed, stream=config.stream,
                           scheme=config.scheme, drifts=(nu,), volatility=2.0, threads=config.threads)
    return batch.integral(nu)


def dufresne_ks_check(spec: GammaLawSpec, horizon: Optional[float] = None, n: int = 100_000,
                      config: Optional[SamplingConfig] = None, *,
                      oracle: Optional[GammaLawSpec] = None) -> KSResult:
    """KS test of the truncated simulated integral against the gamma law.

    ``oracle`` (default: ``spec``) selects the law compared against, which
    allows deliberate mismatches as negative controls.
    """
    if horizon is None:
        horizon = default_horizon(spec)
    if not horizon > 0:
        raise ValueError(f"truncation horizon must be positive, got {horizon}")
    if int(n) != n or n < KS_MIN_SAMPLES:
        raise ValueError(f"n must be an integer >= {KS_MIN_SAMPLES}, got {n}")
    oracle = oracle or spec
    x = dufresne_samples(spec, horizon, int(n), config)
    d = ks_statistic(x, lambda v: dufresne_cdf(v, oracle))
    return KSResult(d, KS_COEFFICIENT / math.sqrt(n), truncation_allowance(spec, horizon),
                    int(n), spec.mu, oracle.mu, float(horizon))


# ----------------------------------------------------------------------- Yor


def yor_closed_form(u: float, t: float) -> float:
    """(1 / sqrt((1 + u^2) t)) exp(-asinh(u)^2 / (2 t))."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    return math.exp(-math.asinh(u) ** 2 / (2.0 * t)) / math.sqrt((1.0 + u * u) * t)


def yor_samples(u: float, t: float, n: int, config: Optional[SamplingConfig] = None) -> np.ndarray:
    """2 exp(-2 u^2 / A) / sqrt(A) with A the drift-1/2 integral over [0, 4t].

    Yor's integral int_0^t exp(2 B_s) ds equals A/4 after the time change
    s = v/4, which stretches the horizon to 4t.
    """
    config = config or DEFAULT_CONFIG
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    batch = simulate_batch(4.0 * t, n, steps=config.steps, seed=config.seed, stream=config.stream,
                           scheme=config.scheme, drifts=(0.5,), threads=config.threads)
    area = batch.integral(0.5)
    return 2.0 * np.exp(-2.0 * u * u / area) / np.sqrt(area)


def yor_mc_check(u: float, t: float, n: int = 100_000,
                 config: Optional[SamplingConfig] = None) -> IdentityReport:
    lhs = EstimateWithCI.from_samples(yor_samples(u, t, n, config))
    rhs = EstimateWithCI.exact(yor_closed_form(u, t))
    return compare("yor", lhs, rhs, u=u, t=t)
