"""Asian call prices E[(I_t - a)^+] for the integral I_t of a geometric Brownian motion.

The underlying is exp(sigma B_s + (nu - 1/2) sigma^2 s), so ``drift = 0``
is the martingale case.  Prices are plain expectations: no discounting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .estimators import (
    DEFAULT_CONFIG,
    EstimateWithCI,
    IdentityReport,
    SamplingConfig,
    compare,
    heavy_tail_flag,
)
from .paths import simulate_batch


@dataclass(frozen=True)
class OptionSpec:
    strike: float
    horizon: float
    drift: float = 0.0
    volatility: float = 1.0

    def __post_init__(self):
        for name in ("strike", "horizon", "volatility"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if not math.isfinite(self.drift):
            raise ValueError("drift must be finite")


@dataclass(frozen=True)
class Canonical:
    """Unit-volatility equivalent: ``price(original) = scale * price(spec)``."""

    spec: OptionSpec
    scale: float


def canonicalize(spec: OptionSpec) -> Canonical:
    """Time change s -> sigma^2 s.

    The sigma-integral over [0, t] equals 1/sigma^2 times the unit-volatility
    integral over [0, sigma^2 t], so the strike is multiplied by sigma^2 and
    the resulting price by 1/sigma^2.
    """
    v2 = spec.volatility**2
    if v2 == 1.0:
        return Canonical(spec, 1.0)
    unit = OptionSpec(spec.strike * v2, spec.horizon * v2, spec.drift, 1.0)
    return Canonical(unit, 1.0 / v2)


def _count(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return int(n)


def price_direct(spec: OptionSpec, n: int = 100_000, config: Optional[SamplingConfig] = None,
                 *, time_change: bool = True) -> EstimateWithCI:
    """Sample mean of the payoff.

    With ``time_change=False`` the sigma-path is simulated on the original
    clock instead of the canonical one.
    """
    config = config or DEFAULT_CONFIG
    n = _count(n)
    if time_change:
        canon = canonicalize(spec)
        target, scale = canon.spec, canon.scale
    else:
        target, scale = spec, 1.0
    batch = simulate_batch(
        target.horizon, n, steps=config.steps, seed=config.seed, stream=config.stream,
        scheme=config.scheme, drifts=(target.drift,), volatility=target.volatility,
        threads=config.threads,
    )
    payoff = np.maximum(batch.integral(target.drift) - target.strike, 0.0)
    return EstimateWithCI.from_samples(payoff).affine(0.0, scale)


def price_identity(spec: OptionSpec, n: int = 100_000,
                   config: Optional[SamplingConfig] = None) -> EstimateWithCI:
    """t - a + a^2 E[(a + A_t)^-1 exp(2 M_t / (a + A_t) - 2/a)] on the canonical clock.

    Only the martingale case (drift 0) has this closed form.
    """
    config = config or DEFAULT_CONFIG
    canon = canonicalize(spec)
    s = canon.spec
    if s.drift != 0:
        raise ValueError("the change-of-measure price is only available for drift 0")
    batch = simulate_batch(
        s.horizon, _count(n), steps=config.steps, seed=config.seed, stream=config.stream,
        scheme=config.scheme, threads=config.threads,
    )
    a = s.strike
    denom = a + batch.integral(0.0)
    weight = np.exp(2.0 * batch.martingale / denom - 2.0 / a) / denom
    core = EstimateWithCI.from_samples(weight)
    return core.affine(s.horizon - a, a * a).affine(0.0, canon.scale)


def price_check(spec: OptionSpec, n: int = 100_000,
                config: Optional[SamplingConfig] = None) -> IdentityReport:
    """Direct price (stream s) against the identity price (stream s+1)."""
    config = config or DEFAULT_CONFIG
    lhs = price_direct(spec, n, config)
    rhs = price_identity(spec, n, config.paired())
    canon = canonicalize(spec).spec
    return compare("asian_call", lhs, rhs, flagged=heavy_tail_flag(canon.horizon, canon.strike),
                   t=spec.horizon, a=spec.strike, nu=spec.drift, sigma=spec.volatility)
