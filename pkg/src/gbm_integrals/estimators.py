"""Monte Carlo estimators for the distribution, density and moment identities.

Every identity is computed two ways.  Builders such as :func:`cdf_check`
draw the left side from ``config.stream`` and the right side from
``config.stream + 1``, so the two estimates are independent and the z-score
uses the plain combined standard error.  The density pair is the exception:
both sides use the same paths (common random numbers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from .paths import Scheme, simulate_batch

MOM_BLOCKS = 32
Z_THRESHOLD = 3.0


@dataclass(frozen=True)
class SamplingConfig:
    """How paths are drawn for an estimator (everything except horizon and drift)."""

    steps: int = 2048
    seed: int = 0
    scheme: Scheme = Scheme.TRAPEZOID
    stream: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps}")
        if int(self.threads) != self.threads or self.threads < 1:
            raise ValueError(f"threads must be a positive integer, got {self.threads}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def paired(self) -> "SamplingConfig":
        """Config for the independent right-hand side of an identity."""
        return replace(self, stream=self.stream + 1)


DEFAULT_CONFIG = SamplingConfig()


def median_of_means(x: np.ndarray, blocks: int = MOM_BLOCKS) -> float:
    """Median of the means of ``blocks`` contiguous index blocks."""
    x = np.asarray(x, dtype=float)
    k = max(1, min(blocks, x.size))
    return float(np.median([b.mean() for b in np.array_split(x, k)]))


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    stderr: float
    n_samples: int
    max_sample: float
    trimmed_mean: float

    @classmethod
    def from_samples(cls, x, blocks: int = MOM_BLOCKS) -> "EstimateWithCI":
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("no samples")
        mean = float(x.mean())
        if x.size > 1 and np.any(x != x[0]):
            stderr = float(x.std(ddof=1) / math.sqrt(x.size))
        else:
            stderr = 0.0
        return cls(mean, stderr, int(x.size), float(x.max()), median_of_means(x, blocks))

    @classmethod
    def exact(cls, value: float) -> "EstimateWithCI":
        """A known value carried as a zero-error estimate."""
        return cls(float(value), 0.0, 1, float(value), float(value))

    def affine(self, offset: float, scale: float) -> "EstimateWithCI":
        """Estimate of ``offset + scale * X``."""
        return EstimateWithCI(
            offset + scale * self.mean,
            abs(scale) * self.stderr,
            self.n_samples,
            offset + scale * self.max_sample,
            offset + scale * self.trimmed_mean,
        )

    def merge(self, other: "EstimateWithCI") -> "EstimateWithCI":
        """Pool two estimates over disjoint samples.

        Mean and stderr are exact (pairwise update of the centred sums of
        squares).  The median of means cannot be pooled from summaries, so
        the merged ``trimmed_mean`` is the sample-weighted average of the two.
        """
        n1, n2 = self.n_samples, other.n_samples
        n = n1 + n2
        delta = other.mean - self.mean
        mean = self.mean + delta * n2 / n
        m2 = _centred_ss(self) + _centred_ss(other) + delta * delta * n1 * n2 / n
        stderr = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
        trimmed = (n1 * self.trimmed_mean + n2 * other.trimmed_mean) / n
        return EstimateWithCI(mean, stderr, n, max(self.max_sample, other.max_sample), trimmed)


def _centred_ss(e: EstimateWithCI) -> float:
    return e.stderr**2 * e.n_samples * (e.n_samples - 1)


@dataclass(frozen=True)
class IdentityReport:
    """Two estimates of the same quantity and their agreement verdict.

    ``flagged`` marks parameter regions where the right-hand integrand may
    have infinite variance; the z-score is then advisory.
    """

    identity_id: str
    lhs: EstimateWithCI
    rhs: EstimateWithCI
    z_score: float
    passed: bool
    threshold: float = Z_THRESHOLD
    params: Mapping[str, float] = field(default_factory=dict)
    flagged: bool = False


def z_score(lhs: EstimateWithCI, rhs: EstimateWithCI) -> float:
    se = math.hypot(lhs.stderr, rhs.stderr)
    diff = lhs.mean - rhs.mean
    if se == 0:
        return 0.0 if diff == 0 else math.copysign(math.inf, diff)
    return diff / se


def compare(identity_id: str, lhs: EstimateWithCI, rhs: EstimateWithCI, *,
            threshold: float = Z_THRESHOLD, flagged: bool = False, **params) -> IdentityReport:
    z = z_score(lhs, rhs)
    return IdentityReport(identity_id, lhs, rhs, z, abs(z) <= threshold, threshold, dict(params), flagged)


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and value > 0 and math.isfinite(value)):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def _count(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return int(n)


def _batch(t, n, config: Optional[SamplingConfig], drifts=(), paired=False):
    config = config or DEFAULT_CONFIG
    if paired:
        config = config.paired()
    return simulate_batch(
        _positive("t", t), _count(n),
        steps=config.steps, seed=config.seed, stream=config.stream,
        scheme=config.scheme, drifts=drifts, threads=config.threads,
    )


def heavy_tail_flag(t: float, a: float) -> bool:
    """True where the identity integrand's variance is not under control."""
    return a < 0.5 or t > 4


# ---------------------------------------------------------------- distribution


def cdf_direct(t: float, a: float, nu: float = 0.0, n: int = 100_000,
               config: Optional[SamplingConfig] = None) -> EstimateWithCI:
    """Empirical frequency of {A_t^(nu) <= a}."""
    a = _positive("a", a)
    batch = _batch(t, n, config, (nu,))
    return EstimateWithCI.from_samples(batch.integral(nu) <= a)


def cdf_identity(t: float, a: float, n: int = 100_000,
                 config: Optional[SamplingConfig] = None) -> EstimateWithCI:
    """Mean of exp(2 M_t / (a + A_t) - 2/a) over all paths."""
    a = _positive("a", a)
    batch = _batch(t, n, config)
    area = batch.integral(0.0)
    return EstimateWithCI.from_samples(np.exp(2.0 * batch.martingale / (a + area) - 2.0 / a))


def cdf_identity_drift(t: float, a: float, nu: float, n: int = 100_000,
                       config: Optional[SamplingConfig] = None) -> EstimateWithCI:
    """Drifted form: a^(2 nu) e^(-2/a) (a + A)^(-2 nu) exp(2 X_t / (a + A)), X_t = exp(B_t + nu t - t/2)."""
    a = _positive("a", a)
    batch = _batch(t, n, config, (nu,))
    area = batch.integral(nu)
    end = batch.drifted_exponential(nu)
    denom = a + area
    log_w = 2.0 * nu * np.log(a / denom) + 2.0 * end / denom - 2.0 / a
    return EstimateWithCI.from_samples(np.exp(log_w))


def cdf_check(t: float, a: float, nu: float = 0.0, n: int = 100_000,
              config: Optional[SamplingConfig] = None) -> IdentityReport:
    """Direct CDF (stream s) against the change-of-measure form (stream s+1)."""
    config = config or DEFAULT_CONFIG
    lhs = cdf_direct(t, a, nu, n, config)
    if nu == 0:
        rhs = cdf_identity(t, a, n, config.paired())
        ident = "cdf"
    else:
        rhs = cdf_identity_drift(t, a, nu, n, config.paired())
        ident = "cdf_drift"
    return compare(ident, lhs, rhs, flagged=heavy_tail_flag(t, a), t=t, a=a, nu=nu)


# --------------------------------------------------------------------- density


def density_event(t: float, a: float, n: int = 100_000,
                  config: Optional[SamplingConfig] = None) -> EstimateWithCI:
    """(2/a^2) times the frequency of {A_t^(0) <= a < A_t^(1)} on shared increments."""
    a = _positive("a", a)
    batch = _batch(t, n, config, (0.0, 1.0))
    event = (batch.integral(0.0) <= a) & (a < batch.integral(1.0))
    return EstimateWithCI.from_samples(event).affine(0.0, 2.0 / a**2)


def density_difference(t: float, a: float, n: int = 100_000,
                       config: Optional[SamplingConfig] = None) -> EstimateWithCI:
    """(2/a^2) (P{A_t <= a} - P{A_t / M_t <= a}) from the two marginal indicators."""
    a = _positive("a", a)
    batch = _batch(t, n, config)
    diff = (batch.integral(0.0) <= a).astype(float) - (batch.ratio <= a)
    return EstimateWithCI.from_samples(diff).affine(0.0, 2.0 / a**2)


def density_check(t: float, a: float, n: int = 100_000,
                  config: Optional[SamplingConfig] = None) -> IdentityReport:
    """Both density representations on the same paths.

    Positive correlation makes the combined-stderr z-score conservative.
    """
    lhs = density_event(t, a, n, config)
    rhs = density_difference(t, a, n, config)
    return compare("density", lhs, rhs, t=t, a=a)


def log_grid(lo: float = 0.01, hi: float = 20.0, points: int = 256) -> np.ndarray:
    return np.geomspace(lo, hi, points)


def density_curve(t: float, a_grid: Sequence[float], n: int = 100_000,
                  config: Optional[SamplingConfig] = None) -> np.ndarray:
    """density_event means on a grid of a values (one shared sample)."""
    a_grid = np.asarray(a_grid, dtype=float)
    if a_grid.ndim != 1 or np.any(a_grid <= 0):
        raise ValueError("a_grid must be a 1-d array of positive values")
    batch = _batch(t, n, config, (0.0, 1.0))
    lo = np.sort(batch.integral(0.0))
    hi = np.sort(batch.integral(1.0))
    # #{A0 <= a} - #{A1 <= a} counts the event because A0 < A1 on every path
    hits = np.searchsorted(lo, a_grid, side="right") - np.searchsorted(hi, a_grid, side="right")
    return 2.0 / a_grid**2 * hits / batch.n


def density_mass(t: float, a_grid: Optional[Sequence[float]] = None, n: int = 100_000,
                 config: Optional[SamplingConfig] = None) -> float:
    """Trapezoid integral of the event-form density over ``a_grid``."""
    grid = log_grid() if a_grid is None else np.asarray(a_grid, dtype=float)
    g = density_curve(t, grid, n, config)
    return float(np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(grid)))


# --------------------------------------------------------------------- moments


class MomentVariant(str, Enum):
    NO_DRIFT = "no_drift"          # exp(theta / int_0^t exp(B_s) ds)
    HALF_DRIFT = "half_drift"      # exp(2 theta / A_t)
    RATIO_M_OVER_A = "ratio"       # exp(theta M_t / A_t)


@dataclass(frozen=True)
class MomentEstimate:
    """Exponential-moment estimate with divergence diagnostics.

    ``running_means`` holds (n, prefix mean) at n = 2^16, 2^17, ... up to the
    sample size.  ``tail_index`` is the Hill estimate from the top
    ``tail_order`` samples; an index below 1 means an infinite mean.
    """

    theta: float
    variant: MomentVariant
    t: float
    estimate: EstimateWithCI
    running_means: tuple
    domination: float
    tail_index: float
    tail_order: int
    growth_signal: bool
    domination_signal: bool
    tail_signal: bool

    @property
    def diverging(self) -> bool:
        return self.growth_signal or self.domination_signal or self.tail_signal

    @property
    def stable(self) -> bool:
        """Running means change by less than 2% at every doubling."""
        means = [m for _, m in self.running_means]
        if len(means) < 2:
            return False
        return all(abs(b / a - 1.0) < 0.02 for a, b in zip(means, means[1:]))


RUNNING_MEAN_EXPONENTS = range(16, 21)
GROWTH_FACTOR = 1.10
DOMINATION_LEVEL = 0.5
HILL_ORDER = 1024


def hill_tail_index(x: np.ndarray, k: int = HILL_ORDER) -> float:
    """Hill estimator of the Pareto tail index from the ``k`` largest samples."""
    x = np.asarray(x, dtype=float)
    if not 1 <= k < x.size:
        raise ValueError("need 1 <= k < number of samples")
    top = np.partition(x, x.size - k - 1)[x.size - k - 1:]
    top = np.sort(top)
    if top[0] <= 0:
        raise ValueError("Hill estimator needs positive order statistics")
    gamma = float(np.mean(np.log(top[1:]) - math.log(top[0])))
    return math.inf if gamma == 0 else 1.0 / gamma


def moment_samples(t: float, theta: float, variant, n: int,
                   config: Optional[SamplingConfig] = None) -> np.ndarray:
    variant = MomentVariant(variant)
    if variant is MomentVariant.NO_DRIFT:
        batch = _batch(t, n, config, (0.5,))
        exponent = theta / batch.integral(0.5)
    elif variant is MomentVariant.HALF_DRIFT:
        batch = _batch(t, n, config)
        exponent = 2.0 * theta / batch.integral(0.0)
    else:
        batch = _batch(t, n, config)
        exponent = theta * batch.martingale / batch.integral(0.0)
    with np.errstate(over="ignore"):
        return np.exp(exponent)


def exp_moment(t: float, theta: float, variant=MomentVariant.NO_DRIFT, n: int = 2**20,
               config: Optional[SamplingConfig] = None) -> MomentEstimate:
    _positive("t", t)
    variant = MomentVariant(variant)
    x = moment_samples(t, theta, variant, n, config)
    est = EstimateWithCI.from_samples(x)
    running = tuple((2**k, float(x[: 2**k].mean())) for k in RUNNING_MEAN_EXPONENTS if 2**k <= x.size)
    means = [m for _, m in running]
    growth = len(means) >= 2 and all(b > GROWTH_FACTOR * a for a, b in zip(means, means[1:]))
    total = est.mean * est.n_samples
    domination = est.max_sample / total if total > 0 else math.nan
    dominated = bool(domination > DOMINATION_LEVEL) or not math.isfinite(est.mean)
    if x.size >= 2**16 and np.all(np.isfinite(x)):
        order = HILL_ORDER
        alpha = hill_tail_index(x, order)
        tail = alpha * (1.0 + 2.0 / math.sqrt(order)) < 1.0
    else:
        order, alpha, tail = 0, math.nan, False
    return MomentEstimate(float(theta), variant, float(t), est, running, float(domination),
                          alpha, order, bool(growth), dominated, bool(tail))


# -------------------------------------------------------------- change of measure


class MeasureFunction(str, Enum):
    ONE = "one"
    X = "x"
    X_OVER_NEG_Z = "x_over_neg_z"
    X_POW_NU = "x_pow_nu"


def _apply(kind: MeasureFunction, x, z, nu):
    if kind is MeasureFunction.ONE:
        return np.ones_like(x)
    if kind is MeasureFunction.X:
        return x
    if kind is MeasureFunction.X_OVER_NEG_Z:
        return x / -z
    return x**nu


def measure_change_check(t: float, y: float, f=MeasureFunction.ONE, n: int = 100_000,
                         config: Optional[SamplingConfig] = None, *, nu: float = 0.0) -> IdentityReport:
    """E[f(M, R); A < 2/y] against E[f(M/(1+yA/2)^2, -M/(1/y+A/2)) exp(M/(1/y+A/2) - y)]."""
    y = _positive("y", y)
    f = MeasureFunction(f)
    config = config or DEFAULT_CONFIG

    b = _batch(t, n, config)
    m, area = b.martingale, b.integral(0.0)
    alive = area < 2.0 / y
    gap = np.where(alive, 1.0 / y - 0.5 * area, 1.0)
    if f is MeasureFunction.X_OVER_NEG_Z:
        # M / (M / gap) without forming 0/0 on paths where M underflows
        lhs_vals = gap
    else:
        lhs_vals = _apply(f, m, -m / gap, nu)
    lhs = EstimateWithCI.from_samples(np.where(alive, lhs_vals, 0.0))

    b = _batch(t, n, config, paired=True)
    m, area = b.martingale, b.integral(0.0)
    denom = 1.0 / y + 0.5 * area
    x = m / (1.0 + 0.5 * y * area) ** 2
    if f is MeasureFunction.X_OVER_NEG_Z:
        fx = denom / (1.0 + 0.5 * y * area) ** 2
    else:
        fx = _apply(f, x, -m / denom, nu)
    rhs = EstimateWithCI.from_samples(fx * np.exp(m / denom - y))
    params = dict(t=t, y=y)
    if f is MeasureFunction.X_POW_NU:
        params["nu"] = nu
    return compare(f"measure_change_{f.value}", lhs, rhs, flagged=heavy_tail_flag(t, 2.0 / y), **params)


# -------------------------------------------------------------- supermartingale


@dataclass(frozen=True)
class SupermartingaleResult:
    y: float
    times: tuple
    reports: tuple
    strictly_decreasing: bool

    @property
    def passed(self) -> bool:
        return self.strictly_decreasing and all(r.passed for r in self.reports)


def supermartingale_check(y: float, times: Sequence[float], n: int = 100_000,
                          config: Optional[SamplingConfig] = None) -> SupermartingaleResult:
    """E[exp(M_t / (1/y + A_t/2))] against e^y P{A_t <= 2/y}, for each t."""
    y = _positive("y", y)
    times = tuple(float(t) for t in times)
    if not times or any(t <= 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be positive and strictly increasing")
    config = config or DEFAULT_CONFIG
    reports = []
    for t in times:
        b = _batch(t, n, config)
        lhs = EstimateWithCI.from_samples(np.exp(b.martingale / (1.0 / y + 0.5 * b.integral(0.0))))
        rhs = cdf_direct(t, 2.0 / y, 0.0, n, config.paired()).affine(0.0, math.exp(y))
        reports.append(compare("supermartingale", lhs, rhs, t=t, y=y))
    means = [r.lhs.mean for r in reports]
    decreasing = all(b < a for a, b in zip(means, means[1:]))
    return SupermartingaleResult(y, times, tuple(reports), decreasing)


# ------------------------------------------------------------------ lower tail


@dataclass(frozen=True)
class TailRow:
    a: float
    value: float
    stderr: float
    hits: int
    censored: bool


@dataclass(frozen=True)
class LowerTailProbe:
    t: float
    rows: tuple
    nondecreasing: bool


def lower_tail_probe(t: float, a_grid: Sequence[float], n: int = 100_000,
                     config: Optional[SamplingConfig] = None) -> LowerTailProbe:
    """(e^(2/a) / a) P{A_t^(1/2) <= a} on a decreasing grid.

    Grid points with no hits are censored rather than reported as zero.  The
    monotonicity verdict compares consecutive uncensored points with a
    3-sigma allowance and is only meaningful where hits are plentiful.
    """
    grid = [_positive("a", a) for a in a_grid]
    if not grid or any(b >= a for a, b in zip(grid, grid[1:])):
        raise ValueError("a_grid must be strictly decreasing")
    batch = _batch(t, n, config, (0.5,))
    area = np.sort(batch.integral(0.5))
    rows = []
    for a in grid:
        hits = int(np.searchsorted(area, a, side="right"))
        if hits == 0:
            rows.append(TailRow(a, math.nan, math.nan, 0, True))
            continue
        p = hits / batch.n
        se = math.sqrt(p * (1 - p) / (batch.n - 1)) if batch.n > 1 else 0.0
        scale = math.exp(2.0 / a - math.log(a))
        rows.append(TailRow(a, scale * p, scale * se, hits, False))
    seen = [r for r in rows if not r.censored]
    ok = all(b.value >= a.value - Z_THRESHOLD * math.hypot(a.stderr, b.stderr) for a, b in zip(seen, seen[1:]))
    return LowerTailProbe(float(t), tuple(rows), ok)


def hidden_tail_mass(t: float, a: float, u: float, n: int = 100_000,
                     config: Optional[SamplingConfig] = None) -> EstimateWithCI:
    """E[W; W > u] for W = exp(2 M_t / (a + A_t) - 2/a), computed through the other side.

    With y = 2/a the change of measure turns this into
    P{R_t < -y - log u, A_t < a}, which decays only like 1/log u.  Taking
    ``u`` as the largest sample of a right-hand estimate gives the mass that
    sample could not see.
    """
    a = _positive("a", a)
    u = _positive("u", u)
    y = 2.0 / a
    b = _batch(t, n, config)
    area, m = b.integral(0.0), b.martingale
    alive = area < a
    state = -m / np.where(alive, 0.5 * (a - area), 1.0)
    return EstimateWithCI.from_samples(alive & (state < -y - math.log(u)))
