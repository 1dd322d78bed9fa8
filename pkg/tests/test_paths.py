import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbm_integrals.paths import (
    BLOCK_PATHS,
    BrownianIncrements,
    PathConfig,
    Scheme,
    brownian_increments,
    clear_cache,
    functionals_from_increments,
    girsanov_path,
    quadrature_weights,
    running_integral,
    sde_residual,
    simulate_batch,
    simulate_path,
)

DETERMINISTIC_INTEGRAL = 2.0 * (1.0 - math.exp(-0.5))  # int_0^1 e^(-s/2) ds


def zero_increments(steps, horizon=1.0):
    return BrownianIncrements(np.zeros(steps), horizon / steps)


def test_degenerate_horizon():
    p = simulate_path(PathConfig(0.0))
    assert p.integral == 0.0
    assert p.martingale == 1.0
    assert p.terminal_log == 0.0


def test_negative_horizon_rejected():
    with pytest.raises(ValueError):
        PathConfig(-1.0)


@pytest.mark.parametrize("bad", [dict(steps=0), dict(steps=2.5), dict(seed=-1), dict(scheme="midpoint")])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        PathConfig(1.0, **bad)


def test_zero_noise_trapezoid_is_second_order():
    errs = [abs(functionals_from_increments(zero_increments(k)).integral - DETERMINISTIC_INTEGRAL)
            for k in (16, 32, 64)]
    assert errs[0] < 1e-3
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine == pytest.approx(4.0, rel=0.02)


def test_zero_noise_left_riemann_is_first_order():
    errs = [abs(functionals_from_increments(zero_increments(k), scheme=Scheme.LEFT_RIEMANN).integral
                - DETERMINISTIC_INTEGRAL) for k in (64, 128, 256)]
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine == pytest.approx(2.0, rel=0.05)


def test_zero_noise_drift_one():
    # integrand e^(s/2)
    p = functionals_from_increments(zero_increments(2048), drift=1.0)
    assert p.integral == pytest.approx(2.0 * (math.exp(0.5) - 1.0), abs=1e-7)


def test_same_seed_bit_identical():
    cfg = PathConfig(1.0, 64, 0.5, seed=3)
    assert simulate_path(cfg, y=1.0, index=5) == simulate_path(cfg, y=1.0, index=5)
    assert simulate_path(cfg, index=5) != simulate_path(cfg, index=6)


def test_streams_differ():
    a = brownian_increments(PathConfig(1.0, 32, seed=1, stream=0))
    b = brownian_increments(PathConfig(1.0, 32, seed=1, stream=1))
    assert not np.array_equal(a.values, b.values)


def test_batch_rows_match_single_paths():
    n = BLOCK_PATHS + 10
    batch = simulate_batch(1.0, n, steps=64, seed=5, drifts=(0.25,))
    for i in (0, 17, BLOCK_PATHS - 1, BLOCK_PATHS, n - 1):
        p = simulate_path(PathConfig(1.0, 64, 0.25, seed=5), index=i)
        assert batch.terminal_log[i] == pytest.approx(p.terminal_log, abs=1e-12)
        assert batch.integral(0.25)[i] == pytest.approx(p.integral, rel=1e-12)
        assert batch.integral(0.0)[i] == pytest.approx(p.ratio * p.martingale, rel=1e-12)


def test_batch_independent_of_threads():
    clear_cache()
    one = simulate_batch(1.0, 3 * BLOCK_PATHS + 5, steps=32, seed=2, threads=1)
    four = simulate_batch(1.0, 3 * BLOCK_PATHS + 5, steps=32, seed=2, threads=4)
    assert one is not four
    assert np.array_equal(one.terminal_log, four.terminal_log)
    for d in one.integrals:
        assert np.array_equal(one.integral(d), four.integral(d))


def test_batch_prefix_stable():
    # growing n only appends paths
    small = simulate_batch(1.0, 100, steps=32, seed=4)
    large = simulate_batch(1.0, 3000, steps=32, seed=4)
    assert np.array_equal(small.integral(0.0), large.integral(0.0)[:100])


def test_batch_read_only():
    b = simulate_batch(1.0, 10, steps=8, seed=0)
    with pytest.raises(ValueError):
        b.terminal_log[0] = 1.0
    with pytest.raises(ValueError):
        b.integral(0.0)[0] = 1.0


def test_batch_missing_drift():
    b = simulate_batch(1.0, 10, steps=8, seed=0)
    with pytest.raises(KeyError):
        b.integral(0.3)


@pytest.mark.parametrize("kwargs", [dict(horizon=0.0, n=5), dict(horizon=1.0, n=0), dict(horizon=1.0, n=5, volatility=0.0),
                                    dict(horizon=1.0, n=5, threads=0)])
def test_batch_validation(kwargs):
    horizon, n = kwargs.pop("horizon"), kwargs.pop("n")
    with pytest.raises(ValueError):
        simulate_batch(horizon, n, steps=8, **kwargs)


def test_batch_moments():
    b = simulate_batch(1.0, 50_000, steps=128, seed=8)
    m = b.martingale
    assert abs(m.mean() - 1.0) < 3 * m.std() / math.sqrt(m.size)
    a = b.integral(0.0)
    assert abs(a.mean() - 1.0) < 3 * a.std() / math.sqrt(a.size)
    # E[A^(nu)] = (e^(nu t) - 1) / nu
    a1 = b.integral(1.0)
    assert abs(a1.mean() - (math.e - 1.0)) < 3 * a1.std() / math.sqrt(a1.size)


def test_volatility_is_a_time_change():
    # int_0^t exp(s B - s^2 u/2) du over [0, t] equals (1/s^2) times the
    # unit integral over [0, s^2 t]; compare means
    s = 2.0
    direct = simulate_batch(0.25, 40_000, steps=256, seed=1, volatility=s).integral(0.0)
    unit = simulate_batch(1.0, 40_000, steps=256, seed=1, stream=1).integral(0.0) / s**2
    se = math.hypot(direct.std(), unit.std()) / math.sqrt(direct.size)
    assert abs(direct.mean() - unit.mean()) < 3 * se
    assert direct.mean() == pytest.approx(0.25, rel=0.02)


def test_scheme_gap_shrinks_like_dt():
    gaps = []
    for steps in (64, 128, 256):
        trap = simulate_batch(1.0, 2000, steps=steps, seed=6, scheme=Scheme.TRAPEZOID).integral(0.0)
        left = simulate_batch(1.0, 2000, steps=steps, seed=6, scheme=Scheme.LEFT_RIEMANN).integral(0.0)
        gaps.append(np.mean(np.abs(trap - left)))
    for coarse, fine in zip(gaps, gaps[1:]):
        assert 1.6 < coarse / fine < 2.5


def test_quadrature_weights():
    assert quadrature_weights(4, 0.25, Scheme.TRAPEZOID).sum() == pytest.approx(1.0)
    w = quadrature_weights(4, 0.25, Scheme.LEFT_RIEMANN)
    assert w[-1] == 0.0 and w.sum() == pytest.approx(1.0)


def test_running_integral_ends_at_quadrature():
    x = np.exp(np.linspace(0, 1, 9))
    for scheme in Scheme:
        w = quadrature_weights(8, 0.125, scheme)
        assert running_integral(x, 0.125, scheme)[-1] == pytest.approx(x @ w)


def test_refine_keeps_coarse_path():
    inc = brownian_increments(PathConfig(1.0, 16, seed=9))
    fine = inc.refine()
    assert fine.steps == 32 and fine.dt == pytest.approx(inc.dt / 2)
    assert np.allclose(fine.grid_values()[::2], inc.grid_values(), atol=1e-13)
    assert np.array_equal(fine.values, inc.refine().values)


def test_refine_midpoint_variance():
    # bridge midpoint deviation has variance dt/4
    cfg = PathConfig(1.0, 64, seed=10)
    devs = []
    for i in range(200):
        inc = brownian_increments(cfg, i)
        fine = inc.refine()
        g, f = inc.grid_values(), fine.grid_values()
        devs.append(f[1::2] - 0.5 * (g[:-1] + g[1:]))
    v = np.var(np.concatenate(devs))
    assert v == pytest.approx(cfg.dt / 4, rel=0.05)


def test_girsanov_state_starts_at_minus_y():
    inc = brownian_increments(PathConfig(1.0, 64, seed=1))
    p = girsanov_path(inc, 1.5)
    assert p.state[0] == pytest.approx(-1.5)
    assert np.all(p.state[np.isfinite(p.state)] < 0)


def test_blow_up_detected():
    # a strongly rising path pushes the integral past 2/y
    inc = BrownianIncrements(np.full(100, 0.1), 0.01)
    p = girsanov_path(inc, 2.0)
    assert p.blown
    assert math.isnan(sde_residual(inc, 2.0))
    s = functionals_from_increments(inc, y=2.0)
    assert s.blown and s.girsanov_state is None
    s = functionals_from_increments(inc, y=1e-4)
    assert not s.blown and s.girsanov_state < 0


def test_sde_residual_shrinks():
    cfg = PathConfig(1.0, 128, seed=2)
    coarse, fine = [], []
    for i in range(100):
        inc = brownian_increments(cfg, i)
        rc, rf = sde_residual(inc, 1.0), sde_residual(inc.refine(), 1.0)
        if math.isfinite(rc) and math.isfinite(rf):
            coarse.append(rc)
            fine.append(rf)
    assert np.median(fine) < np.median(coarse)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-0.5, 0.5), min_size=1, max_size=40), st.floats(-1.0, 1.0))
def test_integral_positive_and_ratio_consistent(values, drift):
    inc = BrownianIncrements(np.array(values), 0.05)
    p = functionals_from_increments(inc, drift=drift)
    assert p.integral > 0
    assert p.martingale > 0
    lower = functionals_from_increments(inc)
    assert p.ratio == pytest.approx(lower.integral / p.martingale)
    # larger drift means larger integrand pointwise
    if drift > 0:
        assert p.integral >= lower.integral
