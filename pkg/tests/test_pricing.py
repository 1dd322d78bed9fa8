import math

import pytest

from gbm_integrals.estimators import SamplingConfig
from gbm_integrals.pricing import OptionSpec, canonicalize, price_check, price_direct, price_identity

CFG = SamplingConfig(steps=256, seed=21)
N = 100_000


def test_canonical_identity_at_unit_vol():
    spec = OptionSpec(1.0, 1.0)
    canon = canonicalize(spec)
    assert canon.spec == spec and canon.scale == 1.0


def test_canonical_sigma_two():
    canon = canonicalize(OptionSpec(0.5, 1.0, 0.25, 2.0))
    assert canon.spec.horizon == 4.0
    assert canon.spec.strike == 2.0
    assert canon.spec.volatility == 1.0 and canon.spec.drift == 0.25
    assert canon.scale == 0.25


@pytest.mark.parametrize("bad", [dict(strike=0.0), dict(horizon=-1.0), dict(volatility=0.0),
                                 dict(drift=math.inf), dict(strike=math.nan)])
def test_spec_validation(bad):
    kw = dict(strike=1.0, horizon=1.0) | bad
    with pytest.raises(ValueError):
        OptionSpec(**kw)


def test_tiny_strike_prices_the_mean():
    spec = OptionSpec(1e-8, 1.0)
    direct = price_direct(spec, N, CFG)
    assert abs(direct.mean - 1.0) < 3 * direct.stderr
    ident = price_identity(spec, N, CFG)
    assert ident.mean == pytest.approx(1.0 - 1e-8, abs=1e-12)


def test_identity_at_least_intrinsic():
    # the a^2 E[...] correction term is positive
    ident = price_identity(OptionSpec(2.0, 1.0), 20_000, CFG)
    assert ident.mean >= 1.0 - 2.0


def test_identity_agrees_deep_in_the_money():
    assert price_check(OptionSpec(0.5, 1.0), N, CFG).passed


@pytest.mark.parametrize("strike", [1.0, 2.0])
def test_identity_agreement_reported(strike):
    rep = price_check(OptionSpec(strike, 1.0), N, CFG)
    assert rep.identity_id == "asian_call"
    assert rep.params["a"] == strike and rep.params["sigma"] == 1.0
    # the identity side can only miss mass above its largest sample
    assert rep.z_score > -3


def test_identity_needs_zero_drift():
    with pytest.raises(ValueError):
        price_identity(OptionSpec(1.0, 1.0, 0.5), 100, CFG)


def test_time_change_is_pathwise():
    # on the same stream the sigma-path and the canonical route see the same integrals
    spec = OptionSpec(1.0, 0.5, 0.0, 1.5)
    a = price_direct(spec, 20_000, CFG, time_change=True)
    b = price_direct(spec, 20_000, CFG, time_change=False)
    assert a.mean == pytest.approx(b.mean, rel=1e-9)


def test_time_change_round_trip():
    spec = OptionSpec(1.0, 0.5, 0.0, 1.5)
    canonical = price_direct(spec, N, CFG)
    simulated = price_direct(spec, N, CFG.paired(), time_change=False)
    assert abs(canonical.mean - simulated.mean) < 3 * math.hypot(canonical.stderr, simulated.stderr)


def test_drifted_price_increases_with_drift():
    lo = price_direct(OptionSpec(1.0, 1.0, -0.5), 20_000, CFG).mean
    hi = price_direct(OptionSpec(1.0, 1.0, 0.5), 20_000, CFG).mean
    assert hi > lo


def test_n_validated():
    with pytest.raises(ValueError):
        price_direct(OptionSpec(1.0, 1.0), 0, CFG)
