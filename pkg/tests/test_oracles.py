import math

import numpy as np
import pytest
from scipy import special, stats

from gbm_integrals.estimators import SamplingConfig
from gbm_integrals.oracles import (
    KS_MIN_SAMPLES,
    GammaLawSpec,
    default_horizon,
    dufresne_cdf,
    dufresne_density_max,
    dufresne_ks_check,
    gammainc_lower,
    gammainc_upper,
    ks_statistic,
    truncation_allowance,
    yor_closed_form,
    yor_mc_check,
    yor_samples,
)

# regularized lower incomplete gamma, 30-digit reference values
GAMMA_REFERENCE = [
    (1.0, 1.0, 0.632120558828557678404476229839),
    (0.5, 0.3, 0.561421973919000136477739599533),
    (2.5, 7.0, 0.984390583899733085265334527002),
    (10.0, 3.0, 0.00110248813011547974213980172095),
    (10.0, 20.0, 0.995004587691692412833810728213),
    (0.25, 0.01, 0.348186452760484047840000580574),
    (3.5, 4.5, 0.747343953503436206242723678404),
]
YOR_1_1 = 0.479513471468815604419145165086
CFG = SamplingConfig(steps=512, seed=31)


@pytest.mark.parametrize("a,x,p", GAMMA_REFERENCE)
def test_incomplete_gamma_reference(a, x, p):
    assert gammainc_lower(a, x) == pytest.approx(p, rel=1e-10)
    assert gammainc_upper(a, x) == pytest.approx(1.0 - p, rel=1e-10, abs=1e-15)


def test_incomplete_gamma_against_scipy():
    x = np.geomspace(1e-4, 200, 400)
    for a in (0.1, 0.5, 1.0, 1.5, 4.0, 30.0):
        assert np.allclose(gammainc_lower(a, x), special.gammainc(a, x), rtol=1e-10, atol=1e-300)
        assert np.allclose(gammainc_upper(a, x), special.gammaincc(a, x), rtol=1e-9, atol=1e-300)


def test_incomplete_gamma_edges():
    assert gammainc_lower(2.0, 0.0) == 0.0
    assert gammainc_upper(2.0, math.inf) == 0.0
    with pytest.raises(ValueError):
        gammainc_lower(0.0, 1.0)
    with pytest.raises(ValueError):
        gammainc_lower(1.0, -1.0)


def test_dufresne_cdf_values():
    assert dufresne_cdf(0.5, GammaLawSpec(2.0)) == pytest.approx(math.exp(-1.0), rel=1e-12)
    # mu = 3, x = 0.2: Q(1.5, 2.5)
    assert dufresne_cdf(0.2, GammaLawSpec(3.0)) == pytest.approx(0.171797144296733135063606652183, rel=1e-10)


def test_dufresne_cdf_is_a_cdf():
    spec = GammaLawSpec(2.0)
    x = np.geomspace(1e-4, 1e6, 500)
    f = dufresne_cdf(x, spec)
    assert np.all(np.diff(f) >= 0)
    assert f[0] < 1e-100 and f[-1] > 1 - 1e-5


def test_dufresne_cdf_matches_inverse_gamma():
    x = np.geomspace(0.01, 100, 50)
    spec = GammaLawSpec(3.0)
    assert np.allclose(dufresne_cdf(x, spec), stats.invgamma(1.5, scale=0.5).cdf(x), rtol=1e-10)


def test_density_max():
    spec = GammaLawSpec(2.0)
    x = np.linspace(0.01, 3, 20_000)
    dens = stats.invgamma(1.0, scale=0.5).pdf(x)
    assert dufresne_density_max(spec) == pytest.approx(dens.max(), rel=1e-4)


def test_gamma_spec_validation():
    with pytest.raises(ValueError):
        GammaLawSpec(0.0)


def test_truncation_allowance_shrinks():
    spec = GammaLawSpec(2.0)
    values = [truncation_allowance(spec, T) for T in (5.0, 10.0, 20.0)]
    assert values[0] > values[1] > values[2]
    assert values[2] < 1e-3
    assert default_horizon(spec) == 20.0


def test_ks_statistic_matches_scipy():
    x = np.random.default_rng(0).exponential(size=2000)
    cdf = stats.expon.cdf
    assert ks_statistic(x, cdf) == pytest.approx(stats.kstest(x, cdf).statistic, rel=1e-12)


def test_dufresne_passes():
    res = dufresne_ks_check(GammaLawSpec(2.0), 20.0, 20_000, CFG)
    assert res.passed
    assert res.threshold == pytest.approx(1.63 / math.sqrt(20_000) + res.allowance)


def test_dufresne_negative_control():
    res = dufresne_ks_check(GammaLawSpec(2.0), 20.0, 20_000, CFG, oracle=GammaLawSpec(4.0))
    assert not res.passed


def test_dufresne_ten_percent_perturbation_fails():
    res = dufresne_ks_check(GammaLawSpec(2.0), 20.0, 100_000, SamplingConfig(steps=256, seed=31),
                            oracle=GammaLawSpec(2.2))
    assert not res.passed


def test_dufresne_minimum_n():
    with pytest.raises(ValueError):
        dufresne_ks_check(GammaLawSpec(2.0), 20.0, 1, CFG)
    with pytest.raises(ValueError):
        dufresne_ks_check(GammaLawSpec(2.0), 20.0, KS_MIN_SAMPLES - 1, CFG)


def test_yor_closed_form_values():
    assert yor_closed_form(0.0, 1.0) == 1.0
    assert yor_closed_form(0.0, 4.0) == 0.5
    assert yor_closed_form(1.0, 1.0) == pytest.approx(YOR_1_1, rel=1e-14)
    assert yor_closed_form(1.0, 1.0) == pytest.approx(math.exp(-0.5 * math.log(1 + math.sqrt(2)) ** 2) / math.sqrt(2))


@pytest.mark.parametrize("u", [0.3, 1.0, 2.5])
def test_yor_even_in_u(u):
    assert yor_closed_form(u, 1.3) == yor_closed_form(-u, 1.3)


def test_yor_samples_even_in_u():
    assert np.array_equal(yor_samples(0.7, 1.0, 1000, CFG), yor_samples(-0.7, 1.0, 1000, CFG))


@pytest.mark.parametrize("u,t", [(0.0, 1.0), (0.0, 4.0), (1.0, 1.0)])
def test_yor_monte_carlo(u, t):
    assert yor_mc_check(u, t, 100_000, CFG).passed


def test_yor_perturbed_oracle_fails():
    # scaling the asinh term by 1.1 must be detected at n = 10^6
    samples = yor_samples(1.0, 1.0, 10**6, SamplingConfig(steps=128, seed=31))
    perturbed = math.exp(-(1.1 * math.asinh(1.0)) ** 2 / 2.0) / math.sqrt(2.0)
    se = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - perturbed) > 3 * se
    assert abs(samples.mean() - YOR_1_1) < 3 * se + 1e-3


def test_yor_validation():
    with pytest.raises(ValueError):
        yor_closed_form(0.0, 0.0)
