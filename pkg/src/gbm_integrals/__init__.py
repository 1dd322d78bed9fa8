"""Simulation and validation of time integrals of geometric Brownian motion."""

from .estimators import (
    EstimateWithCI,
    IdentityReport,
    MeasureFunction,
    MomentEstimate,
    MomentVariant,
    SamplingConfig,
    cdf_check,
    cdf_direct,
    cdf_identity,
    cdf_identity_drift,
    density_check,
    density_curve,
    density_difference,
    density_event,
    density_mass,
    exp_moment,
    hidden_tail_mass,
    lower_tail_probe,
    measure_change_check,
    median_of_means,
    supermartingale_check,
)
from .oracles import (
    GammaLawSpec,
    KSResult,
    dufresne_cdf,
    dufresne_ks_check,
    gammainc_lower,
    gammainc_upper,
    truncation_allowance,
    yor_closed_form,
    yor_mc_check,
)
from .paths import (
    BrownianIncrements,
    PathBatch,
    PathConfig,
    PathSample,
    Scheme,
    brownian_increments,
    girsanov_path,
    sde_residual,
    simulate_batch,
    simulate_path,
)
from .pricing import OptionSpec, canonicalize, price_check, price_direct, price_identity

__version__ = "0.1.0"
