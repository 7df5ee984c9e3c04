"""Limit laws for the last time an estimator errs by more than a threshold,
and fixed-width sequential confidence sets sized from them."""

from .rng import SeedSpec
from .gp_sim import (
    CovMatrix,
    Grid1D,
    GridSizeError,
    PathGrid,
    SheetGrid,
    dyadic_grid,
    simulate_brownian_bridge,
    simulate_brownian_motion,
    simulate_brownian_sheet,
    simulate_kiefer_muller,
    sup_abs,
)
from .limit_laws import (
    MomentEstimate,
    QuantileEstimate,
    TailBound,
    adler_2d_bound,
    borell_tail_bound,
    estimate_sup_second_moment,
    ks_abs_sup_cdf,
    ks_abs_sup_survival,
    ks_abs_sup_survival_inverse,
    sheet_sup_quantile,
    steps_for_width,
    variance_measure_sigma2,
)
from .last_time import (
    ErrorTrajectory,
    ScaledStats,
    TailStats,
    asymptotic_relative_efficiency,
    band_ratio,
    band_ratio_curve,
    combine_max,
    count_exceed,
    last_exceed,
    mean_exceed,
    scaled_stats,
    simulate_limit_stats,
    tail_stats,
)
from .survival import (
    BandSpec,
    CensoredSample,
    CoverageEstimate,
    CsvFormatError,
    EmptyRiskSetError,
    HazardCurve,
    band_size,
    exp_uniform_model,
    nelson_aalen,
    read_censored_csv,
    sigma2_hat,
    simulate_band_coverage,
)
from .saa import (
    FiniteScenarioProblem,
    NonFiniteLossError,
    RiskProblem,
    SAAResult,
    saa_solve,
    sample_size_n,
    semideviation_risk,
    shapiro_size,
    sigma2_saa,
    toy_problem,
    verify_sequential_coverage,
)

__version__ = "0.1.0"
