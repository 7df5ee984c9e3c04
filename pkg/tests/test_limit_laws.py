"""Series, inverse, bounds, and Monte Carlo estimators of the limit laws.

The distribution function of sup |B| on [0,1] is checked three ways:
classical table values, an independently frozen random-walk oracle, and
internal consistency (monotonicity, inverse roundtrip, sandwich shape).
"""

import numpy as np
import pytest
from scipy import integrate

from lastexit import (
    CovMatrix,
    Grid1D,
    SeedSpec,
    dyadic_grid,
    ks_abs_sup_cdf,
    ks_abs_sup_survival,
    ks_abs_sup_survival_inverse,
    sheet_sup_quantile,
    steps_for_width,
    variance_measure_sigma2,
)
from lastexit.gp_sim import bm_sup_sampler, scaled_sampler, sheet_sup_samples
from lastexit.limit_laws import (
    MomentEstimate,
    QuantileEstimate,
    TailBound,
    adler_2d_bound,
    borell_tail_bound,
    estimate_sup_second_moment,
    quantile_with_se,
    reflection_sandwich,
)

# Empirical CDF of max_n |walk_n| / sqrt(steps) for a Rademacher walk,
# 2^16 steps, 20000 replicates, Philox seed 20260816 (development run,
# frozen).  Tolerance 0.015 = 3 Monte Carlo se + the O(steps^-1/2)
# discrete-walk offset; the full-scale live comparison runs in the
# acceptance suite.
WALK_ORACLE_CDF = {
    0.5: 0.009950,
    1.0: 0.373050,
    1.5: 0.733800,
    2.0: 0.912000,
    2.5: 0.977250,
}


# ---------------------------------------------------------------------------
# series values


# Oracle values from the dual theta series (4/pi) sum (-1)^k/(2k+1)
# exp(-(2k+1)^2 pi^2 / (8 lam^2)), evaluated at 30 digits with mpmath
# during development — an independent representation of the same law
# (the implementation sums normal CDFs instead).
DUAL_SERIES_CDF = {
    0.5: 0.00915699028976,
    1.0: 0.37077742980,
    1.5: 0.732784785617,
    2.0: 0.908999476154,
    2.5: 0.975161338697,
}


def test_cdf_matches_dual_series_oracle():
    for lam, want in DUAL_SERIES_CDF.items():
        assert ks_abs_sup_cdf(lam) == pytest.approx(want, abs=1e-9)


def test_cdf_matches_frozen_walk_oracle():
    for lam, emp in WALK_ORACLE_CDF.items():
        assert abs(ks_abs_sup_cdf(lam) - emp) < 0.015


def test_cdf_shape():
    lams = np.linspace(0.05, 4.0, 80)
    vals = np.array([ks_abs_sup_cdf(l) for l in lams])
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.all((vals >= 0.0) & (vals <= 1.0))
    assert ks_abs_sup_cdf(0.0) == 0.0
    assert ks_abs_sup_cdf(0.04) == 0.0  # below double-precision support
    assert ks_abs_sup_cdf(8.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        ks_abs_sup_cdf(-0.5)
    with pytest.raises(ValueError):
        ks_abs_sup_cdf(float("nan"))


def test_survival_complements_cdf():
    for lam in (0.3, 0.9, 1.7, 2.6):
        assert ks_abs_sup_survival(lam) == 1.0 - ks_abs_sup_cdf(lam)


def test_inverse_hits_classical_quantiles():
    assert ks_abs_sup_survival_inverse(0.5) == pytest.approx(1.14897, abs=2e-4)
    assert ks_abs_sup_survival_inverse(0.05) == pytest.approx(2.24140, abs=2e-4)
    assert ks_abs_sup_survival_inverse(0.025) == pytest.approx(2.49771, abs=2e-4)


def test_inverse_roundtrip():
    for p in (0.001, 0.01, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99):
        lam = ks_abs_sup_survival_inverse(p)
        assert abs(ks_abs_sup_survival(lam) - p) < 1e-8


def test_inverse_rejects_out_of_range():
    with pytest.raises(ValueError):
        ks_abs_sup_survival_inverse(0.0)
    with pytest.raises(ValueError):
        ks_abs_sup_survival_inverse(1.0)
    with pytest.raises(ValueError, match="tail"):
        ks_abs_sup_survival_inverse(1e-30)


# ---------------------------------------------------------------------------
# sizing core


def test_steps_for_width_formula():
    lam = ks_abs_sup_survival_inverse(0.05)
    want = 2.0 * lam * lam / 0.01
    assert steps_for_width(2.0, 0.1, 0.05) == pytest.approx(want, rel=1e-12)


def test_steps_for_width_quadruples_when_eps_halves():
    a = steps_for_width(1.0, 0.2, 0.1)
    b = steps_for_width(1.0, 0.1, 0.1)
    assert b == pytest.approx(4.0 * a, rel=1e-12)


def test_steps_for_width_validation():
    with pytest.raises(ValueError):
        steps_for_width(0.0, 0.1, 0.1)
    with pytest.raises(ValueError):
        steps_for_width(1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        steps_for_width(1.0, 0.1, 1.5)


# ---------------------------------------------------------------------------
# tail bounds


def test_borell_bound_closed_form_point():
    m2 = 0.7
    # exponent exactly -1 at lam = 8 m2
    assert borell_tail_bound(8.0 * m2, m2) == pytest.approx(2.0 / np.e, rel=1e-12)
    assert borell_tail_bound(0.0, m2) == 1.0


def test_borell_bound_monotone_and_clipped():
    m2 = 1.3
    lams = np.linspace(0.0, 40.0, 50)
    vals = [borell_tail_bound(l, m2) for l in lams]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
    assert all(0.0 < v <= 1.0 for v in vals)
    with pytest.raises(ValueError):
        borell_tail_bound(-1.0, m2)
    with pytest.raises(ValueError):
        borell_tail_bound(1.0, 0.0)


def test_adler_bound_shape():
    lams = np.linspace(0.5, 6.0, 40)
    vals = [adler_2d_bound(l) for l in lams]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
    assert all(0.0 < v <= 1.0 for v in vals)
    with pytest.raises(ValueError):
        adler_2d_bound(0.0)


def test_adler_bound_dominates_sheet_monte_carlo():
    """Grid sup tails must sit below the series bound (grid sup <= true sup)."""
    g = dyadic_grid(7)
    sups = sheet_sup_samples(g, g, SeedSpec(414, 1), 3000)
    for lam in (3.0, 4.0):
        tail = float(np.mean(sups > lam))
        se = np.sqrt(max(tail, 1e-4) * (1.0 - tail) / 3000)
        assert tail <= adler_2d_bound(lam) + 3.0 * se


def test_reflection_sandwich_shape():
    for lam in (0.5, 1.0, 2.0):
        tb = reflection_sandwich(lam)
        assert isinstance(tb, TailBound)
        assert tb.lower == ks_abs_sup_survival(lam)
        assert tb.upper == min(1.0, 2.0 * tb.lower)
        assert tb.method == "reflection_sandwich"
    with pytest.raises(ValueError):
        TailBound(lam=1.0, lower=0.6, upper=0.5, method="x")


# ---------------------------------------------------------------------------
# quantiles and moments


def test_quantile_with_se_order_statistic_convention():
    x = np.arange(1.0, 101.0)
    point, se = quantile_with_se(x, 0.5)
    assert point == 50.0  # k = ceil(0.5 * 100) - 1 = 49 -> x[49]
    assert se > 0.0
    point90, _ = quantile_with_se(x, 0.9)
    assert point90 == 90.0
    with pytest.raises(ValueError):
        quantile_with_se(np.array([1.0]), 0.5)
    with pytest.raises(ValueError):
        quantile_with_se(x, 1.0)


def test_quantile_se_tracks_binomial_width():
    rng = SeedSpec(414, 2).stream(0)
    x = rng.standard_normal(10000)
    _, se = quantile_with_se(x, 0.5)
    # theory: se of the sample median of N(0,1) is ~ 1.2533 / sqrt(n)
    assert se == pytest.approx(1.2533 / np.sqrt(10000), rel=0.25)


def test_second_moment_matches_series_integral():
    """MC E[sup^2] vs the series tail integral (independent routes)."""
    target, quad_err = integrate.quad(
        lambda lam: 2.0 * lam * ks_abs_sup_survival(lam), 0.0, 10.0
    )
    assert quad_err < 1e-6
    est = estimate_sup_second_moment(
        bm_sup_sampler(dyadic_grid(11)), replications=3000, seed=SeedSpec(414, 3)
    )
    assert isinstance(est, MomentEstimate)
    # grid sup sits slightly below the continuum sup: one-sided allowance
    # of 4% on top of 4 Monte Carlo se
    assert est.value < target + 4.0 * est.mc_se
    assert est.value > target * 0.96 - 4.0 * est.mc_se
    with pytest.raises(ValueError):
        estimate_sup_second_moment(
            bm_sup_sampler(dyadic_grid(3)), replications=10, seed=SeedSpec(414, 3)
        )


def test_sheet_sup_quantile_lands_in_sandwich():
    est = sheet_sup_quantile(
        0.5, (dyadic_grid(6), dyadic_grid(6)), replications=1500, seed=SeedSpec(414, 4)
    )
    assert isinstance(est, QuantileEstimate)
    lo = ks_abs_sup_survival_inverse(0.5)
    hi = ks_abs_sup_survival_inverse(0.25)
    # 0.1 allowance: discretization pulls the grid quantile down
    assert lo - 0.1 - 3.0 * est.mc_se < est.point < hi + 3.0 * est.mc_se
    assert est.grid_resolution == 64


def test_sheet_sup_quantile_validation():
    g = dyadic_grid(4)
    with pytest.raises(ValueError):
        sheet_sup_quantile(0.5, (g, g), replications=100, seed=SeedSpec(414, 5))
    with pytest.raises(ValueError):
        sheet_sup_quantile(1.5, (g, g), replications=2000, seed=SeedSpec(414, 5))


# ---------------------------------------------------------------------------
# variance measure


def test_variance_measure_recovers_pathwise_scaling_exactly():
    g = dyadic_grid(6)
    base = bm_sup_sampler(g)
    c = 1.7
    got = variance_measure_sigma2(
        scaled_sampler(base, c), base, replications=200, seed=SeedSpec(414, 6)
    )
    assert got == pytest.approx(c * c, rel=1e-12)


def test_variance_measure_validation():
    g = dyadic_grid(4)
    base = bm_sup_sampler(g)
    with pytest.raises(ValueError):
        variance_measure_sigma2(base, base, replications=10, seed=SeedSpec(414, 7))
    with pytest.raises(ValueError, match="degenerate"):
        variance_measure_sigma2(
            base, lambda rng: 0.0, replications=200, seed=SeedSpec(414, 7)
        )
