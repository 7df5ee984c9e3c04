"""Error-trajectory models: running mean/median, ecdf sup, hazard estimator."""

import numpy as np
import pytest

from lastexit import SeedSpec
from lastexit.estimators import (
    ESTIMATOR_MODELS,
    ecdf_sup_model,
    estimator_model,
    nelson_aalen_model,
    running_mean_model,
    running_median_model,
)
from lastexit.last_time import asymptotic_relative_efficiency, last_exceed

SEED = SeedSpec(707, 0)


def test_catalog_names():
    assert set(ESTIMATOR_MODELS) == {"mean", "median", "ecdf-sup", "nelson-aalen"}
    for name in ESTIMATOR_MODELS:
        model = estimator_model(name)
        assert model.name  # non-empty label for artifacts
        assert model.sigma2 is None or model.sigma2 > 0
    with pytest.raises(ValueError):
        estimator_model("ols")


def test_mean_model_variances():
    assert running_mean_model("centered_uniform").sigma2 == pytest.approx(1 / 12)
    assert running_mean_model("normal").sigma2 == 1.0
    with pytest.raises(ValueError):
        running_mean_model("cauchy")


def test_mean_trajectory_matches_cumulative_average():
    model = running_mean_model("normal")
    traj = model.trajectory(SEED, 64)
    rng = SEED.stream(0)
    x = rng.standard_normal(64)
    want = np.abs(np.cumsum(x) / np.arange(1, 65))
    assert np.array_equal(traj.errors, want)
    assert traj.norm_label == "mean[normal]"


def test_mean_replay_and_replicates():
    model = running_mean_model()
    a = model.trajectory(SeedSpec(707, 1), 32, replicate_index=2)
    b = model.trajectory(SeedSpec(707, 1), 32, replicate_index=2)
    c = model.trajectory(SeedSpec(707, 1), 32, replicate_index=3)
    assert np.array_equal(a.errors, b.errors)
    assert not np.array_equal(a.errors, c.errors)


def test_mean_error_second_moment():
    """E err_n^2 = sigma2 / n for the sample mean, checked on the tail average."""
    model = running_mean_model("centered_uniform")
    n = 400
    acc = np.zeros(n)
    for rep in range(600):
        acc += model.trajectory(SeedSpec(707, 2), n, replicate_index=rep).errors ** 2
    acc /= 600
    want = model.sigma2 / np.arange(1, n + 1)
    assert acc[99:].mean() == pytest.approx(want[99:].mean(), rel=0.15)


def test_median_matches_numpy_prefix_medians():
    model = running_median_model()
    traj = model.trajectory(SeedSpec(707, 3), 200)
    rng = SeedSpec(707, 3).stream(0)
    x = rng.standard_normal(200)
    want = np.array([abs(np.median(x[: k + 1])) for k in range(200)])
    np.testing.assert_allclose(traj.errors, want, atol=1e-12)


def test_median_sigma2_is_asymptotic_constant():
    assert running_median_model().sigma2 == pytest.approx(np.pi / 2)


def test_ecdf_model_validation():
    with pytest.raises(ValueError):
        ecdf_sup_model(grid_points=4)


def test_ecdf_trajectory_matches_naive_sup():
    model = ecdf_sup_model(grid_points=16)
    traj = model.trajectory(SeedSpec(707, 4), 30)
    rng = SeedSpec(707, 4).stream(0)
    u = rng.random(30)
    grid = np.arange(1, 17, dtype=np.float64) / 17.0
    for n in range(1, 31):
        emp = np.mean(u[:n, None] <= grid[None, :], axis=0)
        want = np.max(np.abs(emp - grid))
        assert traj.errors[n - 1] == pytest.approx(want, abs=1e-5)


def test_ecdf_sup_obeys_ks_law_scale():
    """Median of sqrt(n) * sup-gap is about 0.8276 for a continuous law."""
    model = ecdf_sup_model(grid_points=512)
    n = 500
    vals = [
        np.sqrt(n) * model.trajectory(SeedSpec(707, 5), n, replicate_index=r).errors[-1]
        for r in range(400)
    ]
    # the finite grid can only shrink the sup, so allow a low-side tilt
    assert np.median(vals) == pytest.approx(0.82757, abs=0.08)


def test_nelson_aalen_model_smoke():
    model = nelson_aalen_model()
    traj = model.trajectory(SeedSpec(707, 6), 50)
    assert traj.horizon == 50
    assert np.all(traj.errors >= 0.0)  # sup-deviations are nonnegative
    assert traj.errors[40:].mean() < traj.errors[:10].mean()


@pytest.mark.slow
def test_mean_vs_median_last_exit_efficiency():
    """Last-exit times compare estimators: the ratio of medians -> pi/2.

    Both models consume one standard_normal(horizon) block per replicate,
    so a shared seed pairs them on identical data.
    """
    eps, horizon, reps = 0.05, 12000, 800
    med_model = running_median_model()
    mean_model = running_mean_model("normal")
    n_med = np.empty(reps)
    n_mean = np.empty(reps)
    for r in range(reps):
        t_med = med_model.trajectory(SeedSpec(707, 7), horizon, replicate_index=r)
        t_mean = mean_model.trajectory(SeedSpec(707, 7), horizon, replicate_index=r)
        n_med[r], cens_a = last_exceed(t_med, eps)
        n_mean[r], cens_b = last_exceed(t_mean, eps)
        assert not (cens_a or cens_b)
    ratio = asymptotic_relative_efficiency(
        float(np.median(n_med)), float(np.median(n_mean))
    )
    assert ratio == pytest.approx(np.pi / 2, rel=0.15)
