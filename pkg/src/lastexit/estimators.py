"""Error trajectories of concrete estimators on synthetic data.

Each model draws an i.i.d. data stream and returns |estimate_n - truth|
for n = 1..horizon, the raw material for the tail statistics.  Asymptotic
variances are attached where the estimator has a scalar limit (running
mean: Var X; running median: 1 / (4 f(median)^2)).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .last_time import ErrorTrajectory
from .rng import SeedSpec
from .survival import SurvivalModel, exp_uniform_model, nelson_aalen_error_trajectory


@dataclass(frozen=True)
class TrajectoryModel:
    """Named generator of error trajectories, with its limit variance if scalar."""

    name: str
    sigma2: Optional[float]
    sample_errors: Callable[[np.random.Generator, int], np.ndarray]

    def trajectory(
        self, seed: SeedSpec, horizon: int, replicate_index: int = 0
    ) -> ErrorTrajectory:
        rng = seed.stream(replicate_index)
        return ErrorTrajectory(self.sample_errors(rng, horizon), norm_label=self.name)


def running_mean_model(dist: str = "centered_uniform") -> TrajectoryModel:
    """|running mean| of a centered stream (true mean 0)."""
    if dist == "centered_uniform":
        sigma2 = 1.0 / 12.0

        def draw(rng, horizon):
            return rng.uniform(-0.5, 0.5, size=horizon)

    elif dist == "normal":
        sigma2 = 1.0

        def draw(rng, horizon):
            return rng.standard_normal(horizon)

    else:
        raise ValueError(f"unknown distribution {dist!r}")

    def sample_errors(rng: np.random.Generator, horizon: int) -> np.ndarray:
        x = draw(rng, horizon)
        n = np.arange(1, horizon + 1, dtype=float)
        return np.abs(np.cumsum(x) / n)

    return TrajectoryModel(f"mean[{dist}]", sigma2, sample_errors)


def _running_abs_median(x: np.ndarray) -> np.ndarray:
    # two-heap running median; truth is 0 so the error is |median|
    lo: list = []  # max-heap via negation
    hi: list = []
    out = np.empty(x.size)
    for i, v in enumerate(x):
        if not lo or v <= -lo[0]:
            heapq.heappush(lo, -v)
        else:
            heapq.heappush(hi, v)
        if len(lo) > len(hi) + 1:
            heapq.heappush(hi, -heapq.heappop(lo))
        elif len(hi) > len(lo):
            heapq.heappush(lo, -heapq.heappop(hi))
        med = -lo[0] if len(lo) > len(hi) else 0.5 * (hi[0] - lo[0])
        out[i] = abs(med)
    return out


def running_median_model() -> TrajectoryModel:
    """|running median| of standard normal data (true median 0)."""
    sigma2 = math.pi / 2.0  # 1 / (4 phi(0)^2)

    def sample_errors(rng: np.random.Generator, horizon: int) -> np.ndarray:
        return _running_abs_median(rng.standard_normal(horizon))

    return TrajectoryModel("median[normal]", sigma2, sample_errors)


def ecdf_sup_model(grid_points: int = 512) -> TrajectoryModel:
    """sup-deviation of the empirical CDF of uniform data from the identity.

    The sup is evaluated on a fixed quantile grid (documented
    approximation, downward bias at most 1/grid_points).
    """
    if grid_points < 8:
        raise ValueError("grid_points must be >= 8")
    grid = np.arange(1, grid_points + 1, dtype=float) / (grid_points + 1)

    def sample_errors(rng: np.random.Generator, horizon: int) -> np.ndarray:
        x = rng.random(horizon)
        hits = (x[:, None] <= grid[None, :]).astype(np.float32)
        counts = np.cumsum(hits, axis=0)
        n = np.arange(1, horizon + 1, dtype=np.float32)[:, None]
        return np.abs(counts / n - grid.astype(np.float32)).max(axis=1).astype(float)

    return TrajectoryModel("ecdf-sup[uniform]", None, sample_errors)


def nelson_aalen_model(model: Optional[SurvivalModel] = None) -> TrajectoryModel:
    """sup-deviation of the running hazard estimate from the model truth."""
    m = model or exp_uniform_model()

    def sample_errors(rng: np.random.Generator, horizon: int) -> np.ndarray:
        return nelson_aalen_error_trajectory(m, rng, horizon)

    return TrajectoryModel(f"nelson-aalen[{m.name}]", None, sample_errors)


ESTIMATOR_MODELS = {
    "mean": running_mean_model,
    "median": running_median_model,
    "ecdf-sup": ecdf_sup_model,
    "nelson-aalen": nelson_aalen_model,
}


def estimator_model(name: str) -> TrajectoryModel:
    try:
        factory = ESTIMATOR_MODELS[name]
    except KeyError:
        raise ValueError(f"unknown estimator {name!r}") from None
    return factory()
