"""Tail statistics of estimator error trajectories and their limit laws.

An error trajectory records |estimate_n - truth| (any norm) for
n = 1..horizon.  The statistics: the last index whose error exceeds eps,
the count of indices at or above eps, the fraction of those falling in a
band, and the mean error over them.  ``simulate_limit_stats`` draws the
corresponding limit variables by integrating the scaled limit process
over its time parametrization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .gp_sim import CovMatrix
from .limit_laws import quantile_with_se
from .rng import SeedSpec

# integration window for the limit-variable integrals
DEFAULT_S_LOWER = 1e-4
DEFAULT_S_UPPER = 50.0
DEFAULT_S_POINTS = 1 << 12


@dataclass(frozen=True)
class ErrorTrajectory:
    """|estimate - truth| per step, 1-based steps 1..horizon."""

    errors: np.ndarray
    norm_label: str = ""

    def __post_init__(self) -> None:
        errs = np.asarray(self.errors, dtype=float)
        if errs.ndim != 1 or errs.size == 0:
            raise ValueError("errors must be a non-empty 1-D array")
        if not np.all(np.isfinite(errs)) or np.any(errs < 0.0):
            raise ValueError("errors must be finite and nonnegative")
        object.__setattr__(self, "errors", errs)

    @property
    def horizon(self) -> int:
        return int(self.errors.size)


@dataclass(frozen=True)
class TailStats:
    """Bundle of tail statistics of one trajectory at one eps."""

    epsilon: float
    n_eps: int
    q_eps: int
    r_eps: Optional[float]
    m_eps: Optional[float]
    censored: bool


@dataclass(frozen=True)
class ScaledStats:
    """Limit-scale versions: eps^2 N, eps^2 Q, M / eps."""

    eps2_n: float
    eps2_q: float
    m_over_eps: Optional[float]
    censored: bool


def last_exceed(traj: ErrorTrajectory, eps: float) -> Tuple[int, bool]:
    """Last step with error strictly above eps (0 if none), + censoring flag.

    The flag is True when the error still exceeds eps at the horizon, so
    the reported index is only a lower bound.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    above = traj.errors > eps
    idx = np.nonzero(above)[0]
    n_eps = int(idx[-1] + 1) if idx.size else 0
    return n_eps, bool(above[-1])


def count_exceed(traj: ErrorTrajectory, eps: float) -> int:
    """Number of steps with error at or above eps."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    return int(np.count_nonzero(traj.errors >= eps))


def band_ratio(
    traj: ErrorTrajectory, eps: float, a: float, b: float
) -> Optional[float]:
    """Fraction of the errors >= eps that lie inside [a*eps, b*eps].

    None when the trajectory never reaches eps (the ratio is undefined).
    ``a >= 1`` so the band events are among the counted ones; b may be inf.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if a < 1.0 or not b > a:
        raise ValueError("need a >= 1 and b > a")
    errs = traj.errors
    denom = np.count_nonzero(errs >= eps)
    if denom == 0:
        return None
    num = np.count_nonzero((errs >= a * eps) & (errs <= b * eps))
    return float(num / denom)


def mean_exceed(traj: ErrorTrajectory, eps: float) -> Optional[float]:
    """Mean error over the steps with error >= eps; None if there are none."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    mask = traj.errors >= eps
    if not mask.any():
        return None
    return float(traj.errors[mask].mean())


def tail_stats(
    traj: ErrorTrajectory, eps: float, band: Tuple[float, float] = (1.0, math.inf)
) -> TailStats:
    n_eps, censored = last_exceed(traj, eps)
    return TailStats(
        epsilon=float(eps),
        n_eps=n_eps,
        q_eps=count_exceed(traj, eps),
        r_eps=band_ratio(traj, eps, band[0], band[1]),
        m_eps=mean_exceed(traj, eps),
        censored=censored,
    )


def scaled_stats(traj: ErrorTrajectory, eps: float) -> ScaledStats:
    """The statistics on the scale where their limits live."""
    n_eps, censored = last_exceed(traj, eps)
    q_eps = count_exceed(traj, eps)
    m = mean_exceed(traj, eps)
    return ScaledStats(
        eps2_n=eps * eps * n_eps,
        eps2_q=eps * eps * q_eps,
        m_over_eps=None if m is None else m / eps,
        censored=censored,
    )


def combine_max(a: ErrorTrajectory, b: ErrorTrajectory) -> ErrorTrajectory:
    """Pointwise max of two trajectories over the same horizon."""
    if a.horizon != b.horizon:
        raise ValueError("trajectories must share a horizon")
    label = f"max({a.norm_label or '?'}, {b.norm_label or '?'})"
    return ErrorTrajectory(np.maximum(a.errors, b.errors), norm_label=label)


def asymptotic_relative_efficiency(
    median1: float,
    median2: float,
    norm_med1: float = 1.0,
    norm_med2: float = 1.0,
) -> float:
    """(median1 / norm_med1) / (median2 / norm_med2); plain ratio at equal norms."""
    for name, v in (
        ("median1", median1),
        ("median2", median2),
        ("norm_med1", norm_med1),
        ("norm_med2", norm_med2),
    ):
        if not (np.isfinite(v) and v > 0.0):
            raise ValueError(f"{name} must be a positive real")
    return (median1 / norm_med1) / (median2 / norm_med2)


# ---------------------------------------------------------------------------
# limit-variable simulation


def default_limit_s_grid(
    points: int = DEFAULT_S_POINTS,
    lower: float = DEFAULT_S_LOWER,
    upper: float = DEFAULT_S_UPPER,
) -> np.ndarray:
    """Log-spaced time grid for the limit integrals (resolves both ends)."""
    if points < 16:
        raise ValueError("need at least 16 grid points")
    if not 0.0 < lower < 1.0 < upper:
        raise ValueError("need 0 < lower < 1 < upper")
    return np.geomspace(lower, upper, points)


@dataclass(frozen=True)
class LimitPathSampler:
    """Draws the norm of the scaled limit process on a fixed time grid."""

    s_grid: np.ndarray
    draw: Callable[[np.random.Generator], np.ndarray]
    label: str = ""

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        return self.draw(rng)


def scaled_bm_limit_sampler(
    sigma: float, s_grid: Optional[np.ndarray] = None
) -> LimitPathSampler:
    """Limit of a scalar estimator with asymptotic variance sigma^2.

    The scaled error process at time s is sigma * |W_s| / s for a standard
    Brownian motion W, drawn with exact joint law on the grid.
    """
    if not (np.isfinite(sigma) and sigma > 0.0):
        raise ValueError("sigma must be positive")
    s = default_limit_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    ds = np.diff(s, prepend=0.0)
    if np.any(ds <= 0.0) or s[0] <= 0.0:
        raise ValueError("s_grid must be strictly increasing and positive")
    sq = np.sqrt(ds)

    def draw(rng: np.random.Generator) -> np.ndarray:
        w = np.cumsum(rng.standard_normal(s.size) * sq)
        return sigma * np.abs(w) / s

    return LimitPathSampler(s_grid=s, draw=draw, label=f"scaled-bm sigma={sigma:g}")


def kiefer_limit_sampler(
    cov: CovMatrix, s_grid: Optional[np.ndarray] = None
) -> LimitPathSampler:
    """Limit process over a finite function class: max_j |Z_s,j| / s."""
    s = default_limit_s_grid() if s_grid is None else np.asarray(s_grid, dtype=float)
    ds = np.diff(s, prepend=0.0)
    if np.any(ds <= 0.0) or s[0] <= 0.0:
        raise ValueError("s_grid must be strictly increasing and positive")
    sq = np.sqrt(ds)
    factor = cov.factor()
    k = factor.shape[0]

    def draw(rng: np.random.Generator) -> np.ndarray:
        incr = (rng.standard_normal((s.size, k)) @ factor.T) * sq[:, None]
        z = np.cumsum(incr, axis=0)
        return np.max(np.abs(z), axis=1) / s

    return LimitPathSampler(s_grid=s, draw=draw, label=f"kiefer k={k}")


@dataclass(frozen=True)
class StatTableRow:
    statistic: str
    band_a: Optional[float]
    band_b: Optional[float]
    q05: float
    q50: float
    q95: float
    mc_se: float
    replications: int
    censored_fraction: float


@dataclass(frozen=True)
class LimitStatsResult:
    """Raw limit-variable samples plus their quantile table."""

    n_samples: np.ndarray
    q_samples: np.ndarray
    m_samples: np.ndarray
    r_samples: dict
    censored_fraction: float
    replications: int

    def table(self) -> list:
        rows = []
        for name, samples, band in (
            ("last_exit_scaled", self.n_samples, None),
            ("exceed_count_scaled", self.q_samples, None),
            ("mean_exceed_scaled", self.m_samples, None),
        ):
            rows.append(self._row(name, samples, band))
        for band, samples in sorted(self.r_samples.items()):
            rows.append(self._row("band_ratio", samples, band))
        return rows

    def _row(self, name, samples, band) -> StatTableRow:
        vals = samples[np.isfinite(samples)]
        if vals.size < 2:
            q05 = q50 = q95 = se = float("nan")
        else:
            q05, _ = quantile_with_se(vals, 0.05)
            q50, se = quantile_with_se(vals, 0.50)
            q95, _ = quantile_with_se(vals, 0.95)
        return StatTableRow(
            statistic=name,
            band_a=None if band is None else band[0],
            band_b=None if band is None else band[1],
            q05=q05,
            q50=q50,
            q95=q95,
            mc_se=se,
            replications=self.replications,
            censored_fraction=self.censored_fraction,
        )


def simulate_limit_stats(
    path_sampler: LimitPathSampler,
    replications: int,
    seed: SeedSpec,
    bands: Sequence[Tuple[float, float]] = ((1.0, 1.53),),
) -> LimitStatsResult:
    """Monte Carlo draws of the limit variables.

    Per replicate: N = (sup over s >= 1 of the path)^2 — by time reversal
    this is the squared sup of the unit-interval process; Q, the band
    ratios, and M are left-rule indicator integrals over the grid window.
    A replicate is flagged censored when the path is still at or above 1
    at the last grid point.
    """
    if replications < 100:
        raise ValueError("limit-statistic simulation needs >= 100 replications")
    for a, b in bands:
        if a < 1.0 or not b > a:
            raise ValueError("each band needs a >= 1 and b > a")
    s = path_sampler.s_grid
    w = np.diff(s)  # left-rule weights
    tail_mask = s >= 1.0
    if not tail_mask.any():
        raise ValueError("grid must reach s >= 1 for the last-exit statistic")

    n_out = np.empty(replications)
    q_out = np.empty(replications)
    m_out = np.empty(replications)
    r_out = {tuple(b): np.empty(replications) for b in bands}
    censored = 0

    for i in range(replications):
        v = path_sampler(seed.stream(i))
        n_out[i] = np.max(v[tail_mask]) ** 2
        vi = v[:-1]
        above = vi >= 1.0
        q = float(w[above].sum())
        q_out[i] = q
        if v[-1] >= 1.0:
            censored += 1
        if q > 0.0:
            m_out[i] = float((w * vi * above).sum()) / q
            for band in r_out:
                a, b = band
                inside = (vi >= a) & (vi <= b)
                r_out[band][i] = float(w[inside].sum()) / q
        else:
            m_out[i] = np.nan
            for band in r_out:
                r_out[band][i] = np.nan

    return LimitStatsResult(
        n_samples=n_out,
        q_samples=q_out,
        m_samples=m_out,
        r_samples=r_out,
        censored_fraction=censored / replications,
        replications=replications,
    )


def band_ratio_curve(
    b_grid: Sequence[float],
    replications: int,
    seed: SeedSpec,
    path_sampler: Optional[LimitPathSampler] = None,
) -> list:
    """Quantile curve of the limit band ratio R(1, b) over a grid of b.

    Returns StatTableRow entries, one per b, with the 0.05/0.50/0.95
    quantiles across replicates.  The default path sampler is the scalar
    unit-variance case (the ratio is scale-invariant).
    """
    b_arr = np.asarray(list(b_grid), dtype=float)
    if b_arr.size == 0 or np.any(np.diff(b_arr) <= 0.0) or b_arr[0] <= 1.0:
        raise ValueError("b_grid must be increasing with every b > 1")
    if replications < 100:
        raise ValueError("curve estimation needs >= 100 replications")
    sampler = path_sampler or scaled_bm_limit_sampler(1.0)
    s = sampler.s_grid
    w = np.diff(s)
    edges = np.concatenate(([1.0], b_arr))

    ratios = np.empty((replications, b_arr.size))
    censored = 0
    for i in range(replications):
        v = sampler(seed.stream(i))
        if v[-1] >= 1.0:
            censored += 1
        vi = v[:-1]
        above = vi >= 1.0
        q = float(w[above].sum())
        if q <= 0.0:
            ratios[i, :] = np.nan
            continue
        mass, _ = np.histogram(vi, bins=edges, weights=w)
        ratios[i, :] = np.cumsum(mass) / q

    rows = []
    for j, b in enumerate(b_arr):
        col = ratios[:, j]
        col = col[np.isfinite(col)]
        q05, _ = quantile_with_se(col, 0.05)
        q50, se = quantile_with_se(col, 0.50)
        q95, _ = quantile_with_se(col, 0.95)
        rows.append(
            StatTableRow(
                statistic="band_ratio",
                band_a=1.0,
                band_b=float(b),
                q05=q05,
                q50=q50,
                q95=q95,
                mc_se=se,
                replications=replications,
                censored_fraction=censored / replications,
            )
        )
    return rows
