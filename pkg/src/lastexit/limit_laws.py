"""Distribution and tail machinery for sup statistics of the limit processes.

The closed-form pieces: the alternating normal-CDF series for the
distribution of sup |Brownian motion| on [0, 1], its survival inverse, an
exponential tail bound driven by the second moment of a sup, and the
two-dimensional reflection-series bound.  The Monte Carlo pieces: sheet
sup quantiles and the variance measure defined as a ratio of median
squared sups.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy.stats import norm

from .gp_sim import Grid1D, sheet_sup_samples
from .rng import SeedSpec

_SMALL_LAMBDA = 0.05
_TERM_TOL = 1e-13
_INVERSE_TOL = 1e-10
_BRACKET = (1e-6, 10.0)

Sampler = Callable[[np.random.Generator], float]


def ks_abs_sup_cdf(lam: float) -> float:
    """P(sup_{[0,1]} |B| <= lam) via the alternating reflection series.

    Summed symmetrically in k from 0 outward; truncated when the last
    term magnitude drops below 1e-13 (after at least three k-levels).
    Below lam = 0.05 the value is 0 to double precision.
    """
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0.0:
        raise ValueError("lam must be a finite nonnegative real")
    if lam < _SMALL_LAMBDA:
        return 0.0
    total = 2.0 * norm.cdf(lam) - 1.0  # k = 0
    k = 1
    while True:
        # +k and -k contribute identically, hence the factor 2
        term = 2.0 * (norm.cdf((2 * k + 1) * lam) - norm.cdf((2 * k - 1) * lam))
        if k % 2:
            term = -term
        total += term
        if abs(term) < _TERM_TOL and k >= 2:
            break
        k += 1
    return float(min(1.0, max(0.0, total)))


def ks_abs_sup_survival(lam: float) -> float:
    """P(sup_{[0,1]} |B| > lam) = 1 - ks_abs_sup_cdf(lam)."""
    return 1.0 - ks_abs_sup_cdf(lam)


def ks_abs_sup_survival_inverse(p: float) -> float:
    """lam with |survival(lam) - p| < 1e-10, by bisection on [1e-6, 10].

    The survival value comes from 1 - cdf, so tails below about 1e-12
    cannot be resolved in double precision and are rejected.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    if p < 1e-12:
        raise ValueError(
            f"p={p:g} is below the tail resolvable in double precision (~1e-12)"
        )
    lo, hi = _BRACKET
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = ks_abs_sup_survival(mid)
        if abs(s - p) < _INVERSE_TOL:
            return mid
        if s > p:
            lo = mid
        else:
            hi = mid
    raise RuntimeError("bisection failed to reach tolerance")  # pragma: no cover


def steps_for_width(sigma2: float, eps: float, level: float) -> float:
    """Real-valued step count sigma2 * inv_survival(level)^2 / eps^2.

    Shared core of every sizing rule: integerization conventions differ
    per consumer, the formula does not.
    """
    if not (np.isfinite(sigma2) and sigma2 > 0.0):
        raise ValueError("sigma2 must be positive")
    if not (np.isfinite(eps) and eps > 0.0):
        raise ValueError("eps must be positive")
    lam = ks_abs_sup_survival_inverse(level)
    return float(sigma2 * lam * lam / (eps * eps))


def borell_tail_bound(lam: float, second_moment: float) -> float:
    """Gaussian-concentration bound min(1, 2 exp(-lam / (8 m2))).

    ``lam`` is on the squared-sup scale; ``second_moment`` is E[sup^2].
    """
    if not (np.isfinite(lam) and lam >= 0.0):
        raise ValueError("lam must be a finite nonnegative real")
    if not (np.isfinite(second_moment) and second_moment > 0.0):
        raise ValueError("second_moment must be positive")
    return float(min(1.0, 2.0 * np.exp(-lam / (8.0 * second_moment))))


def adler_2d_bound(lam: float) -> float:
    """Two-dimensional reflection-series tail bound, clipped at 1.

    4 * sum_{k>=1} (8 k^2 lam - 2) exp(-2 k^2 lam), truncated when a term
    magnitude falls below 1e-14.
    """
    if not (np.isfinite(lam) and lam > 0.0):
        raise ValueError("lam must be a finite positive real")
    total = 0.0
    k = 1
    while True:
        kk = k * k
        term = (8.0 * kk * lam - 2.0) * np.exp(-2.0 * kk * lam)
        total += term
        if abs(term) < 1e-14:
            break
        k += 1
    return float(min(1.0, 4.0 * total))


# ---------------------------------------------------------------------------
# Monte Carlo estimates


@dataclass(frozen=True)
class MomentEstimate:
    """Monte Carlo moment with its standard error."""

    value: float
    mc_se: float
    replications: int


@dataclass(frozen=True)
class QuantileEstimate:
    """Upper-level quantile of a simulated sup statistic."""

    level: float
    point: float
    mc_se: float
    replications: int
    grid_resolution: int

    def __post_init__(self) -> None:
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie strictly between 0 and 1")
        if self.replications < 100:
            raise ValueError("quantile estimates need >= 100 replications")
        if self.mc_se < 0.0 or not np.isfinite(self.point):
            raise ValueError("malformed quantile estimate")


@dataclass(frozen=True)
class TailBound:
    """Two-sided enclosure of a tail probability at threshold lam."""

    lam: float
    lower: float
    upper: float
    method: str

    def __post_init__(self) -> None:
        if not 0.0 <= self.lower <= self.upper <= 1.0:
            raise ValueError("need 0 <= lower <= upper <= 1")


def quantile_with_se(samples: np.ndarray, p: float) -> Tuple[float, float]:
    """Empirical p-quantile and an order-statistic standard error.

    The se comes from the binomial order-statistic interval: the spread of
    the order statistics k +- z sqrt(n p (1-p)) divided by 2z.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 samples")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    k = min(n - 1, max(0, int(np.ceil(p * n)) - 1))
    z = 1.959964
    d = max(1, int(round(z * np.sqrt(n * p * (1.0 - p)))))
    lo = x[max(0, k - d)]
    hi = x[min(n - 1, k + d)]
    return float(x[k]), float((hi - lo) / (2.0 * z))


def estimate_sup_second_moment(
    sampler: Sampler, replications: int, seed: SeedSpec
) -> MomentEstimate:
    """Monte Carlo E[sup^2] for a sampler of sup values."""
    if replications < 1000:
        raise ValueError("second-moment estimation needs >= 1000 replications")
    sq = np.empty(replications)
    for i in range(replications):
        sq[i] = sampler(seed.stream(i)) ** 2
    return MomentEstimate(
        value=float(sq.mean()),
        mc_se=float(sq.std(ddof=1) / np.sqrt(replications)),
        replications=replications,
    )


def sheet_sup_quantile(
    alpha: float,
    grids: Tuple[Grid1D, Grid1D],
    replications: int,
    seed: SeedSpec,
    dtype=np.float32,
) -> QuantileEstimate:
    """Upper-alpha quantile of sup |Brownian sheet| over the product grid."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if replications < 1000:
        raise ValueError("sheet quantiles need >= 1000 replications")
    s_grid, t_grid = grids
    sups = sheet_sup_samples(s_grid, t_grid, seed, replications, dtype=dtype)
    point, se = quantile_with_se(sups, 1.0 - alpha)
    return QuantileEstimate(
        level=alpha,
        point=point,
        mc_se=se,
        replications=replications,
        grid_resolution=min(s_grid.count, t_grid.count),
    )


def reflection_sandwich(lam: float) -> TailBound:
    """Tail of the time-extended sup between 1x and 2x the motion tail."""
    base = ks_abs_sup_survival(lam)
    return TailBound(
        lam=lam, lower=base, upper=min(1.0, 2.0 * base), method="reflection_sandwich"
    )


def variance_measure_sigma2(
    sampler_phi: Sampler,
    sampler_base: Sampler,
    replications: int,
    seed: SeedSpec,
) -> float:
    """Ratio of median squared sups: transformed process over base process.

    Both samplers see identical derived streams per replicate (common
    random numbers), so a pathwise scaling phi = c * base returns c**2
    exactly.
    """
    if replications < 100:
        raise ValueError("variance measure needs >= 100 replications")
    phi_sq = np.empty(replications)
    base_sq = np.empty(replications)
    for i in range(replications):
        phi_sq[i] = sampler_phi(seed.stream(i)) ** 2
        base_sq[i] = sampler_base(seed.stream(i)) ** 2
    med_base = float(np.median(base_sq))
    if med_base <= 0.0:
        raise ValueError("base process has degenerate (zero) median squared sup")
    return float(np.median(phi_sq) / med_base)
