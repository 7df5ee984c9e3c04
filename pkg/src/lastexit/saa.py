"""Sample-average optimization of a semideviation risk, and how many
scenarios buy a fixed-width estimate of its optimal value.

The risk of a loss Z is E Z + lam * E[Z - EZ]_+ with lam in [0, 1].  The
optimal value of the sampled problem obeys a scalar CLT whose variance
has a closed pilot-estimable form; the sizing rule turns that variance
into the scenario count N(alpha, eps) after which the running optimal
value stays within eps of the truth with probability about 1 - alpha.
A classical per-accuracy bound is included for comparison.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .limit_laws import steps_for_width
from .rng import SeedSpec


class NonFiniteLossError(ValueError):
    """A loss evaluation produced nan/inf."""

    def __init__(self, decision, index: int):
        self.decision = decision
        self.index = index
        super().__init__(
            f"loss at decision {decision!r} is not finite (first bad scenario {index})"
        )


def semideviation_risk(samples, lam: float) -> float:
    """mean + lam * mean of the positive deviations from the mean."""
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("samples must be a non-empty 1-D array")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lam must lie in [0, 1]")
    m = float(x.mean())
    return m + lam * float(np.clip(x - m, 0.0, None).mean())


@dataclass(frozen=True)
class RiskProblem:
    """Finite decision grid, vectorized loss, scenario sampler, risk weight."""

    decision_grid: np.ndarray
    loss: Callable[[float, np.ndarray], np.ndarray]
    scenario_sampler: Callable[[np.random.Generator, int], np.ndarray]
    lam: float

    def __post_init__(self) -> None:
        grid = np.asarray(self.decision_grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("decision_grid must be a non-empty 1-D array")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        object.__setattr__(self, "decision_grid", grid)


@dataclass(frozen=True)
class SAAResult:
    n: int
    x_hat: float
    v_hat: float


def saa_solve(
    problem, n: int, seed: SeedSpec, replicate_index: int = 0
) -> SAAResult:
    """Minimize the empirical risk over the grid on one shared scenario set.

    Ties break to the smallest grid index.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = seed.stream(replicate_index)
    xi = problem.scenario_sampler(rng, n)
    best_x = None
    best_v = math.inf
    for x in problem.decision_grid:
        g = np.asarray(problem.loss(float(x), xi), dtype=float)
        if not np.all(np.isfinite(g)):
            raise NonFiniteLossError(float(x), int(np.argmax(~np.isfinite(g))))
        v = semideviation_risk(g, problem.lam)
        if v < best_v:
            best_v = v
            best_x = float(x)
    return SAAResult(n=int(n), x_hat=best_x, v_hat=float(best_v))


def sigma2_saa(
    problem,
    x_star: float,
    n_pilot: int,
    seed: SeedSpec,
    paper_literal: bool = False,
) -> float:
    """Pilot plug-in for the optimal-value CLT variance at x_star.

    Estimates EG and alpha* = P(G <= EG) from the pilot, then takes the
    sample variance of G + lam alpha* [G - EG]_+ + lam (1 - alpha*) times
    the opposite part — [EG - G]_+ by default, or the literal-variant
    [-G - EG]_+ under ``paper_literal``.
    """
    if n_pilot < 2:
        raise ValueError("n_pilot must be >= 2 (>= 10**4 recommended)")
    rng = seed.stream(0)
    xi = problem.scenario_sampler(rng, n_pilot)
    g = np.asarray(problem.loss(float(x_star), xi), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteLossError(float(x_star), int(np.argmax(~np.isfinite(g))))
    eg = float(g.mean())
    alpha_star = float(np.mean(g <= eg))
    plus = np.clip(g - eg, 0.0, None)
    minus = np.clip((-g - eg) if paper_literal else (eg - g), 0.0, None)
    t = g + problem.lam * alpha_star * plus + problem.lam * (1.0 - alpha_star) * minus
    var = float(t.var(ddof=1))
    if var == 0.0:
        warnings.warn("degenerate loss: zero variance at x_star", stacklevel=2)
    return var


def sample_size_n(
    alpha: float, eps: float, sigma2: float, paper_literal: bool = False
) -> int:
    """Scenario count ceil(sigma2 * inv_survival(alpha/2)^2 / eps^2).

    Under ``paper_literal`` the level argument is sqrt(alpha)/2.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    level = math.sqrt(alpha) / 2.0 if paper_literal else alpha / 2.0
    return max(1, math.ceil(steps_for_width(sigma2, eps, level)))


def shapiro_size(c1: float, c2: float, alpha: float, eps: float) -> int:
    """Classical per-accuracy bound ceil((c1/eps^2)(log(c2/eps) + log(1/alpha)))."""
    if not (np.isfinite(c1) and c1 > 0.0):
        raise ValueError("c1 must be positive")
    if not (np.isfinite(c2) and c2 > 0.0):
        raise ValueError("c2 must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if not (np.isfinite(eps) and eps > 0.0):
        raise ValueError("eps must be positive")
    if not c2 / eps > 1.0:
        raise ValueError("need c2/eps > 1 so the log term is positive")
    return max(1, math.ceil((c1 / eps**2) * (math.log(c2 / eps) + math.log(1.0 / alpha))))


# ---------------------------------------------------------------------------
# finite-support problems: exact oracles and sequential coverage


@dataclass(frozen=True)
class FiniteScenarioProblem:
    """Risk problem whose scenario law has known finite support."""

    decision_grid: np.ndarray
    loss: Callable[[float, np.ndarray], np.ndarray]
    support: np.ndarray
    probs: np.ndarray
    lam: float
    name: str = ""

    def __post_init__(self) -> None:
        grid = np.asarray(self.decision_grid, dtype=float)
        sup = np.asarray(self.support, dtype=float)
        pr = np.asarray(self.probs, dtype=float)
        if grid.ndim != 1 or grid.size == 0:
            raise ValueError("decision_grid must be a non-empty 1-D array")
        if sup.ndim != 1 or sup.size == 0 or pr.shape != sup.shape:
            raise ValueError("support and probs must be matching 1-D arrays")
        if np.any(pr < 0.0) or abs(pr.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        object.__setattr__(self, "decision_grid", grid)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "probs", pr)

    def scenario_sampler(self, rng: np.random.Generator, n: int) -> np.ndarray:
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, rng.random(n), side="right")
        return self.support[np.minimum(idx, self.support.size - 1)]


def exact_risk(problem: FiniteScenarioProblem, x: float) -> float:
    """Risk at x computed from the known scenario law (no sampling)."""
    g = np.asarray(problem.loss(float(x), problem.support), dtype=float)
    eg = float(problem.probs @ g)
    return eg + problem.lam * float(problem.probs @ np.clip(g - eg, 0.0, None))


def exact_solution(problem: FiniteScenarioProblem):
    """(x_star, v): grid minimizer and optimal value, first index on ties."""
    risks = np.array([exact_risk(problem, x) for x in problem.decision_grid])
    j = int(np.argmin(risks))
    return float(problem.decision_grid[j]), float(risks[j])


def exact_sigma2(problem: FiniteScenarioProblem, paper_literal: bool = False) -> float:
    """Optimal-value CLT variance from the known law (no pilot)."""
    x_star, _ = exact_solution(problem)
    g = np.asarray(problem.loss(x_star, problem.support), dtype=float)
    eg = float(problem.probs @ g)
    alpha_star = float(problem.probs[g <= eg].sum())
    plus = np.clip(g - eg, 0.0, None)
    minus = np.clip((-g - eg) if paper_literal else (eg - g), 0.0, None)
    t = g + problem.lam * alpha_star * plus + problem.lam * (1.0 - alpha_star) * minus
    et = float(problem.probs @ t)
    return float(problem.probs @ (t - et) ** 2)


@dataclass(frozen=True)
class SequentialCoverage:
    """Coverage of |running optimal value - truth| < eps from n_start onward."""

    coverage: float
    mc_se: float
    n_start: int
    horizon: int
    replications: int
    last_violation: np.ndarray  # per replicate: last m with |v_hat_m - v| >= eps

    def coverage_from(self, start: int) -> float:
        """Coverage had the start index been ``start`` (same replicates)."""
        if start < 1:
            raise ValueError("start must be >= 1")
        return float(np.mean(self.last_violation < start))


def verify_sequential_coverage(
    problem: FiniteScenarioProblem,
    alpha: float,
    eps: float,
    horizon_multiple: float,
    replications: int,
    seed: SeedSpec,
    paper_literal: bool = False,
    n_start: Optional[int] = None,
) -> SequentialCoverage:
    """Monte Carlo check of the sizing rule against the exact optimum.

    v, x_star and the CLT variance come from exact enumeration over the
    finite support; each replicate then draws horizon_multiple * N
    scenarios and tracks the running optimal value for every prefix.
    """
    if replications < 500:
        raise ValueError("coverage verification needs >= 500 replications")
    if horizon_multiple < 1.0:
        raise ValueError("horizon_multiple must be >= 1")
    _, v = exact_solution(problem)
    sigma2 = exact_sigma2(problem, paper_literal=paper_literal)
    if n_start is None:
        n_start = sample_size_n(alpha, eps, sigma2, paper_literal=paper_literal)
    horizon = int(math.ceil(horizon_multiple * n_start))
    k = problem.support.size
    n_vec = np.arange(1, horizon + 1, dtype=float)
    losses = [
        np.asarray(problem.loss(float(x), problem.support), dtype=float)
        for x in problem.decision_grid
    ]
    for x, g in zip(problem.decision_grid, losses):
        if not np.all(np.isfinite(g)):
            raise NonFiniteLossError(float(x), int(np.argmax(~np.isfinite(g))))
    cum_probs = np.cumsum(problem.probs)

    last_violation = np.empty(replications, dtype=np.int64)
    for i in range(replications):
        rng = seed.stream(i)
        idx = np.searchsorted(cum_probs, rng.random(horizon), side="right")
        idx = np.minimum(idx, k - 1)
        onehot = np.zeros((horizon, k))
        onehot[np.arange(horizon), idx] = 1.0
        counts = np.cumsum(onehot, axis=0)
        v_hat = np.full(horizon, np.inf)
        for g in losses:
            means = (counts @ g) / n_vec
            pos = np.clip(g[None, :] - means[:, None], 0.0, None)
            risk = means + problem.lam * (counts * pos).sum(axis=1) / n_vec
            np.minimum(v_hat, risk, out=v_hat)
        bad = np.nonzero(np.abs(v_hat - v) >= eps)[0]
        last_violation[i] = int(bad[-1] + 1) if bad.size else 0

    p = float(np.mean(last_violation < n_start))
    return SequentialCoverage(
        coverage=p,
        mc_se=float(np.sqrt(p * (1.0 - p) / replications)),
        n_start=int(n_start),
        horizon=horizon,
        replications=replications,
        last_violation=last_violation,
    )


def toy_problem(name: str) -> FiniteScenarioProblem:
    """Built-in finite-support problems for studies and checks."""
    if name == "quadratic":
        return FiniteScenarioProblem(
            decision_grid=np.linspace(0.0, 1.0, 5),
            loss=lambda x, xi: (x - xi) ** 2,
            support=np.array([0.0, 0.5, 1.0]),
            probs=np.array([0.3, 0.4, 0.3]),
            lam=0.5,
            name="quadratic",
        )
    if name == "absolute":
        return FiniteScenarioProblem(
            decision_grid=np.array([0.0, 0.5, 1.0]),
            loss=lambda x, xi: np.abs(x - xi),
            support=np.array([0.0, 1.0]),
            probs=np.array([0.5, 0.5]),
            lam=1.0,
            name="absolute",
        )
    raise ValueError(f"unknown toy problem {name!r}")
