"""Gaussian limit-process simulators on finite grids.

Simulates Brownian motion, the Brownian bridge, the Brownian sheet, and
the partial-sum (time-indexed empirical-type) Gaussian process with a
user-supplied function-class covariance, all with exact finite-dimensional
distributions on the requested grid.  Sup statistics are over grid points
only; refinement converges to the continuum value from below.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .rng import SeedSpec

#: per-call allocation guard for sheet simulation (cells = len(s) * len(t))
MAX_SHEET_CELLS = 1 << 24


class GridSizeError(ValueError):
    """Requested grid exceeds the per-call memory budget."""


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("grid needs a non-empty 1-D array of points")
    return arr


@dataclass(frozen=True)
class Grid1D:
    """Strictly increasing evaluation points in (0, 1] ending at 1."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = _as_points(self.points)
        if not np.all(np.isfinite(pts)):
            raise ValueError("grid points must be finite")
        if np.any(pts <= 0.0) or np.any(pts > 1.0):
            raise ValueError("grid points must lie in (0, 1]")
        if pts.size > 1 and np.any(np.diff(pts) <= 0.0):
            raise ValueError("grid points must be strictly increasing")
        if pts[-1] != 1.0:
            raise ValueError("grid must end at 1.0")
        object.__setattr__(self, "points", pts)

    @property
    def count(self) -> int:
        return int(self.points.size)

    def spacings(self) -> np.ndarray:
        """Increment lengths, the first measured from 0."""
        return np.diff(self.points, prepend=0.0)


def dyadic_grid(k: int) -> Grid1D:
    """The 2**k-point grid {i / 2**k : i = 1..2**k}."""
    if not 0 <= k <= 26:
        raise ValueError("dyadic exponent out of range")
    n = 1 << k
    return Grid1D(np.arange(1, n + 1, dtype=float) / n)


#: default resolutions: paths 2**12 points, sheets 2**9 per axis
DEFAULT_PATH_GRID_EXP = 12
DEFAULT_SHEET_GRID_EXP = 9


@dataclass(frozen=True)
class PathGrid:
    """A simulated path: values aligned with a Grid1D."""

    grid: Grid1D
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.count,):
            raise ValueError("values must align with the grid, one per point")
        if not np.all(np.isfinite(vals)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class SheetGrid:
    """A simulated sheet: values indexed by (s, t) grid points."""

    s_grid: Grid1D
    t_grid: Grid1D
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.s_grid.count, self.t_grid.count):
            raise ValueError("values must have shape (len(s_grid), len(t_grid))")
        if not np.all(np.isfinite(vals)):
            raise ValueError("sheet values must be finite")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class CovMatrix:
    """Covariance of a finite function class: symmetric PSD matrix."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.entries, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
            raise ValueError("covariance must be a non-empty square matrix")
        if not np.all(np.isfinite(mat)):
            raise ValueError("covariance entries must be finite")
        if not np.allclose(mat, mat.T, rtol=0.0, atol=1e-12):
            raise ValueError("covariance must be symmetric")
        mat = 0.5 * (mat + mat.T)
        eigvals = np.linalg.eigvalsh(mat)
        scale = float(np.max(np.abs(eigvals))) if mat.shape[0] else 0.0
        floor = -1e-10 * max(scale, 1.0)
        if eigvals[0] < floor:
            raise ValueError(
                f"covariance is not positive semidefinite: eigenvalue {eigvals[0]:g}"
            )
        object.__setattr__(self, "entries", mat)

    @property
    def dim(self) -> int:
        return int(self.entries.shape[0])

    def factor(self) -> np.ndarray:
        """L with L @ L.T = entries (eigen factor, tolerant of zero modes)."""
        w, v = np.linalg.eigh(self.entries)
        return v * np.sqrt(np.clip(w, 0.0, None))


# ---------------------------------------------------------------------------
# core draws (rng-level, shared by the seeded ops and the sampler factories)


def _bm_values(rng: np.random.Generator, spacings: np.ndarray) -> np.ndarray:
    steps = rng.standard_normal(spacings.size) * np.sqrt(spacings)
    return np.cumsum(steps)


def _sheet_scale(ds: np.ndarray, dt: np.ndarray, dtype) -> np.ndarray:
    return np.sqrt(np.outer(ds, dt)).astype(dtype, copy=False)


def _sheet_values(rng: np.random.Generator, scale: np.ndarray) -> np.ndarray:
    incr = rng.standard_normal(scale.shape, dtype=scale.dtype)
    incr *= scale
    np.cumsum(incr, axis=0, out=incr)
    np.cumsum(incr, axis=1, out=incr)
    return incr


def _kiefer_values(
    rng: np.random.Generator, spacings: np.ndarray, factor: np.ndarray
) -> np.ndarray:
    z = rng.standard_normal((spacings.size, factor.shape[0]))
    incr = (z @ factor.T) * np.sqrt(spacings)[:, None]
    return np.cumsum(incr, axis=0)


# ---------------------------------------------------------------------------
# seeded operations


def simulate_brownian_motion(
    grid: Grid1D, seed: SeedSpec, replicate_index: int = 0
) -> PathGrid:
    """Standard Brownian motion on the grid (exact joint law)."""
    rng = seed.stream(replicate_index)
    return PathGrid(grid, _bm_values(rng, grid.spacings()))


def simulate_brownian_bridge(
    grid: Grid1D, seed: SeedSpec, replicate_index: int = 0
) -> PathGrid:
    """Brownian bridge on the grid; the value at 1 is exactly 0."""
    rng = seed.stream(replicate_index)
    bm = _bm_values(rng, grid.spacings())
    return PathGrid(grid, bm - grid.points * bm[-1])


def simulate_brownian_sheet(
    s_grid: Grid1D, t_grid: Grid1D, seed: SeedSpec, replicate_index: int = 0
) -> SheetGrid:
    """Brownian sheet on the product grid, covariance (s ^ s')(t ^ t')."""
    if s_grid.count < 2 or t_grid.count < 2:
        raise ValueError("sheet simulation needs at least 2 points per axis")
    cells = s_grid.count * t_grid.count
    if cells > MAX_SHEET_CELLS:
        raise GridSizeError(
            f"sheet grid has {cells} cells, budget is {MAX_SHEET_CELLS}"
        )
    rng = seed.stream(replicate_index)
    scale = _sheet_scale(s_grid.spacings(), t_grid.spacings(), np.float64)
    return SheetGrid(s_grid, t_grid, _sheet_values(rng, scale))


def simulate_kiefer_muller(
    s_grid: Grid1D, cov: CovMatrix, seed: SeedSpec, replicate_index: int = 0
) -> np.ndarray:
    """Partial-sum Gaussian process over a function class.

    Returns an (len(s_grid), k) array; column j tracks function j.  The
    covariance between rows at s and s' is (s ^ s') * cov.entries.
    """
    rng = seed.stream(replicate_index)
    return _kiefer_values(rng, s_grid.spacings(), cov.factor())


def sup_abs(path_or_sheet: Union[PathGrid, SheetGrid, np.ndarray]) -> float:
    """max |value| over the grid."""
    if isinstance(path_or_sheet, (PathGrid, SheetGrid)):
        vals = path_or_sheet.values
    else:
        vals = np.asarray(path_or_sheet, dtype=float)
    if vals.size == 0:
        raise ValueError("cannot take a sup over an empty value set")
    return float(np.max(np.abs(vals)))


# ---------------------------------------------------------------------------
# sampler factories: callables rng -> sup value, for the Monte Carlo ops


def bm_sup_sampler(grid: Grid1D) -> Callable[[np.random.Generator], float]:
    spac = grid.spacings()

    def sample(rng: np.random.Generator) -> float:
        return float(np.max(np.abs(_bm_values(rng, spac))))

    return sample


def bridge_sup_sampler(grid: Grid1D) -> Callable[[np.random.Generator], float]:
    spac = grid.spacings()
    pts = grid.points

    def sample(rng: np.random.Generator) -> float:
        bm = _bm_values(rng, spac)
        return float(np.max(np.abs(bm - pts * bm[-1])))

    return sample


def sheet_sup_sampler(
    s_grid: Grid1D, t_grid: Grid1D, dtype=np.float64
) -> Callable[[np.random.Generator], float]:
    if s_grid.count < 2 or t_grid.count < 2:
        raise ValueError("sheet sampler needs at least 2 points per axis")
    cells = s_grid.count * t_grid.count
    if cells > MAX_SHEET_CELLS:
        raise GridSizeError(
            f"sheet grid has {cells} cells, budget is {MAX_SHEET_CELLS}"
        )
    scale = _sheet_scale(s_grid.spacings(), t_grid.spacings(), dtype)

    def sample(rng: np.random.Generator) -> float:
        vals = _sheet_values(rng, scale)
        np.abs(vals, out=vals)
        return float(vals.max())

    return sample


def kiefer_sup_sampler(
    s_grid: Grid1D, cov: CovMatrix
) -> Callable[[np.random.Generator], float]:
    spac = s_grid.spacings()
    factor = cov.factor()

    def sample(rng: np.random.Generator) -> float:
        return float(np.max(np.abs(_kiefer_values(rng, spac, factor))))

    return sample


def scaled_sampler(
    sampler: Callable[[np.random.Generator], float], c: float
) -> Callable[[np.random.Generator], float]:
    """c * sampler, pathwise (same rng consumption)."""
    return lambda rng: c * sampler(rng)


def sheet_sup_samples(
    s_grid: Grid1D,
    t_grid: Grid1D,
    seed: SeedSpec,
    replications: int,
    dtype=np.float32,
) -> np.ndarray:
    """Sup |sheet| draws for tail/quantile Monte Carlo.

    One derived stream per replicate; float32 by default for throughput
    (the dtype is part of the reproducibility contract).
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    sampler = sheet_sup_sampler(s_grid, t_grid, dtype=dtype)
    out = np.empty(replications)
    for i in range(replications):
        out[i] = sampler(seed.stream(i))
    return out
