"""Bridge between positive density grids and zero-integral log-ratio fields.

Densities on a rectangle, identified up to a positive factor, map
one-to-one onto square-integrable functions with zero integral through
the centred log-ratio (clr) transform: take logs, subtract the mean.
This module implements the discrete transform pair, the vector
operations of the density space (pointwise product and power), geometric
marginals, and the integrated square error metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import MeshMismatchError

__all__ = [
    "HistogramGrid",
    "ClrField",
    "DensityGrid",
    "Density1D",
    "grid_integral",
    "discrete_clr",
    "inv_clr",
    "clr_density",
    "perturb",
    "power",
    "geometric_marginals",
    "ise",
]


def _check_midpoints(mid: np.ndarray, name: str) -> None:
    if mid.ndim != 1 or mid.size < 2:
        raise ValueError(f"{name} needs at least two midpoints")
    gaps = np.diff(mid)
    if np.any(gaps <= 0):
        raise ValueError(f"{name} midpoints must be strictly increasing")
    span = mid[-1] - mid[0]
    if np.max(np.abs(gaps - gaps[0])) > 1e-12 * max(span, 1.0):
        raise ValueError(f"{name} midpoints must be equispaced")


@dataclass(eq=False)
class HistogramGrid:
    """Equispaced bivariate histogram: class midpoints and frequencies.

    ``freq[i, j]`` counts observations in x-class ``i`` and y-class
    ``j``. Frequencies may contain zeros until imputation; the clr
    transform requires strict positivity.
    """

    x_mid: np.ndarray
    y_mid: np.ndarray
    freq: np.ndarray
    x_width: float
    y_width: float
    n_dropped: int = 0

    def __post_init__(self) -> None:
        self.x_mid = np.asarray(self.x_mid, dtype=float)
        self.y_mid = np.asarray(self.y_mid, dtype=float)
        self.freq = np.asarray(self.freq, dtype=float)
        _check_midpoints(self.x_mid, "x")
        _check_midpoints(self.y_mid, "y")
        if self.freq.shape != (self.x_mid.size, self.y_mid.size):
            raise ValueError(
                f"frequency shape {self.freq.shape} does not match midpoints "
                f"({self.x_mid.size}, {self.y_mid.size})"
            )
        if np.any(self.freq < 0) or not np.all(np.isfinite(self.freq)):
            raise ValueError("frequencies must be finite and nonnegative")


@dataclass(eq=False)
class ClrField:
    """Grid of centred log-ratio values; the grid mean is exactly zero."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x.size, self.y.size):
            raise ValueError("value grid shape does not match the axes")
        scale = max(1.0, float(np.max(np.abs(self.values), initial=0.0)))
        if abs(float(self.values.mean())) > 1e-12 * scale:
            raise ValueError("clr field must have zero grid mean")


@dataclass(eq=False)
class DensityGrid:
    """Positive grid with unit trapezoid integral over its rectangle."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.x.size, self.y.size):
            raise ValueError("value grid shape does not match the axes")
        if np.any(self.values <= 0):
            raise ValueError("density values must be strictly positive")
        total = grid_integral(self.x, self.y, self.values)
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"density must integrate to 1, got {total}")

    @classmethod
    def normalized(cls, x, y, values) -> "DensityGrid":
        """Rescale positive `values` to unit integral and wrap them."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        values = np.asarray(values, dtype=float)
        total = grid_integral(x, y, values)
        if not np.isfinite(total) or total <= 0:
            raise ValueError("values must have a positive finite integral")
        return cls(x, y, values / total)


@dataclass(eq=False)
class Density1D:
    """Positive one-variable grid with unit trapezoid integral."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)

    @classmethod
    def normalized(cls, grid, values) -> "Density1D":
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        return cls(grid, values / np.trapezoid(values, grid))


def grid_integral(x: np.ndarray, y: np.ndarray, values: np.ndarray) -> float:
    """Trapezoid integral of a value grid over its rectangle."""
    return float(np.trapezoid(np.trapezoid(values, y, axis=1), x))


def _require_same_mesh(f: DensityGrid, g: DensityGrid) -> None:
    if f.x.shape != g.x.shape or f.y.shape != g.y.shape or np.any(f.x != g.x) or np.any(
        f.y != g.y
    ):
        raise MeshMismatchError("density grids live on different meshes")


def discrete_clr(hist: HistogramGrid) -> ClrField:
    """Log frequencies centred by their arithmetic grid mean.

    Invariant under rescaling all frequencies by a common factor, so raw
    counts and relative frequencies give the same field.
    """
    if np.any(hist.freq <= 0):
        bad = np.argwhere(hist.freq <= 0)[0]
        raise ValueError(
            f"clr needs positive frequencies; bin ({bad[0]}, {bad[1]}) is not "
            "(impute zeros first)"
        )
    logs = np.log(hist.freq)
    return ClrField(hist.x_mid, hist.y_mid, logs - logs.mean())


def inv_clr(x, y, values) -> DensityGrid:
    """Exponentiate a log-ratio grid and rescale to unit integral.

    Values are shifted by their maximum before exponentiation so large
    fields cannot overflow; the shift is absorbed by the normalization.
    """
    values = np.asarray(values, dtype=float)
    raw = np.exp(values - values.max())
    return DensityGrid.normalized(x, y, raw)


def clr_density(density: DensityGrid) -> ClrField:
    """Centred log-ratio field of a density grid (arithmetic-mean centring)."""
    logs = np.log(density.values)
    return ClrField(density.x, density.y, logs - logs.mean())


def perturb(f: DensityGrid, g: DensityGrid) -> DensityGrid:
    """Density-space sum: pointwise product, renormalized."""
    _require_same_mesh(f, g)
    return DensityGrid.normalized(f.x, f.y, f.values * g.values)


def power(alpha: float, f: DensityGrid) -> DensityGrid:
    """Density-space scalar multiple: pointwise power, renormalized."""
    return DensityGrid.normalized(f.x, f.y, f.values**alpha)


def geometric_marginals(density: DensityGrid) -> tuple[Density1D, Density1D]:
    """Exp of the mean log-density over the other variable, per axis.

    These are the orthogonal projections of the density onto the
    one-variable subspaces; for a product density they recover the
    factors up to normalization.
    """
    logs = np.log(density.values)
    x_span = density.x[-1] - density.x[0]
    y_span = density.y[-1] - density.y[0]
    mean_over_y = np.trapezoid(logs, density.y, axis=1) / y_span
    mean_over_x = np.trapezoid(logs, density.x, axis=0) / x_span
    first = Density1D.normalized(density.x, np.exp(mean_over_y - mean_over_y.max()))
    second = Density1D.normalized(density.y, np.exp(mean_over_x - mean_over_x.max()))
    return first, second


def ise(f: DensityGrid, g: DensityGrid) -> float:
    """Integrated square error between two densities as Bayes-space distance.

    Computed in the log-ratio space: the squared L2 norm of the
    difference of log grids after centring it to zero integral
    (trapezoid rule throughout). Zero iff the grids agree up to a
    positive factor.
    """
    _require_same_mesh(f, g)
    diff = np.log(f.values) - np.log(g.values)
    area = (f.x[-1] - f.x[0]) * (f.y[-1] - f.y[0])
    centered = diff - grid_integral(f.x, f.y, diff) / area
    return max(0.0, grid_integral(f.x, f.y, centered**2))
