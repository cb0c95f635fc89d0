"""Penalized tensor-product smoothing in the zero-integral spline space.

Fits a bivariate spline with zero integral to values observed on a grid
by minimizing residual sum of squares plus ``rho`` times the integrated
squared mixed derivative of the interaction part. The coefficient layout
separates an interaction matrix from two marginal coefficient vectors;
marginal blocks are never penalized.

All vectorizations are column-major (``order='F'``), matching the
Kronecker factor order ``kron(y_factor, x_factor)`` used throughout.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .exceptions import (
    RankDeficiencyError,
    SchoenbergWhitneyError,
    SmoothingConditionError,
)
from .knots import (
    ExtendedKnots,
    KnotConfig,
    derivative_transform,
    eval_bspline_basis,
    extend_knots,
    gram_matrix,
    reduce_degree,
)
from .zbbasis import eval_zb_basis, zb_map

__all__ = [
    "TensorBasisSpec",
    "ZBCoeffs",
    "BCoeffs",
    "PenaltyConfig",
    "FitResult",
    "SWReport",
    "ScanResult",
    "assemble_design",
    "assemble_penalty",
    "axis_penalty_factor",
    "fit",
    "gcv_scan",
    "hat_matrix",
    "validate_sw",
    "zb_to_b",
    "eval_spline",
    "eval_derivative",
]


@dataclass(frozen=True)
class TensorBasisSpec:
    """Tensor-product spline space: one knot configuration per axis."""

    x: KnotConfig
    y: KnotConfig

    @cached_property
    def x_knots(self) -> ExtendedKnots:
        return extend_knots(self.x)

    @cached_property
    def y_knots(self) -> ExtendedKnots:
        return extend_knots(self.y)

    @property
    def n_zb_x(self) -> int:
        return self.x.n_zb

    @property
    def n_zb_y(self) -> int:
        return self.y.n_zb

    @property
    def n_interaction(self) -> int:
        return self.n_zb_x * self.n_zb_y

    @property
    def dim(self) -> int:
        """Dimension of the zero-integral tensor spline space."""
        return self.n_interaction + self.n_zb_x + self.n_zb_y


@dataclass
class ZBCoeffs:
    """Coefficients of a zero-integral tensor spline.

    ``interaction`` weights the products of zero-integral basis functions
    in both variables; ``x_marginal`` / ``y_marginal`` weight the
    functions depending on one variable only. The packed block matrix has
    an exact 0 in its lower-right corner.
    """

    interaction: np.ndarray
    x_marginal: np.ndarray
    y_marginal: np.ndarray

    def __post_init__(self) -> None:
        self.interaction = np.asarray(self.interaction, dtype=float)
        self.x_marginal = np.asarray(self.x_marginal, dtype=float)
        self.y_marginal = np.asarray(self.y_marginal, dtype=float)
        nx, ny = self.interaction.shape
        if self.x_marginal.shape != (nx,) or self.y_marginal.shape != (ny,):
            raise ValueError(
                "marginal coefficient lengths must match the interaction block: "
                f"{self.interaction.shape} vs {self.x_marginal.shape}, {self.y_marginal.shape}"
            )

    def packed(self) -> np.ndarray:
        """Block matrix [[interaction, x_marginal], [y_marginal^T, 0]]."""
        nx, ny = self.interaction.shape
        out = np.zeros((nx + 1, ny + 1))
        out[:nx, :ny] = self.interaction
        out[:nx, ny] = self.x_marginal
        out[nx, :ny] = self.y_marginal
        return out

    @classmethod
    def from_packed(cls, packed: np.ndarray) -> "ZBCoeffs":
        packed = np.asarray(packed, dtype=float)
        nx, ny = packed.shape[0] - 1, packed.shape[1] - 1
        return cls(packed[:nx, :ny], packed[:nx, ny], packed[nx, :ny])

    @classmethod
    def zeros(cls, spec: TensorBasisSpec) -> "ZBCoeffs":
        return cls(
            np.zeros((spec.n_zb_x, spec.n_zb_y)),
            np.zeros(spec.n_zb_x),
            np.zeros(spec.n_zb_y),
        )


@dataclass
class BCoeffs:
    """Equivalent ordinary B-spline coefficient matrix of the same spline."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=float)


@dataclass(frozen=True)
class PenaltyConfig:
    """Roughness penalty: mixed-derivative orders and smoothing weight.

    By construction only the interaction block is penalized; setting
    ``marginal_rho`` adds a separate optional smoothness penalty on the
    two marginal coefficient blocks (off by default).
    """

    x_order: int
    y_order: int
    rho: float
    marginal_rho: float = 0.0

    def __post_init__(self) -> None:
        if self.x_order < 0 or self.y_order < 0:
            raise ValueError("derivative orders must be nonnegative")
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if self.marginal_rho < 0:
            raise ValueError(f"marginal_rho must be nonnegative, got {self.marginal_rho}")


@dataclass
class FitResult:
    """Solved smoothing spline plus the diagnostics used by GCV."""

    coeffs: ZBCoeffs
    rho: float
    gcv: float
    hat_trace: float
    rss: float
    n_obs: int


@dataclass
class SWReport:
    """Per-axis Schoenberg-Whitney diagnostic.

    ``x_empty`` / ``y_empty`` list basis-function indices (0-based on
    that axis) whose support contains no data abscissa.
    """

    x_ok: bool
    y_ok: bool
    x_empty: tuple[int, ...]
    y_empty: tuple[int, ...]

    @property
    def passed(self) -> bool:
        return self.x_ok and self.y_ok


@dataclass
class ScanResult:
    """Smoothing-weight scan: GCV value per grid point and the winner."""

    rhos: np.ndarray
    gcv_values: np.ndarray
    best_rho: float
    best_fit: FitResult


def _check_penalty_orders(spec: TensorBasisSpec, x_order: int, y_order: int) -> None:
    if not 0 <= x_order <= spec.x.degree - 1:
        raise ValueError(
            f"x derivative order must be in [0, {spec.x.degree - 1}], got {x_order}"
        )
    if not 0 <= y_order <= spec.y.degree - 1:
        raise ValueError(
            f"y derivative order must be in [0, {spec.y.degree - 1}], got {y_order}"
        )


def validate_sw(spec: TensorBasisSpec, x, y) -> SWReport:
    """Check that each basis-function support holds at least one abscissa.

    Equivalent, per axis, to full column rank of the collocation matrix;
    both axes passing guarantees a unique smoothing spline for any
    positive ``rho``.
    """

    def empty_columns(knots, pts):
        coll = eval_bspline_basis(knots, pts)
        return tuple(np.flatnonzero(coll.max(axis=0) <= 1e-14).tolist())

    x_empty = empty_columns(spec.x_knots, np.asarray(x, dtype=float))
    y_empty = empty_columns(spec.y_knots, np.asarray(y, dtype=float))
    return SWReport(not x_empty, not y_empty, x_empty, y_empty)


def assemble_design(spec: TensorBasisSpec, x, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Design blocks for grid observations at abscissae ``x`` (m) and ``y`` (n).

    Returns ``(interaction, x_part, y_part)`` with shapes
    ``(m*n, n_interaction)``, ``(m*n, n_zb_x)``, ``(m*n, n_zb_y)``; rows
    are ordered like the column-major vectorization of an ``(m, n)``
    value grid.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = x.size, y.size
    if m * n <= spec.dim:
        raise SmoothingConditionError(
            f"need more observations than basis functions: {m}*{n} <= {spec.dim}"
        )
    report = validate_sw(spec, x, y)
    if not report.passed:
        axis = "x" if not report.x_ok else "y"
        empty = report.x_empty if not report.x_ok else report.y_empty
        raise SchoenbergWhitneyError(
            f"{axis}-axis basis functions {list(empty)} have no data in their support"
        )
    zx = eval_zb_basis(spec.x_knots, x)
    zy = eval_zb_basis(spec.y_knots, y)
    interaction = np.kron(zy, zx)
    x_part = np.kron(np.ones((n, 1)), zx)
    y_part = np.kron(zy, np.ones((m, 1)))
    return interaction, x_part, y_part


def axis_penalty_factor(knots: ExtendedKnots, order: int) -> np.ndarray:
    """One-axis quadratic form: mixing matrix, derivative map, then Gram.

    For ``order = 0`` this is the Gram matrix of the zero-integral basis
    itself (used for norms); for ``order >= 1`` it is the building block
    of the roughness penalty.
    """
    kd = zb_map(knots)
    deriv = derivative_transform(knots, order)
    gram = gram_matrix(knots, order)
    factor = kd @ deriv.T @ gram @ deriv @ kd.T
    return 0.5 * (factor + factor.T)


def assemble_penalty(spec: TensorBasisSpec, x_order: int, y_order: int) -> np.ndarray:
    """Penalty matrix on the vectorized interaction block.

    The quadratic form of the returned matrix with the column-major
    interaction coefficients equals the integral over the domain of the
    squared mixed ``(x_order, y_order)`` derivative of the interaction
    part. Symmetric positive semi-definite, shape
    ``(n_interaction, n_interaction)``.
    """
    _check_penalty_orders(spec, x_order, y_order)
    return np.kron(
        axis_penalty_factor(spec.y_knots, y_order),
        axis_penalty_factor(spec.x_knots, x_order),
    )


class _Workspace:
    """Matrices shared by every smoothing weight on one dataset."""

    def __init__(
        self,
        spec: TensorBasisSpec,
        values,
        x,
        y,
        x_order: int,
        y_order: int,
        marginal_rho: float = 0.0,
    ):
        values = np.asarray(values, dtype=float)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if values.shape != (x.size, y.size):
            raise ValueError(
                f"value grid shape {values.shape} does not match abscissae ({x.size}, {y.size})"
            )
        _check_penalty_orders(spec, x_order, y_order)
        self.spec = spec
        self._x = x
        self._y = y
        self.design = np.hstack(assemble_design(spec, x, y))
        self.gram = self.design.T @ self.design
        self.penalty = assemble_penalty(spec, x_order, y_order)
        self.marginal_rho = marginal_rho
        if marginal_rho > 0:
            self.marginal_penalty_x = axis_penalty_factor(spec.x_knots, x_order)
            self.marginal_penalty_y = axis_penalty_factor(spec.y_knots, y_order)
        self.observed = values.ravel(order="F")
        self.rhs = self.design.T @ self.observed
        self.n_obs = self.observed.size

    def system(self, rho: float) -> np.ndarray:
        block = self.spec.n_interaction
        out = self.gram.copy()
        out[:block, :block] += rho * self.penalty
        if self.marginal_rho > 0:
            vx = slice(block, block + self.spec.n_zb_x)
            uy = slice(block + self.spec.n_zb_x, None)
            out[vx, vx] += self.marginal_rho * self.marginal_penalty_x
            out[uy, uy] += self.marginal_rho * self.marginal_penalty_y
        return out

    def _rank_message(self) -> str:
        zx = eval_zb_basis(self.spec.x_knots, self._x)
        zy = eval_zb_basis(self.spec.y_knots, self._y)
        bad = [
            axis
            for axis, coll in (("x", zx), ("y", zy))
            if np.linalg.matrix_rank(coll) < coll.shape[1]
        ]
        where = f"axis {' and '.join(bad)}" if bad else "no single axis"
        return (
            f"penalized normal equations are not positive definite; "
            f"rank deficiency traced to {where} "
            f"({self.n_obs} observations, dimension {self.spec.dim})"
        )

    def factor(self, rho: float):
        system = self.system(rho)
        eigs = np.linalg.eigvalsh(system)
        if eigs[0] <= 0 or eigs[-1] > 1e12 * max(eigs[0], np.finfo(float).tiny):
            jitter = 1e-10 * np.trace(system) / system.shape[0]
            warnings.warn(
                f"normal equations ill-conditioned at rho={rho:g}; "
                f"adding diagonal jitter {jitter:.3e}",
                stacklevel=3,
            )
            system = system + jitter * np.eye(system.shape[0])
        try:
            return cho_factor(system, lower=True), system
        except LinAlgError as exc:
            raise RankDeficiencyError(self._rank_message()) from exc

    def solve(self, rho: float) -> FitResult:
        factor, system = self.factor(rho)
        solution = cho_solve(factor, self.rhs)
        residual = self.observed - self.design @ solution
        rss = float(residual @ residual)
        hat_trace = float(np.trace(cho_solve(factor, self.gram)))
        mn = self.n_obs
        gcv = (rss / mn) / (1.0 - hat_trace / mn) ** 2
        block = self.spec.n_interaction
        interaction = solution[:block].reshape(
            (self.spec.n_zb_x, self.spec.n_zb_y), order="F"
        )
        coeffs = ZBCoeffs(
            interaction,
            solution[block : block + self.spec.n_zb_x],
            solution[block + self.spec.n_zb_x :],
        )
        return FitResult(coeffs, float(rho), float(gcv), hat_trace, rss, mn)


def fit(spec: TensorBasisSpec, values, x, y, penalty: PenaltyConfig) -> FitResult:
    """Solve the penalized least-squares system for one smoothing weight.

    Parameters
    ----------
    spec : TensorBasisSpec
    values : ndarray of shape (m, n)
        Observed grid values (typically a clr-transformed histogram).
    x, y : array_like
        Grid abscissae of lengths m and n.
    penalty : PenaltyConfig

    Returns
    -------
    FitResult
        Unique minimizer plus GCV diagnostics at ``penalty.rho``.
    """
    ws = _Workspace(
        spec, values, x, y, penalty.x_order, penalty.y_order, penalty.marginal_rho
    )
    return ws.solve(penalty.rho)


def gcv_scan(
    spec: TensorBasisSpec,
    values,
    x,
    y,
    x_order: int,
    y_order: int,
    rho_grid,
    marginal_rho: float = 0.0,
) -> ScanResult:
    """Fit every smoothing weight in ``rho_grid`` and pick the GCV argmin.

    Exact ties go to the smaller weight. Weights whose fit fails are
    skipped with a warning; if every fit fails the last error is
    re-raised.
    """
    rhos = np.sort(np.asarray(rho_grid, dtype=float))
    if rhos.size == 0 or np.any(rhos <= 0):
        raise ValueError("rho grid must be non-empty and positive")
    ws = _Workspace(spec, values, x, y, x_order, y_order, marginal_rho)
    gcvs = np.full(rhos.size, np.nan)
    fits: list[FitResult | None] = [None] * rhos.size
    last_error: Exception | None = None
    for i, rho in enumerate(rhos):
        try:
            fits[i] = ws.solve(rho)
            gcvs[i] = fits[i].gcv
        except RankDeficiencyError as exc:  # pragma: no cover - defensive
            last_error = exc
            warnings.warn(f"fit failed at rho={rho:g}: {exc}", stacklevel=2)
    if np.all(np.isnan(gcvs)):
        if last_error is not None:
            raise last_error
        raise RankDeficiencyError("all fits in the rho grid failed")
    best = int(np.nanargmin(gcvs))  # first minimum = smallest rho on the sorted grid
    return ScanResult(rhos, gcvs, float(rhos[best]), fits[best])


def hat_matrix(spec: TensorBasisSpec, values, x, y, penalty: PenaltyConfig) -> np.ndarray:
    """Materialized projection matrix from observations to fitted values.

    Meant for small instances and tests; `fit` computes its trace without
    forming it.
    """
    ws = _Workspace(
        spec, values, x, y, penalty.x_order, penalty.y_order, penalty.marginal_rho
    )
    factor, _ = ws.factor(penalty.rho)
    return ws.design @ cho_solve(factor, ws.design.T)


def zb_to_b(spec: TensorBasisSpec, coeffs: ZBCoeffs) -> BCoeffs:
    """Convert zero-integral-basis coefficients to B-spline coefficients.

    The two representations evaluate to the same surface everywhere on
    the domain.
    """
    if coeffs.interaction.shape != (spec.n_zb_x, spec.n_zb_y):
        raise ValueError(
            f"coefficient shape {coeffs.interaction.shape} does not match spec "
            f"({spec.n_zb_x}, {spec.n_zb_y})"
        )
    kdx = zb_map(spec.x_knots)
    kdy = zb_map(spec.y_knots)
    core = kdx.T @ coeffs.interaction @ kdy
    from_x = kdx.T @ coeffs.x_marginal
    from_y = kdy.T @ coeffs.y_marginal
    return BCoeffs(core + from_x[:, None] + from_y[None, :])


def eval_spline(spec: TensorBasisSpec, coeffs, x, y) -> np.ndarray:
    """Evaluate the spline on the tensor grid ``x`` times ``y``.

    Accepts either coefficient representation; returns shape
    ``(len(x), len(y))``.
    """
    if isinstance(coeffs, ZBCoeffs):
        zx = eval_zb_basis(spec.x_knots, x)
        zy = eval_zb_basis(spec.y_knots, y)
        zx_bar = np.hstack([zx, np.ones((zx.shape[0], 1))])
        zy_bar = np.hstack([zy, np.ones((zy.shape[0], 1))])
        return zx_bar @ coeffs.packed() @ zy_bar.T
    if isinstance(coeffs, BCoeffs):
        bx = eval_bspline_basis(spec.x_knots, x)
        by = eval_bspline_basis(spec.y_knots, y)
        return bx @ coeffs.matrix @ by.T
    raise TypeError(f"unsupported coefficient type {type(coeffs).__name__}")


def eval_derivative(
    spec: TensorBasisSpec, coeffs: ZBCoeffs, x_order: int, y_order: int, x, y
) -> np.ndarray:
    """Mixed partial derivative surface of the interaction part.

    For orders >= 1 in both variables this equals the same mixed partial
    of the full spline, because the one-variable terms are annihilated.
    ``x_order = y_order = 0`` returns the interaction part itself.
    """
    if not isinstance(coeffs, ZBCoeffs):
        raise TypeError("eval_derivative needs the zero-integral representation")
    _check_penalty_orders(spec, x_order, y_order)
    kdx = zb_map(spec.x_knots)
    kdy = zb_map(spec.y_knots)
    sx = derivative_transform(spec.x_knots, x_order)
    sy = derivative_transform(spec.y_knots, y_order)
    mat = sx @ kdx.T @ coeffs.interaction @ kdy @ sy.T
    bx = eval_bspline_basis(reduce_degree(spec.x_knots, x_order), x)
    by = eval_bspline_basis(reduce_degree(spec.y_knots, y_order), y)
    return bx @ mat @ by.T
