"""Extended knot sequences and univariate B-spline machinery.

This module provides the polynomial-spline substrate everything else is
built on: open (clamped) knot sequences, Cox-de Boor evaluation of the
B-spline basis, the banded matrices that map spline coefficients to
coefficients of derivatives, and Gram matrices of basis products computed
by per-span Gauss-Legendre quadrature (exact for piecewise polynomials).

Conventions
-----------
* A degree-``k`` basis on a domain ``[lo, hi]`` with ``g`` interior knots
  has ``g + k + 1`` members; the extended sequence repeats each endpoint
  ``k + 1`` times.
* Evaluation points lying exactly on an interior knot belong to the span
  to their right; the final span is right-closed so the partition of
  unity holds at ``hi``.
* Storage is 0-based: basis function ``j`` is supported on
  ``[values[j], values[j + degree + 1]]``. Texts that index the leftmost
  function as ``-degree`` map onto this layout with an offset of
  ``degree``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "KnotConfig",
    "ExtendedKnots",
    "extend_knots",
    "reduce_degree",
    "find_spans",
    "eval_bspline_basis",
    "derivative_transform",
    "gram_matrix",
    "span_quadrature",
]


@dataclass(frozen=True)
class KnotConfig:
    """One axis of a spline space: domain, interior knots and degree.

    Parameters
    ----------
    lo, hi : float
        Domain endpoints, ``lo < hi``.
    interior : tuple of float
        Strictly increasing knots strictly inside ``(lo, hi)``. May be
        empty.
    degree : int
        Polynomial degree of the basis, ``>= 0``.
    """

    lo: float
    hi: float
    interior: tuple[float, ...]
    degree: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "interior", tuple(float(t) for t in self.interior))
        if not self.lo < self.hi:
            raise ValueError(f"empty domain [{self.lo}, {self.hi}]")
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        inner = np.asarray(self.interior, dtype=float)
        if inner.size:
            if np.any(np.diff(inner) <= 0):
                raise ValueError("interior knots must be strictly increasing")
            if inner[0] <= self.lo or inner[-1] >= self.hi:
                raise ValueError(
                    f"interior knots must lie strictly inside ({self.lo}, {self.hi})"
                )

    @classmethod
    def equidistant(cls, lo: float, hi: float, n_interior: int, degree: int) -> "KnotConfig":
        """Config with ``n_interior`` equally spaced interior knots."""
        inner = np.linspace(lo, hi, n_interior + 2)[1:-1]
        return cls(lo, hi, tuple(inner), degree)

    @property
    def n_interior(self) -> int:
        return len(self.interior)

    @property
    def n_bspline(self) -> int:
        """Dimension of the full spline space on this axis."""
        return self.n_interior + self.degree + 1

    @property
    def n_zb(self) -> int:
        """Dimension of the zero-integral subspace on this axis."""
        return self.n_interior + self.degree


@dataclass(frozen=True, eq=False)
class ExtendedKnots:
    """Clamped knot sequence: ``degree + 1`` copies of each endpoint."""

    values: np.ndarray
    degree: int

    @property
    def lo(self) -> float:
        return float(self.values[0])

    @property
    def hi(self) -> float:
        return float(self.values[-1])

    @property
    def n_basis(self) -> int:
        return len(self.values) - self.degree - 1

    @property
    def n_interior(self) -> int:
        return len(self.values) - 2 * (self.degree + 1)

    @cached_property
    def breakpoints(self) -> np.ndarray:
        """Distinct knot values, i.e. the polynomial-piece boundaries."""
        return np.unique(self.values)


def extend_knots(cfg: KnotConfig) -> ExtendedKnots:
    """Build the clamped sequence for `cfg`.

    Returns the ``n_interior + 2*(degree+1)`` knots obtained by repeating
    each domain endpoint ``degree + 1`` times around the interior knots.
    """
    k = cfg.degree
    values = np.concatenate(
        [np.full(k + 1, cfg.lo), np.asarray(cfg.interior, dtype=float), np.full(k + 1, cfg.hi)]
    )
    return ExtendedKnots(values, k)


def reduce_degree(knots: ExtendedKnots, order: int) -> ExtendedKnots:
    """Knot sequence of the degree-lowered basis holding ``order``-th derivatives.

    Trims ``order`` knots from each end; the result is again a clamped
    sequence, for degree ``degree - order``, with the same interior knots.
    """
    if not 0 <= order <= knots.degree:
        raise ValueError(f"order must be in [0, {knots.degree}], got {order}")
    if order == 0:
        return knots
    return ExtendedKnots(knots.values[order:-order], knots.degree - order)


def find_spans(knots: ExtendedKnots, x: np.ndarray) -> np.ndarray:
    """Index ``j`` of the half-open span ``[t[j], t[j+1])`` containing each point.

    Points equal to an interior knot fall in the right span; ``x == hi``
    falls in the last nonempty span.
    """
    t = knots.values
    k = knots.degree
    idx = np.searchsorted(t, x, side="right") - 1
    # first nonempty span starts at index k, last one at n_basis - 1
    return np.clip(idx, k, knots.n_basis - 1)


def eval_bspline_basis(knots: ExtendedKnots, points) -> np.ndarray:
    """Collocation matrix of the B-spline basis at `points`.

    Parameters
    ----------
    knots : ExtendedKnots
    points : array_like
        Evaluation abscissae, all inside ``[lo, hi]``.

    Returns
    -------
    ndarray of shape (len(points), n_basis)
        Row ``r`` holds the basis values at ``points[r]``; each row sums
        to 1 and entries are nonnegative. Column ``j`` vanishes exactly
        outside the support ``[t[j], t[j+degree+1]]``.
    """
    x = np.atleast_1d(np.asarray(points, dtype=float))
    t = knots.values
    k = knots.degree
    if np.any(x < knots.lo) or np.any(x > knots.hi):
        bad = x[(x < knots.lo) | (x > knots.hi)][0]
        raise ValueError(f"point {bad} outside domain [{knots.lo}, {knots.hi}]")

    spans = find_spans(knots, x)
    npts = x.size
    # triangular Cox-de Boor scheme over the k+1 nonzero functions per point
    values = np.zeros((npts, k + 1))
    values[:, 0] = 1.0
    left = np.empty((npts, k + 1))
    right = np.empty((npts, k + 1))
    for j in range(1, k + 1):
        left[:, j] = x - t[spans + 1 - j]
        right[:, j] = t[spans + j] - x
        saved = np.zeros(npts)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            temp = values[:, r] / denom
            values[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        values[:, j] = saved

    out = np.zeros((npts, knots.n_basis))
    cols = spans[:, None] - k + np.arange(k + 1)[None, :]
    np.put_along_axis(out, cols, values, axis=1)
    return out


def derivative_transform(knots: ExtendedKnots, order: int) -> np.ndarray:
    """Matrix mapping coefficients to coefficients of the ``order``-th derivative.

    For a spline ``s = sum_i c_i B_i`` of degree ``k``, the derivative
    ``s^(order)`` equals the degree-``k - order`` expansion with
    coefficients ``S @ c`` on the trimmed knot sequence
    (see `reduce_degree`). ``S`` has shape
    ``(n_basis - order, n_basis)``; ``order = 0`` gives the identity.
    """
    if not 0 <= order <= knots.degree:
        raise ValueError(
            f"derivative order must be in [0, {knots.degree}], got {order}"
        )
    n = knots.n_basis
    out = np.eye(n)
    t = knots.values
    k = knots.degree
    for j in range(1, order + 1):
        size = n - j  # rows after differentiating j times
        gaps = t[k + 1 : k + 1 + size] - t[j : j + size]
        step = np.zeros((size, size + 1))
        rows = np.arange(size)
        step[rows, rows] = -1.0
        step[rows, rows + 1] = 1.0
        out = ((k + 1 - j) / gaps)[:, None] * step @ out
    return out


def span_quadrature(knots: ExtendedKnots, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on every nonempty knot span.

    ``n_nodes`` points per span integrate polynomials up to degree
    ``2*n_nodes - 1`` exactly on each piece, hence any product of splines
    of total degree below that bound integrates exactly over the domain.
    """
    ref_x, ref_w = np.polynomial.legendre.leggauss(n_nodes)
    breaks = knots.breakpoints
    a = breaks[:-1][:, None]
    b = breaks[1:][:, None]
    pts = 0.5 * (b - a) * (ref_x[None, :] + 1.0) + a
    wts = 0.5 * (b - a) * ref_w[None, :]
    return pts.ravel(), wts.ravel()


def gram_matrix(knots: ExtendedKnots, derivative_order: int = 0) -> np.ndarray:
    """Gram matrix of the degree-lowered basis used by ``derivative_order``-th derivatives.

    Entry ``(i, j)`` is the exact integral over the domain of
    ``B_i * B_j`` for the degree ``degree - derivative_order`` basis on
    the trimmed knots. Symmetric positive semi-definite.
    """
    reduced = reduce_degree(knots, derivative_order)
    pts, wts = span_quadrature(reduced, reduced.degree + 2)
    coll = eval_bspline_basis(reduced, pts)
    gram = (coll * wts[:, None]).T @ coll
    return 0.5 * (gram + gram.T)
