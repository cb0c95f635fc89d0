"""Zero-integral spline basis (ZB-splines) built from the B-spline basis.

Each ZB-spline of degree ``k`` is the derivative of a degree-``k + 1``
B-spline on the same clamped knot sequence, which makes its integral over
the domain exactly zero. In practice the whole basis is obtained at once
by mixing the ordinary B-spline basis vector with a signed-difference
matrix and a knot-gap scaling; appending the all-ones row yields an
invertible change of basis for the full spline space.
"""

from __future__ import annotations

import numpy as np

from .knots import ExtendedKnots, eval_bspline_basis

__all__ = [
    "difference_matrix",
    "scale_matrix",
    "zb_map",
    "eval_zb_basis",
    "zb_transform",
]


def difference_matrix(n: int) -> np.ndarray:
    """Signed first-difference matrix of shape ``(n, n + 1)``.

    Has 1 on the diagonal and -1 on the superdiagonal, so each row sums
    to zero and the rank is ``n``.
    """
    if n < 1:
        raise ValueError(f"difference matrix needs n >= 1, got {n}")
    out = np.zeros((n, n + 1))
    rows = np.arange(n)
    out[rows, rows] = 1.0
    out[rows, rows + 1] = -1.0
    return out


def scale_matrix(knots: ExtendedKnots) -> np.ndarray:
    """Diagonal matrix ``(degree + 1) / (support length of each B-spline)``."""
    k = knots.degree
    t = knots.values
    gaps = t[k + 1 :] - t[: knots.n_basis]
    if np.any(gaps <= 0):
        raise ValueError("degenerate knot sequence: zero-length basis support")
    return np.diag((k + 1) / gaps)


def zb_map(knots: ExtendedKnots) -> np.ndarray:
    """Matrix turning B-spline basis values into ZB basis values.

    Shape ``(n_basis - 1, n_basis)``; the ZB collocation row at a point
    ``x`` is this matrix applied to the B-spline collocation row.
    """
    return difference_matrix(knots.n_basis - 1) @ scale_matrix(knots)


def eval_zb_basis(knots: ExtendedKnots, points) -> np.ndarray:
    """Collocation matrix of the zero-integral basis at `points`.

    Returns shape ``(len(points), n_basis - 1)``. Every column, seen as a
    function of ``x``, integrates to zero over the domain.
    """
    return eval_bspline_basis(knots, points) @ zb_map(knots).T


def zb_transform(knots: ExtendedKnots) -> np.ndarray:
    """Full-rank square transform stacking `zb_map` over an all-ones row.

    Applied to the B-spline basis vector it yields the ZB basis values
    with a trailing constant 1 (the B-spline partition of unity), giving
    an alternative basis of the whole spline space.
    """
    n = knots.n_basis
    return np.vstack([zb_map(knots), np.ones((1, n))])
