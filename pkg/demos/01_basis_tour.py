"""
A tour of the zero-integral spline basis
========================================

Ordinary B-splines are nonnegative and sum to one, so no nontrivial
combination of them integrates to zero. This script builds the
derivative-based basis that does, verifies the zero-integral property by
quadrature, and renders both families plus a bivariate basis surface.

Run from the repository root:

    python demos/01_basis_tour.py

Figures land in demos/output/.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from clrspline import (
    KnotConfig,
    eval_bspline_basis,
    eval_zb_basis,
    extend_knots,
    span_quadrature,
)

out_dir = Path(__file__).parent / "output"
out_dir.mkdir(exist_ok=True)

# The configuration used throughout the simulation study: quadratic
# splines on [0, 1] with interior knots at the quartiles.
cfg = KnotConfig(0.0, 1.0, (0.25, 0.5, 0.75), 2)
knots = extend_knots(cfg)
print("extended knot sequence:", knots.values)
print("B-spline count:", knots.n_basis, " zero-integral count:", knots.n_basis - 1)

xs = np.linspace(0, 1, 601)
b_vals = eval_bspline_basis(knots, xs)
z_vals = eval_zb_basis(knots, xs)

fig, (ax_b, ax_z) = plt.subplots(1, 2, figsize=(11, 4))
ax_b.plot(xs, b_vals)
ax_b.set_title("B-spline basis (partition of unity)")
ax_z.plot(xs, z_vals)
ax_z.axhline(0, color="k", lw=0.5)
ax_z.set_title("zero-integral basis (each curve integrates to 0)")
for ax in (ax_b, ax_z):
    ax.set_xlabel("x")
fig.tight_layout()
fig.savefig(out_dir / "01_univariate_bases.png", dpi=150)

# Quadrature check of the defining property: every basis function has
# integral exactly zero (up to roundoff), without coefficient constraints.
pts, wts = span_quadrature(knots, cfg.degree + 2)
integrals = wts @ eval_zb_basis(knots, pts)
print("zero-integral check, max |integral|:", np.abs(integrals).max())

# One bivariate product basis function: positive and negative lobes
# arranged so that slices in either variable integrate to zero.
surface = np.outer(z_vals[:, 1], z_vals[:, 3])
fig = plt.figure(figsize=(5.5, 4.5))
ax = fig.add_subplot(projection="3d")
gx, gy = np.meshgrid(xs, xs, indexing="ij")
ax.plot_surface(gx, gy, surface, cmap="coolwarm", rstride=12, cstride=12)
ax.set_title("bivariate product basis function")
fig.tight_layout()
fig.savefig(out_dir / "01_bivariate_basis.png", dpi=150)
print("figures written to", out_dir)
