"""Tests for the beta density, accept-reject sampling and sweep drivers."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal
from scipy.integrate import dblquad

from clrspline import (
    BetaParams,
    EnvelopeError,
    PenaltyConfig,
    ZBCoeffs,
    accept_reject,
    beta_density,
    build_histogram,
    cell_centers,
    discrete_clr,
    estimate_envelope,
    eval_spline,
    fit,
    impute_zeros,
    inv_clr,
    ise,
    run_bin_sweep,
    run_knot_sweep,
    study_spec,
)
from clrspline.clr import HistogramGrid


class TestBetaDensity:
    def test_symmetric_shape_center_value(self):
        value = beta_density(BetaParams(3, 3, 3), 0.5, 0.5)
        assert value == pytest.approx(4.097, abs=1e-3)

    def test_unit_parameters_formula(self):
        # alpha = (1,1,1): normalizer is 1/2, so f = 2 (1-x)(1-y)/(1-xy)^3
        x, y = 0.3, 0.7
        expected = 2.0 * (1 - x) * (1 - y) / (1 - x * y) ** 3
        assert beta_density(BetaParams(1, 1, 1), x, y) == pytest.approx(expected, rel=1e-12)

    def test_integrates_to_one(self):
        params = BetaParams(3, 3, 3)
        total, _ = dblquad(
            lambda y, x: beta_density(params, x, y), 1e-9, 1 - 1e-9, 1e-9, 1 - 1e-9
        )
        assert total == pytest.approx(1.0, abs=1e-4)

    def test_domain_enforced(self):
        with pytest.raises(ValueError):
            beta_density(BetaParams(3, 3, 3), 0.0, 0.5)
        with pytest.raises(ValueError):
            beta_density(BetaParams(3, 3, 3), 0.5, 1.0)

    def test_parameters_validated(self):
        with pytest.raises(ValueError):
            BetaParams(0.0, 1.0, 1.0)

    def test_envelope_estimate_dominates_dense_grid(self):
        params = BetaParams(3, 3, 3)
        bound = estimate_envelope(params)
        pts = cell_centers(0, 1, 257)
        assert bound >= beta_density(params, pts[:, None], pts[None, :]).max()

    def test_envelope_never_exceeded_over_a_million_proposals(self):
        params = BetaParams(3, 3, 3)
        draws = np.random.default_rng(77).random((1_000_000, 2))
        draws = draws[(draws > 0).all(axis=1)]
        values = beta_density(params, draws[:, 0], draws[:, 1])
        assert values.max() <= 4.1


class TestAcceptReject:
    def test_exact_count_and_domain(self):
        sample = accept_reject(BetaParams(3, 3, 3), 500, 4.1, seed=3)
        assert sample.points.shape == (500, 2)
        assert np.all((sample.points > 0) & (sample.points < 1))
        assert sample.x_range == (0.0, 1.0)

    def test_seeded_determinism(self):
        a = accept_reject(BetaParams(3, 3, 3), 400, 4.1, seed=42)
        b = accept_reject(BetaParams(3, 3, 3), 400, 4.1, seed=42)
        assert_array_equal(a.points, b.points)
        assert a.n_proposed == b.n_proposed

    def test_different_seeds_differ(self):
        a = accept_reject(BetaParams(3, 3, 3), 400, 4.1, seed=1)
        b = accept_reject(BetaParams(3, 3, 3), 400, 4.1, seed=2)
        assert not np.array_equal(a.points, b.points)

    def test_envelope_violation_reported_with_point(self):
        with pytest.raises(EnvelopeError, match=r"\("):
            accept_reject(BetaParams(3, 3, 3), 100, 3.0, seed=0)

    def test_acceptance_rate_statistic(self):
        sample = accept_reject(BetaParams(3, 3, 3), 2000, 4.1, seed=9)
        assert sample.accept_rate == pytest.approx(1 / 4.1, abs=0.03)
        assert sample.n_proposed >= 2000


class TestSweeps:
    def test_single_replicate_smoke(self):
        result = run_bin_sweep(BetaParams(3, 3, 3), 1, [8, 10], n_samples=600, seed=5)
        assert result.table.shape == (1, 2)
        assert np.all(np.isfinite(result.table))
        summary = result.summary()
        assert summary[8]["feasible"] and summary[10]["feasible"]

    def test_infeasible_bin_count_flagged(self):
        with pytest.warns(UserWarning, match="infeasible"):
            result = run_bin_sweep(BetaParams(3, 3, 3), 1, [5, 8], n_samples=600, seed=5)
        assert not result.feasible[0]
        assert np.isnan(result.table[0, 0])
        assert result.summary()[5] == {"feasible": False}

    def test_knot_sweep_feasibility_boundary(self):
        # 13x13 classes support at most 10 interior knots for degree 2
        with pytest.warns(UserWarning, match="infeasible"):
            result = run_knot_sweep(
                BetaParams(3, 3, 3), 1, [10, 11], bins=13, n_samples=600, seed=5
            )
        assert result.feasible[0]
        assert not result.feasible[1]

    def test_knot_sweep_dip_near_two_interior_knots(self):
        # few interior knots fit best at 13x13 classes; the densest
        # feasible count is clearly worse
        result = run_knot_sweep(BetaParams(3, 3, 3), 8, list(range(1, 11)), seed=5)
        medians = np.median(result.table, axis=0)
        best = result.param_values[int(np.argmin(medians))]
        assert best <= 3
        assert medians[-1] > medians[1]

    def test_estimated_mode_lands_near_the_true_mode(self):
        # end-to-end pipeline sanity: the symmetric target peaks at the
        # center, and so should the estimate
        params = BetaParams(3, 3, 3)
        sample = accept_reject(params, 3000, 4.1, seed=2)
        hist = impute_zeros(build_histogram(sample, 10, 10))
        field = discrete_clr(hist)
        spec = study_spec()
        result = fit(spec, field.values, hist.x_mid, hist.y_mid, PenaltyConfig(1, 1, 1e-3))
        grid = cell_centers(0, 1, 101)
        estimate = inv_clr(grid, grid, eval_spline(spec, result.coeffs, grid, grid))
        peak = np.unravel_index(np.argmax(estimate.values), estimate.values.shape)
        assert abs(grid[peak[0]] - 0.5) < 0.15
        assert abs(grid[peak[1]] - 0.5) < 0.15

    def test_noise_free_spline_truth_recovered(self, rng):
        # pipeline consistency: spline-representable truth, noise-free
        # midpoint sampling, negligible penalty -> error near the floor
        spec = study_spec()
        coeffs = ZBCoeffs(
            0.5 * rng.normal(size=(5, 5)), 0.5 * rng.normal(size=5), 0.5 * rng.normal(size=5)
        )
        eval_pts = cell_centers(0, 1, 101)
        truth = inv_clr(eval_pts, eval_pts, eval_spline(spec, coeffs, eval_pts, eval_pts))
        mids = cell_centers(0, 1, 12)
        clr_values = eval_spline(spec, coeffs, mids, mids)
        hist = HistogramGrid(mids, mids, np.exp(clr_values), 1 / 12, 1 / 12)
        field = discrete_clr(hist)
        result = fit(spec, field.values, mids, mids, PenaltyConfig(1, 1, 1e-12))
        surface = eval_spline(spec, result.coeffs, eval_pts, eval_pts)
        estimate = inv_clr(eval_pts, eval_pts, surface)
        assert ise(truth, estimate) < 1e-3


class TestStudySpec:
    def test_dimensions(self):
        spec = study_spec()
        assert (spec.n_zb_x, spec.n_zb_y, spec.dim) == (5, 5, 35)

    def test_custom_counts(self):
        spec = study_spec((2, 4), (3, 2))
        assert spec.x.degree == 3
        assert spec.n_zb_x == 5
        assert spec.n_zb_y == 6
