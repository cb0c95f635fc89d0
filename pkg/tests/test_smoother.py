"""Tests for design assembly, the penalized solve, GCV and evaluation."""

import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from clrspline import (
    KnotConfig,
    PenaltyConfig,
    SchoenbergWhitneyError,
    SmoothingConditionError,
    TensorBasisSpec,
    ZBCoeffs,
    assemble_design,
    assemble_penalty,
    eval_derivative,
    eval_spline,
    eval_zb_basis,
    fit,
    gcv_scan,
    hat_matrix,
    span_quadrature,
    validate_sw,
    zb_to_b,
)
from clrspline.smoother import _Workspace

from conftest import random_coeffs

MIDS10 = np.linspace(0.05, 0.95, 10)


def tensor_quad(spec, extra=2):
    px, wx = span_quadrature(spec.x_knots, spec.x.degree + extra)
    py, wy = span_quadrature(spec.y_knots, spec.y.degree + extra)
    return px, wx, py, wy


class TestAssembleDesign:
    def test_shapes_ten_by_ten(self, unit_spec):
        big, part_x, part_y = assemble_design(unit_spec, MIDS10, MIDS10)
        assert big.shape == (100, 25)
        assert part_x.shape == (100, 5)
        assert part_y.shape == (100, 5)

    def test_kronecker_indexing(self, unit_spec, rng):
        big, part_x, part_y = assemble_design(unit_spec, MIDS10, MIDS10)
        co = random_coeffs(unit_spec, rng)
        fitted = (
            big @ co.interaction.ravel(order="F")
            + part_x @ co.x_marginal
            + part_y @ co.y_marginal
        )
        surface = eval_spline(unit_spec, co, MIDS10, MIDS10)
        assert_allclose(fitted, surface.ravel(order="F"), atol=1e-12)

    def test_full_column_rank_under_sw(self, unit_spec):
        design = np.hstack(assemble_design(unit_spec, MIDS10, MIDS10))
        assert np.linalg.matrix_rank(design) == unit_spec.dim

    def test_smoothing_condition_enforced(self, unit_spec):
        pts = np.linspace(0.1, 0.9, 5)  # 25 < dim(35): too few observations
        with pytest.raises(SmoothingConditionError):
            assemble_design(unit_spec, pts, pts)

    def test_boundary_equality_rejected(self, unit_spec):
        # 6x6 = 36 observations beats dim 35, 5x7 = 35 does not
        ok = np.linspace(0.05, 0.95, 6)
        assemble_design(unit_spec, ok, ok)
        with pytest.raises(SmoothingConditionError):
            assemble_design(unit_spec, np.linspace(0.1, 0.9, 5), np.linspace(0.1, 0.9, 7))


class TestValidateSw:
    def test_clustered_data_fails_with_supports_listed(self, unit_spec):
        pts = np.linspace(0.26, 0.49, 12)  # all inside one knot span
        report = validate_sw(unit_spec, pts, pts)
        assert not report.passed
        assert report.x_empty and report.y_empty
        assert 0 in report.x_empty and unit_spec.x.n_bspline - 1 in report.x_empty

    def test_equispaced_midpoints_pass(self, unit_spec):
        assert validate_sw(unit_spec, MIDS10, MIDS10).passed

    def test_single_zb_function_single_point(self):
        axis = KnotConfig(0.0, 1.0, (), 1)
        spec = TensorBasisSpec(axis, axis)
        assert validate_sw(spec, [0.5], [0.4]).passed

    def test_assemble_raises_on_sw_violation(self, unit_spec):
        pts = np.concatenate([np.linspace(0.26, 0.49, 6), [0.9]])
        with pytest.raises(SchoenbergWhitneyError, match="axis"):
            assemble_design(unit_spec, pts, MIDS10[:7])


class TestPenalty:
    def test_positive_semidefinite(self, unit_spec):
        pen = assemble_penalty(unit_spec, 1, 1)
        eigs = np.linalg.eigvalsh(pen)
        assert eigs.min() >= -1e-10 * max(eigs.max(), 1.0)

    def test_quadratic_form_matches_quadrature(self, unit_spec, rng):
        pen = assemble_penalty(unit_spec, 1, 1)
        px, wx, py, wy = tensor_quad(unit_spec)
        for _ in range(5):
            co = random_coeffs(unit_spec, rng)
            flat = co.interaction.ravel(order="F")
            form = flat @ pen @ flat
            deriv = eval_derivative(unit_spec, co, 1, 1, px, py)
            quad = wx @ (deriv**2) @ wy
            assert abs(form - quad) < 1e-8 * max(abs(quad), 1.0)

    def test_low_degree_interaction_not_penalized(self):
        # an interaction linear in x is annihilated by a second x-derivative
        axis = KnotConfig(0.0, 1.0, (0.25, 0.5, 0.75), 3)
        spec = TensorBasisSpec(axis, axis)
        pts = np.sort(((np.arange(spec.n_zb_x) + 1) * 0.61803398875) % 1.0)
        coll = eval_zb_basis(spec.x_knots, pts)
        target = pts - 0.5  # zero-integral, degree < 2: exactly representable
        coeffs_linear = np.linalg.solve(coll, target)
        interaction = np.outer(coeffs_linear, np.arange(1.0, spec.n_zb_y + 1))
        flat = interaction.ravel(order="F")
        pen = assemble_penalty(spec, 2, 1)
        reference = (flat @ flat) * np.linalg.eigvalsh(pen).max()
        assert abs(flat @ pen @ flat) < 1e-12 * reference

    def test_order_bounds_enforced(self, unit_spec):
        with pytest.raises(ValueError):
            assemble_penalty(unit_spec, 2, 1)  # degree 2 allows orders <= 1


class TestFit:
    def test_zero_data_gives_zero_solution(self, unit_spec):
        res = fit(unit_spec, np.zeros((10, 10)), MIDS10, MIDS10, PenaltyConfig(1, 1, 1e-3))
        assert_array_equal(res.coeffs.interaction, np.zeros((5, 5)))
        assert_array_equal(res.coeffs.x_marginal, np.zeros(5))
        assert res.rss == 0.0

    def test_noiseless_recovery(self, unit_spec, rng):
        co = random_coeffs(unit_spec, rng)
        x = np.linspace(0.01, 0.99, 12)
        y = np.linspace(0.017, 0.983, 12)
        values = eval_spline(unit_spec, co, x, y)
        res = fit(unit_spec, values, x, y, PenaltyConfig(1, 1, 1e-12))
        assert np.abs(res.coeffs.interaction - co.interaction).max() < 1e-6
        assert np.abs(res.coeffs.x_marginal - co.x_marginal).max() < 1e-6
        assert np.abs(res.coeffs.y_marginal - co.y_marginal).max() < 1e-6

    def test_normal_equation_residual(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        pen = PenaltyConfig(1, 1, 1e-3)
        res = fit(unit_spec, values, MIDS10, MIDS10, pen)
        ws = _Workspace(unit_spec, values, MIDS10, MIDS10, 1, 1)
        system = ws.system(pen.rho)
        solution = np.concatenate(
            [res.coeffs.interaction.ravel(order="F"), res.coeffs.x_marginal, res.coeffs.y_marginal]
        )
        residual = np.linalg.norm(system @ solution - ws.rhs) / np.linalg.norm(ws.rhs)
        assert residual < 1e-10

    def test_solution_minimizes_objective(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        rho = 1e-2
        res = fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, rho))
        pen = assemble_penalty(unit_spec, 1, 1)
        design = np.hstack(assemble_design(unit_spec, MIDS10, MIDS10))
        observed = values.ravel(order="F")

        def objective(co):
            flat = np.concatenate(
                [co.interaction.ravel(order="F"), co.x_marginal, co.y_marginal]
            )
            resid = observed - design @ flat
            zpart = co.interaction.ravel(order="F")
            return resid @ resid + rho * (zpart @ pen @ zpart)

        best = objective(res.coeffs)
        for _ in range(20):
            perturbed = ZBCoeffs(
                res.coeffs.interaction + 1e-3 * rng.normal(size=(5, 5)),
                res.coeffs.x_marginal + 1e-3 * rng.normal(size=5),
                res.coeffs.y_marginal + 1e-3 * rng.normal(size=5),
            )
            assert objective(perturbed) >= best

    def test_penalty_and_rss_monotone_in_rho(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        pen = assemble_penalty(unit_spec, 1, 1)
        rhos = np.logspace(-6, 1, 25)
        penalties, rsses = [], []
        for rho in rhos:
            res = fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, rho))
            flat = res.coeffs.interaction.ravel(order="F")
            penalties.append(flat @ pen @ flat)
            rsses.append(res.rss)
        penalties = np.asarray(penalties)
        rsses = np.asarray(rsses)
        assert np.all(np.diff(penalties) <= 1e-10 * penalties[:-1] + 1e-12)
        assert np.all(np.diff(rsses) >= -1e-10 * rsses[1:] - 1e-12)

    def test_gcv_identity(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        res = fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, 1e-3))
        mn = res.n_obs
        expected = (res.rss / mn) / (1 - res.hat_trace / mn) ** 2
        assert abs(res.gcv - expected) < 1e-12 * expected

    def test_fitted_values_equal_hat_action(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        pen = PenaltyConfig(1, 1, 1e-2)
        res = fit(unit_spec, values, MIDS10, MIDS10, pen)
        hat = hat_matrix(unit_spec, values, MIDS10, MIDS10, pen)
        fitted = eval_spline(unit_spec, res.coeffs, MIDS10, MIDS10).ravel(order="F")
        assert np.abs(hat @ values.ravel(order="F") - fitted).max() < 1e-10
        assert abs(np.trace(hat) - res.hat_trace) < 1e-9

    def test_hat_trace_decreases_with_rho(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        traces = [
            fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, rho)).hat_trace
            for rho in np.logspace(-6, 2, 9)
        ]
        assert np.all(np.diff(traces) <= 1e-10)

    def test_strong_penalty_shrinks_interaction(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        weak = fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, 1e-8))
        strong = fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, 1e6))
        weak_norm = np.linalg.norm(weak.coeffs.interaction)
        assert np.linalg.norm(strong.coeffs.interaction) < 1e-3 * weak_norm

    def test_marginal_penalty_off_by_default(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        base = fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, 1e-3))
        explicit = fit(
            unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, 1e-3, marginal_rho=0.0)
        )
        assert_array_equal(base.coeffs.packed(), explicit.coeffs.packed())

    def test_marginal_penalty_shrinks_marginal_blocks(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        base = fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, 1e-3))
        damped = fit(
            unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, 1e-3, marginal_rho=1e6)
        )
        assert np.linalg.norm(damped.coeffs.x_marginal) < 1e-3 * np.linalg.norm(
            base.coeffs.x_marginal
        )
        assert np.linalg.norm(damped.coeffs.y_marginal) < 1e-3 * np.linalg.norm(
            base.coeffs.y_marginal
        )

    def test_negative_marginal_rho_rejected(self):
        with pytest.raises(ValueError):
            PenaltyConfig(1, 1, 1e-3, marginal_rho=-1.0)

    def test_fitted_spline_has_zero_integral(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        res = fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, 1e-3))
        px, wx, py, wy = tensor_quad(unit_spec)
        total = wx @ eval_spline(unit_spec, res.coeffs, px, py) @ wy
        assert abs(total) < 1e-9


class TestGcvScan:
    def test_single_element_grid(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        scan = gcv_scan(unit_spec, values, MIDS10, MIDS10, 1, 1, [0.5])
        assert scan.best_rho == 0.5
        assert scan.rhos.shape == (1,)

    def test_exact_tie_takes_smaller_rho(self, unit_spec):
        # zero data fits exactly at every weight: all GCV values tie at 0
        scan = gcv_scan(unit_spec, np.zeros((10, 10)), MIDS10, MIDS10, 1, 1, [1e-2, 1e-3, 1e-1])
        assert np.all(scan.gcv_values == scan.gcv_values[0])
        assert scan.best_rho == 1e-3

    def test_matches_per_rho_fits(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        rhos = np.logspace(-4, 0, 5)
        scan = gcv_scan(unit_spec, values, MIDS10, MIDS10, 1, 1, rhos)
        direct = [
            fit(unit_spec, values, MIDS10, MIDS10, PenaltyConfig(1, 1, rho)).gcv
            for rho in rhos
        ]
        assert_allclose(scan.gcv_values, direct, rtol=1e-12)

    def test_rejects_bad_grid(self, unit_spec, rng):
        values = rng.normal(size=(10, 10))
        with pytest.raises(ValueError):
            gcv_scan(unit_spec, values, MIDS10, MIDS10, 1, 1, [])
        with pytest.raises(ValueError):
            gcv_scan(unit_spec, values, MIDS10, MIDS10, 1, 1, [-1.0, 1.0])


class TestConversionAndEvaluation:
    def test_zero_coeffs_convert_to_zero(self, unit_spec):
        bc = zb_to_b(unit_spec, ZBCoeffs.zeros(unit_spec))
        assert_array_equal(bc.matrix, np.zeros((6, 6)))

    def test_dual_evaluation_agrees(self, asym_spec, rng):
        xs = rng.uniform(asym_spec.x.lo, asym_spec.x.hi, 60)
        ys = rng.uniform(asym_spec.y.lo, asym_spec.y.hi, 60)
        for _ in range(5):
            co = random_coeffs(asym_spec, rng)
            gap = np.abs(
                eval_spline(asym_spec, co, xs, ys)
                - eval_spline(asym_spec, zb_to_b(asym_spec, co), xs, ys)
            ).max()
            assert gap < 1e-9

    def test_marginal_only_coefficients_structure(self, unit_spec):
        co = ZBCoeffs(np.zeros((5, 5)), np.ones(5), np.zeros(5))
        bc = zb_to_b(unit_spec, co)
        # every column identical: the represented spline depends on x only
        assert_allclose(bc.matrix, bc.matrix[:, :1] @ np.ones((1, 6)), atol=1e-15)
        surface = eval_spline(unit_spec, co, np.linspace(0, 1, 7), np.array([0.1, 0.6, 0.9]))
        assert_allclose(surface[:, 0], surface[:, 1], atol=1e-14)
        assert_allclose(surface[:, 0], surface[:, 2], atol=1e-14)

    def test_converted_spline_keeps_zero_integral(self, unit_spec, rng):
        co = random_coeffs(unit_spec, rng)
        bc = zb_to_b(unit_spec, co)
        px, wx, py, wy = tensor_quad(unit_spec)
        total = wx @ eval_spline(unit_spec, bc, px, py) @ wy
        assert abs(total) < 1e-9

    def test_shape_mismatch_rejected(self, unit_spec, asym_spec, rng):
        with pytest.raises(ValueError):
            zb_to_b(unit_spec, random_coeffs(asym_spec, rng))

    def test_unknown_coefficient_type_rejected(self, unit_spec):
        with pytest.raises(TypeError):
            eval_spline(unit_spec, np.zeros((6, 6)), [0.5], [0.5])

    def test_zero_surface(self, unit_spec):
        surface = eval_spline(unit_spec, ZBCoeffs.zeros(unit_spec), MIDS10, MIDS10)
        assert_array_equal(surface, np.zeros((10, 10)))

    def test_out_of_domain_rejected(self, unit_spec, rng):
        with pytest.raises(ValueError):
            eval_spline(unit_spec, random_coeffs(unit_spec, rng), [1.2], [0.5])


class TestEvalDerivative:
    def test_zero_orders_give_interaction_part(self, unit_spec, rng):
        co = random_coeffs(unit_spec, rng)
        xs = np.linspace(0, 1, 9)
        interaction_only = ZBCoeffs(co.interaction, np.zeros(5), np.zeros(5))
        assert_allclose(
            eval_derivative(unit_spec, co, 0, 0, xs, xs),
            eval_spline(unit_spec, interaction_only, xs, xs),
            atol=1e-12,
        )

    def test_matches_cross_finite_differences(self, unit_spec, rng):
        co = random_coeffs(unit_spec, rng)
        pts = rng.uniform(0.05, 0.95, 80)
        pts = pts[np.abs(pts[:, None] - unit_spec.x_knots.breakpoints[None, :]).min(axis=1) > 5e-3]
        h = 1e-5
        exact = np.diagonal(eval_derivative(unit_spec, co, 1, 1, pts, pts))
        stencil = (
            np.diagonal(eval_spline(unit_spec, co, pts + h, pts + h))
            - np.diagonal(eval_spline(unit_spec, co, pts + h, pts - h))
            - np.diagonal(eval_spline(unit_spec, co, pts - h, pts + h))
            + np.diagonal(eval_spline(unit_spec, co, pts - h, pts - h))
        ) / (4 * h * h)
        assert np.max(np.abs(stencil - exact) / (np.abs(exact) + 1.0)) < 1e-5

    def test_constant_in_x_has_zero_x_derivative(self, unit_spec):
        co = ZBCoeffs(np.zeros((5, 5)), np.zeros(5), np.ones(5))
        xs = np.linspace(0, 1, 11)
        assert_allclose(eval_derivative(unit_spec, co, 1, 0, xs, xs), 0, atol=1e-14)

    def test_order_too_high_rejected(self, unit_spec, rng):
        with pytest.raises(ValueError):
            eval_derivative(unit_spec, random_coeffs(unit_spec, rng), 2, 1, [0.5], [0.5])


class TestJitterGuard:
    def test_near_singular_system_warns_and_recovers(self):
        # the last x basis function is observed only 2e-12 inside its
        # support: SW technically holds but the system is near singular
        axis = KnotConfig(0.0, 1.0, (0.5,), 1)
        spec = TensorBasisSpec(axis, axis)
        x = np.array([0.05, 0.25, 0.45, 0.49, 0.5 + 2e-12])
        y = np.array([0.0, 0.3, 0.5, 0.7, 1.0])
        values = np.outer(np.sin(x), np.cos(y))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = fit(spec, values, x, y, PenaltyConfig(0, 0, 1e-12))
        assert any("jitter" in str(w.message) for w in caught)
        assert np.all(np.isfinite(result.coeffs.interaction))
