import numpy as np
import pytest
from numpy.testing import assert_allclose

from facecov.basis import (BasisSpec, bspline_design, bspline_design_points,
                           difference_penalty, factorize_smoother)
from facecov.errors import ConfigError
from facecov.linalg import thin_svd


def explicit_smoother(spec, lam):
    b = bspline_design(spec)
    p = difference_penalty(spec.n_basis, spec.penalty_diff_order)
    return b @ np.linalg.solve(b.T @ b + lam * p, b.T)


def factored_smoother(factor, lam):
    return (factor.a_s * factor.shrink(lam)) @ factor.a_s.T


class TestBsplineDesign:
    def test_piecewise_constant_indicators(self):
        # order 1 with one interior knot at 0.5 gives indicator functions
        b = bspline_design_points(np.array([0.25, 0.75]),
                                  num_interior_knots=1, spline_order=1)
        assert_allclose(b, np.eye(2), atol=1e-14)

    @pytest.mark.parametrize("knots,order", [(5, 4), (10, 3), (30, 4)])
    def test_partition_of_unity(self, knots, order):
        spec = BasisSpec.regular(80, num_interior_knots=knots,
                                 spline_order=order)
        b = bspline_design(spec)
        assert_allclose(b.sum(axis=1), np.ones(80), atol=1e-12)

    def test_full_column_rank_cubic(self):
        spec = BasisSpec.regular(200, num_interior_knots=10)
        b = bspline_design(spec)
        assert b.shape == (200, 14)
        sv = thin_svd(b).singular_values
        assert int((sv > 1e-10 * sv[0]).sum()) == 14

    def test_too_many_basis_functions_rejected(self):
        with pytest.raises(ConfigError):
            BasisSpec.regular(10, num_interior_knots=20)

    def test_grid_outside_unit_interval_rejected(self):
        with pytest.raises(ConfigError):
            BasisSpec(grid=np.array([0.1, 0.5, 1.2]), num_interior_knots=1,
                      spline_order=1, penalty_diff_order=1)


class TestDifferencePenalty:
    def test_first_order_hand_computed(self):
        expected = np.array([[1.0, -1.0, 0.0],
                             [-1.0, 2.0, -1.0],
                             [0.0, -1.0, 1.0]])
        assert_allclose(difference_penalty(3, 1), expected, atol=1e-14)

    @pytest.mark.parametrize("c,m", [(3, 1), (8, 2), (12, 3)])
    def test_constants_unpenalized(self, c, m):
        p = difference_penalty(c, m)
        assert_allclose(p @ np.ones(c), np.zeros(c), atol=1e-12)
        assert_allclose(p, p.T, atol=1e-14)

    def test_second_order_null_space(self):
        p = difference_penalty(5, 2)
        vals = np.linalg.eigvalsh(p)
        assert int((vals < 1e-10).sum()) == 2
        linear = np.arange(5, dtype=float)
        assert_allclose(p @ linear, np.zeros(5), atol=1e-10)

    def test_order_too_high_rejected(self):
        with pytest.raises(ConfigError):
            difference_penalty(3, 3)


class TestFactorizeSmoother:
    def test_unpenalized_limit_is_projection(self, small_factor):
        s0 = factored_smoother(small_factor, 0.0)
        assert np.abs(s0 @ s0 - s0).max() < 1e-8

    def test_matches_direct_inverse(self):
        spec = BasisSpec.regular(50, num_interior_knots=4)  # c = 8
        factor = factorize_smoother(spec)
        assert np.abs(factored_smoother(factor, 1.0)
                      - explicit_smoother(spec, 1.0)).max() < 1e-8

    def test_trace_identity(self):
        spec = BasisSpec.regular(50, num_interior_knots=4)
        factor = factorize_smoother(spec)
        for lam in (0.0, 0.3, 7.0, 1e4):
            explicit = np.trace(explicit_smoother(spec, lam))
            fast = float(factor.shrink(lam).sum())
            assert_allclose(fast, explicit, rtol=1e-8)

    def test_equivalence_on_random_specs(self, rng):
        for _ in range(20):
            n_grid = int(rng.integers(30, 101))
            order = int(rng.integers(2, 5))
            knots = int(rng.integers(order, 13 - order))
            lam = float(10.0 ** rng.uniform(-4, 6))
            spec = BasisSpec.regular(n_grid, num_interior_knots=knots,
                                     spline_order=order,
                                     penalty_diff_order=1)
            factor = factorize_smoother(spec)
            err = np.abs(factored_smoother(factor, lam)
                         - explicit_smoother(spec, lam)).max()
            assert err < 1e-8, (n_grid, knots, order, lam)

    def test_orthonormal_columns_and_null_space(self):
        for order, m in ((4, 2), (3, 1)):
            spec = BasisSpec.regular(90, num_interior_knots=9,
                                     spline_order=order, penalty_diff_order=m)
            factor = factorize_smoother(spec)
            c = spec.n_basis
            assert np.abs(factor.a_s.T @ factor.a_s - np.eye(c)).max() < 1e-8
            assert int((factor.s < 1e-10).sum()) == m
            assert np.all(factor.s >= 0.0)

    def test_shrink_monotone_in_lambda(self, small_factor):
        weak = small_factor.shrink(0.1)
        strong = small_factor.shrink(100.0)
        assert np.all(strong <= weak + 1e-15)
        assert np.all((0.0 < strong) & (strong <= 1.0))
