import math

import numpy as np
import pytest

from gevreylab.galilean import (
    GevreyParams,
    apply_galilean,
    apply_galilean_free,
    commutation_inequality_check,
    gevrey_vector,
)
from gevreylab.grid import Field, derivative, l2_norm, sobolev_norm, weight_apply
from gevreylab.propagator import free_evolve
from gevreylab.witnesses import random_resolved_field


class TestApplyGalilean:
    def test_time_zero_is_moment(self, gaussian):
        out = apply_galilean(gaussian, 0.0, 3)
        expected = gaussian.grid.points**3 * gaussian.samples
        assert np.abs(out.samples - expected).max() <= 1e-12

    def test_pure_mode_first_order(self, small_grid):
        k, t = 4, 0.6
        xi = 2 * math.pi * k / small_grid.length
        mode = Field(small_grid, np.exp(1j * xi * small_grid.points))
        out = apply_galilean(mode, t, 1)
        expected = (small_grid.points + 2j * t * (1j * xi)) * mode.samples
        assert np.abs(out.samples - expected).max() <= 1e-11 * np.abs(expected).max()

    def test_commutator_with_derivative_is_minus_one(self, gaussian):
        t = 0.5
        lhs = apply_galilean(derivative(gaussian), t, 1) - derivative(
            apply_galilean(gaussian, t, 1)
        )
        assert l2_norm(lhs + gaussian) <= 1e-12 * l2_norm(gaussian)

    @pytest.mark.parametrize("order", range(1, 7))
    def test_iterated_commutator_identity_random_fields(self, j_random_grid, order):
        # [J^a, d] u = -a J^{a-1} u on random resolved fields
        rng = np.random.default_rng(11)
        for _ in range(5):
            u = random_resolved_field(j_random_grid, rng, bandwidth=0.2, envelope_fraction=0.08)
            t = float(rng.uniform(0.1, 1.0))
            ju = apply_galilean(derivative(u), t, order)
            du = derivative(apply_galilean(u, t, order))
            expected = -float(order) * apply_galilean(u, t, order - 1)
            assert l2_norm((ju - du) - expected) <= 1e-10 * l2_norm(expected)

    def test_recursion_cap(self, gaussian):
        with pytest.raises(ValueError):
            apply_galilean(gaussian, 0.1, 13)


class TestApplyGalileanFree:
    def test_order_zero_is_evolution(self, gaussian):
        out = apply_galilean_free(gaussian, 0.7, 0)
        assert l2_norm(out - free_evolve(gaussian, 0.7)) == 0.0

    @pytest.mark.parametrize("order", range(9))
    @pytest.mark.parametrize("theta", [0.0, 2.0])
    def test_intertwining_norm_identity(self, gaussian, order, theta):
        # ||J^a e^{itL} u0||_theta = ||x^a u0||_theta
        t = 0.9
        lhs = sobolev_norm(apply_galilean_free(gaussian, t, order), theta)
        moment = weight_apply(gaussian, 0.0)
        moment = Field(gaussian.grid, gaussian.grid.points**order * gaussian.samples)
        rhs = sobolev_norm(moment, theta)
        assert lhs == pytest.approx(rhs, rel=1e-9)

    @pytest.mark.parametrize("order", range(7))
    def test_two_path_agreement(self, j_gaussian, order):
        t = 0.5
        via_moment = apply_galilean_free(j_gaussian, t, order)
        via_recursion = apply_galilean(free_evolve(j_gaussian, t), t, order)
        assert l2_norm(via_moment - via_recursion) <= 1e-8 * max(l2_norm(via_moment), 1e-30)


class TestGevreyVector:
    def test_params_validation(self):
        with pytest.raises(ValueError):
            GevreyParams(s=0.3)
        with pytest.raises(ValueError):
            GevreyParams(r=0.0)
        with pytest.raises(ValueError):
            GevreyParams(r=1.5)

    def test_gaussian_moment_entry(self, gaussian):
        # at t=0, theta=0, s=1, r=1 the entries are plain moment norms;
        # ||x^2 exp(-x^2/2)|| = (integral x^4 e^{-x^2})^{1/2} = (3 sqrt(pi)/4)^{1/2}
        params = GevreyParams(theta=0.0, s=1.0, r=1.0, max_order=2)
        vec = gevrey_vector(gaussian, 0.0, params, "recursion")
        expected = math.sqrt(3 * math.sqrt(math.pi) / 4)
        assert vec.entries[2] == pytest.approx(expected, rel=1e-10)

    def test_entries_nonnegative_and_monotone_in_max_order(self, gaussian):
        t = 0.3
        aggregates = []
        for l in range(4):
            params = GevreyParams(theta=2.0, s=1.0, r=0.5, max_order=l)
            vec = gevrey_vector(gaussian, t, params, "recursion")
            assert all(e >= 0 for e in vec.entries)
            aggregates.append(vec.aggregate)
        assert all(a <= b * (1 + 1e-12) for a, b in zip(aggregates, aggregates[1:]))

    def test_aggregate_is_euclidean_norm(self, gaussian):
        params = GevreyParams(max_order=4)
        vec = gevrey_vector(gaussian, 0.2, params, "recursion")
        assert vec.aggregate == pytest.approx(
            math.sqrt(sum(e**2 for e in vec.entries)), rel=1e-15
        )

    @pytest.mark.parametrize("t", [0.3, 0.7])
    def test_free_entries_time_independent(self, gaussian, t):
        params = GevreyParams(theta=2.0, s=1.0, r=0.5, max_order=6)
        at_t = gevrey_vector(gaussian, t, params, "free")
        at_zero = gevrey_vector(gaussian, 0.0, params, "free")
        for a, b in zip(at_t.entries, at_zero.entries):
            assert a == pytest.approx(b, rel=1e-9)

    def test_strategy_vocabulary(self, gaussian):
        with pytest.raises(ValueError):
            gevrey_vector(gaussian, 0.1, GevreyParams(), "conjugation")


class TestCommutationInequality:
    def test_zero_field(self, small_grid):
        zero = Field(small_grid, np.zeros(small_grid.num_points))
        res = commutation_inequality_check(zero, 0.4, GevreyParams(max_order=3))
        assert res.lhs == 0.0 and res.rhs == 0.0 and res.holds

    def test_gaussian_case(self, gaussian):
        params = GevreyParams(theta=2.0, s=1.0, r=0.5, max_order=4)
        res = commutation_inequality_check(gaussian, 0.5, params)
        assert res.holds and res.lhs > 0

    def test_free_strategy_matches_recursion(self, gaussian):
        params = GevreyParams(theta=2.0, s=1.0, r=0.5, max_order=4)
        t = 0.6
        via_free = commutation_inequality_check(gaussian, t, params, "free")
        evolved = free_evolve(gaussian, t)
        via_rec = commutation_inequality_check(evolved, t, params, "recursion")
        assert via_free.lhs == pytest.approx(via_rec.lhs, rel=1e-8)
        assert via_free.rhs == pytest.approx(via_rec.rhs, rel=1e-8)

    def test_random_sweep(self, medium_grid):
        rng = np.random.default_rng(7)
        params = GevreyParams(theta=2.0, s=1.0, r=0.5, max_order=6)
        for _ in range(10):
            u = random_resolved_field(medium_grid, rng)
            res = commutation_inequality_check(u, float(rng.uniform(0.1, 1.0)), params)
            assert res.holds
