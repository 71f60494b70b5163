import math

import numpy as np
import pytest

from gevreylab.diagnostics import (
    DecayFit,
    GevreyFit,
    NormTable,
    NormTableRow,
    decay_fit,
    exponential_class_defect,
    free_galilean_fields,
    gevrey_fit,
    hermite_factor,
    norm_table_free,
    norm_table_gauge,
    weight_commutator_check,
    weighted_derivative_via_J,
)
from gevreylab.grid import Field, Grid1D, derivative, l2_norm, sobolev_norm, weight_apply
from gevreylab.propagator import free_evolve
from gevreylab.witnesses import random_resolved_field


@pytest.fixture(scope="module")
def fit_grid():
    return Grid1D(512, 80.0)


@pytest.fixture(scope="module")
def fit_gaussian(fit_grid):
    return Field(fit_grid, np.exp(-fit_grid.points**2 / 2.0))


class TestHermiteFactor:
    def test_order_zero_is_one(self, fit_grid):
        out = hermite_factor(0, 0.7, fit_grid)
        assert np.abs(out.samples - 1.0).max() <= 1e-15

    @pytest.mark.parametrize("t", [0.3, -0.5, 2.0])
    def test_order_one_symbolic(self, fit_grid, t):
        out = hermite_factor(1, t, fit_grid)
        expected = 1j * fit_grid.points / (2.0 * t)
        assert np.abs(out.samples - expected).max() <= 1e-12 * np.abs(expected).max()

    @pytest.mark.parametrize("t", [0.3, 1.0])
    def test_order_two_symbolic(self, fit_grid, t):
        # d^2 of e^{a x^2} with a = i/4t: (i/4t)^2 (2x)^2 + 2 (i/4t)
        out = hermite_factor(2, t, fit_grid)
        x = fit_grid.points
        a = 1j / (4 * t)
        expected = a**2 * (2 * x) ** 2 + 2 * a
        assert np.abs(out.samples - expected).max() <= 1e-12 * np.abs(expected).max()

    @pytest.mark.parametrize("order", [3, 4, 5])
    def test_matches_conjugated_derivative_identity(self, order):
        # e^{-ix^2/4t} d^order e^{ix^2/4t} computed against the recursion
        # h_{k+1} = h' + (ix/2t) h_k, which follows from the product rule
        grid = Grid1D(256, 30.0)
        t = 0.8
        x = grid.points
        h = [np.ones(grid.num_points, complex)]
        for _ in range(order):
            hf = Field(grid, h[-1])
            h.append(derivative(hf).samples + (1j * x / (2 * t)) * h[-1])
        out = hermite_factor(order, t, grid)
        bulk = np.abs(x) < 10  # spectral derivative of the polynomial wraps at the edges
        err = np.abs(out.samples - h[-1])[bulk].max()
        assert err <= 1e-9 * np.abs(h[-1])[bulk].max()

    def test_time_zero_rejected(self, fit_grid):
        with pytest.raises(ValueError):
            hermite_factor(2, 0.0, fit_grid)

    def test_order_cap(self, fit_grid):
        with pytest.raises(ValueError):
            hermite_factor(21, 1.0, fit_grid)


class TestWeightedDerivativeViaJ:
    def test_order_zero_returns_field(self, fit_gaussian):
        t = 0.5
        jf, _ = free_galilean_fields(fit_gaussian, t, 0)
        out = weighted_derivative_via_J(jf, 0, t)
        expected = free_evolve(fit_gaussian, t)
        assert l2_norm(out - expected) <= 1e-13 * l2_norm(expected)

    def test_order_one_is_rearranged_definition(self, fit_gaussian):
        t = 0.7
        jf, _ = free_galilean_fields(fit_gaussian, t, 1)
        out = weighted_derivative_via_J(jf, 1, t)
        u = free_evolve(fit_gaussian, t)
        expected = weight_apply(derivative(u), -1.0)
        assert l2_norm(out - expected) <= 1e-10 * l2_norm(expected)

    @pytest.mark.parametrize("order", [1, 2, 3, 4])
    def test_two_path_agreement_on_free_gaussian(self, fit_gaussian, order):
        t = 1.0
        jf, _ = free_galilean_fields(fit_gaussian, t, order)
        hermite = weighted_derivative_via_J(jf, order, t)
        direct = weight_apply(derivative(free_evolve(fit_gaussian, t), order), -float(order))
        num = sobolev_norm(hermite, 2.0)
        den = sobolev_norm(direct, 2.0)
        assert abs(num - den) <= 1e-6 * den

    def test_missing_orders_rejected(self, fit_gaussian):
        t = 0.5
        jf, _ = free_galilean_fields(fit_gaussian, t, 1)
        with pytest.raises(KeyError):
            weighted_derivative_via_J(jf, 3, t)

    def test_time_zero_rejected(self, fit_gaussian):
        jf, _ = free_galilean_fields(fit_gaussian, 0.5, 1)
        with pytest.raises(ValueError):
            weighted_derivative_via_J(jf, 1, 0.0)


class TestNormTableFree:
    def test_zero_order_rows_time_constant(self, fit_gaussian):
        table = norm_table_free(
            fit_gaussian, 1.0, 0.5, 2.0, [0.3, 0.7, 1.3], 0, 2
        )
        values = [table.row(0, 0, t).value for t in (0.3, 0.7, 1.3)]
        for v in values[1:]:
            assert v == pytest.approx(values[0], rel=1e-9)

    def test_path_crossover_recorded(self):
        # exp(-<x>) has slow spectral decay relative to a fine grid, so high
        # orders must hop to the Hermite path
        grid = Grid1D(4096, 100.0)
        u0 = Field(grid, np.exp(-np.sqrt(1.0 + grid.points**2)))
        table = norm_table_free(u0, 1.0, 1.0, 2.0, [1.0], 0, 10)
        paths = {a: table.row(0, a, 1.0).path for a in range(11)}
        assert paths[0] == "spectral"
        assert paths[10] == "hermite"
        assert all(table.row(0, a, 1.0).value is not None for a in range(11))

    def test_two_path_agreement_at_low_order(self, fit_gaussian):
        spectral = norm_table_free(
            fit_gaussian, 1.0, 0.5, 0.0, [1.0], 0, 4, path_policy="spectral"
        )
        hermite = norm_table_free(
            fit_gaussian, 1.0, 0.5, 0.0, [1.0], 0, 4, path_policy="hermite"
        )
        for alpha in range(1, 5):
            a = spectral.row(0, alpha, 1.0).value
            b = hermite.row(0, alpha, 1.0).value
            assert b == pytest.approx(a, rel=1e-6)

    def test_gaussian_radicals_bounded_at_endpoint_class(self, fit_gaussian):
        # Gaussian decay is the s = 1/2 endpoint: with the matching
        # normalization the radical sequence stays bounded
        table = norm_table_free(
            fit_gaussian, 1.0, 0.5, 2.0, [1.0], 0, 10, sigma=0.5
        )
        fit = gevrey_fit(table, 0.5, 0.5, (3, 10))
        assert fit.spread < 4.0

    def test_rescaling_changes_only_m(self, fit_gaussian):
        table1 = norm_table_free(fit_gaussian, 1.0, 0.5, 2.0, [1.0], 0, 6)
        table2 = norm_table_free(
            100.0 * fit_gaussian, 1.0, 0.5, 2.0, [1.0], 0, 6
        )
        fit1 = gevrey_fit(table1, 0.5, 0.5, (2, 6))
        fit2 = gevrey_fit(table2, 0.5, 0.5, (2, 6))
        for key, r1 in fit1.radicals.items():
            assert math.log(fit2.radicals[key]) == pytest.approx(
                math.log(r1), abs=1e-12
            )
        assert fit2.big_m == pytest.approx(100.0 * fit1.big_m, rel=1e-9)

    def test_strict_mode_drops_unresolved_rows(self):
        grid = Grid1D(1024, 100.0)
        u0 = Field(grid, (1.0 + grid.points**2) ** -1.5)
        lenient = norm_table_free(u0, 1.0, 1.0, 2.0, [1.0], 0, 8)
        strict = norm_table_free(u0, 1.0, 1.0, 2.0, [1.0], 0, 8, strict=True)
        high = lenient.row(0, 8, 1.0)
        assert high.value is not None and "unresolved" in high.warning
        assert strict.row(0, 8, 1.0).value is None
        assert "skipped" in strict.row(0, 8, 1.0).warning

    def test_negative_control_radicals_grow(self):
        grid = Grid1D(4096, 100.0)
        u0 = Field(grid, (1.0 + grid.points**2) ** -1.5)
        table = norm_table_free(u0, 1.0, 1.0, 2.0, [1.0], 0, 8)
        rads = [table.row(0, a, 1.0).radical for a in range(4, 9)]
        assert all(b > a for a, b in zip(rads, rads[1:]))


class TestNormTableGauge:
    @pytest.fixture(scope="class")
    def sech16(self):
        grid = Grid1D(8192, 120.0)
        return Field(grid, 1.0 / np.cosh(grid.points))

    def test_zero_coupling_reduces_to_free_table(self, sech16):
        times = [0.8]
        gauge_tab = norm_table_gauge(sech16, 0.0, 2.0, times, 6, m_max=1)
        free_tab = norm_table_free(
            sech16, 1.0, 1.0, 2.0, times, 1, 6, path_policy="hermite"
        )
        for m in (0, 1):
            for alpha in range(7):
                g = gauge_tab.row(m, alpha, 0.8).value
                f = free_tab.row(m, alpha, 0.8).value
                assert g == pytest.approx(f, rel=1e-9)

    def test_mass_row_time_constant_at_theta_zero(self, sech16):
        table = norm_table_gauge(sech16, 1.0, 0.0, [0.4, 0.8], 2, m_max=0)
        v1 = table.row(0, 0, 0.4).value
        v2 = table.row(0, 0, 0.8).value
        assert v1 == pytest.approx(v2, rel=1e-9)

    def test_low_order_rows_match_truncated_direct(self, sech16):
        from gevreylab import gauge as gauge_mod

        a, t = 1.0, 0.8
        table = norm_table_gauge(sech16, a, 2.0, [t], 4, m_max=1)
        xi = sech16.grid.frequencies

        def truncated(f):
            c = np.fft.fft(f.samples)
            c[np.abs(xi) > 24.0] = 0.0
            return Field(f.grid, np.fft.ifft(c))

        u = truncated(gauge_mod.solve_special(sech16, a, t))
        u_t = truncated(gauge_mod.time_derivative_special(sech16, a, t))
        for alpha in range(3):
            d0 = sobolev_norm(weight_apply(derivative(u, alpha), -alpha), 2.0)
            assert table.row(0, alpha, t).value == pytest.approx(d0, rel=1e-6)
            d1 = sobolev_norm(weight_apply(derivative(u_t, alpha), -(alpha + 2)), 2.0)
            assert table.row(1, alpha, t).value == pytest.approx(d1, rel=1e-6)
        for alpha in (3, 4):
            d0 = sobolev_norm(weight_apply(derivative(u, alpha), -alpha), 2.0)
            assert table.row(0, alpha, t).value == pytest.approx(d0, rel=1e-4)

    def test_m_cap(self, sech16):
        with pytest.raises(ValueError):
            norm_table_gauge(sech16, 1.0, 2.0, [0.5], 4, m_max=2)

    def test_time_zero_rejected(self, sech16):
        with pytest.raises(ValueError):
            norm_table_gauge(sech16, 1.0, 2.0, [0.0], 4)


def synthetic_table(m0: float, rho0: float, t: float, alpha_max: int) -> NormTable:
    rows = []
    for alpha in range(alpha_max + 1):
        value = m0 * rho0**alpha * math.factorial(alpha) * t**-alpha
        rows.append(NormTableRow(0, alpha, t, value, None, "synthetic", ""))
    return NormTable("synthetic", 0.0, 1.0, 1.0, tuple(rows))


class TestGevreyFit:
    def test_synthetic_fixed_point(self):
        table = synthetic_table(2.0, 3.0, 2.0, 12)
        fit = gevrey_fit(table, 1.0, 1.0, (4, 12))
        assert fit.rho == pytest.approx(3.0, rel=1e-12)
        assert fit.big_m == pytest.approx(2.0, rel=1e-12)
        assert fit.spread == pytest.approx(1.0, rel=1e-12)

    def test_unnormalized_certifies_tight_bound(self):
        table = synthetic_table(2.0, 3.0, 2.0, 12)
        fit = gevrey_fit(table, 1.0, 1.0, (4, 12), normalize=False)
        # the certified bound value <= M rho^a a! t^-a holds with equality
        # somewhere in the window
        worst = max(
            row.value * row.t**row.space_order
            / (fit.big_m * fit.rho**row.space_order * math.factorial(row.space_order))
            for row in table.rows
            if 4 <= row.space_order <= 12
        )
        assert worst == pytest.approx(1.0, rel=1e-9)

    def test_max_semantics_on_decreasing_radicals(self):
        rows = tuple(
            NormTableRow(0, a, 1.0, (10.0 / (a + 1)) ** a * math.factorial(a), None, "synthetic", "")
            for a in range(1, 9)
        )
        table = NormTable("synthetic", 0.0, 1.0, 1.0, rows)
        fit = gevrey_fit(table, 1.0, 1.0, (2, 8), normalize=False)
        assert fit.rho == pytest.approx(fit.radicals[(0, 2, 1.0)], rel=1e-12)

    def test_empty_window_rejected(self):
        table = synthetic_table(1.0, 2.0, 1.0, 5)
        with pytest.raises(ValueError):
            gevrey_fit(table, 1.0, 1.0, (8, 12))

    def test_duplicate_keys_rejected(self):
        row = NormTableRow(0, 1, 1.0, 1.0, None, "", "")
        with pytest.raises(ValueError):
            NormTable("x", 0.0, 1.0, 1.0, (row, row))


class TestDecayFit:
    @pytest.fixture(scope="class")
    def exp_profile(self):
        grid = Grid1D(8192, 180.0)
        return Field(grid, np.exp(-np.sqrt(1.0 + grid.points**2)))

    def test_zeroth_radical_at_most_one(self, exp_profile):
        fit = decay_fit(exp_profile, 1.0, 1.0, 2.0, 4)
        assert fit.q_values[0] <= 1.0

    def test_radicals_bounded_in_window(self, exp_profile):
        fit = decay_fit(exp_profile, 1.0, 1.0, 2.0, 12)
        window = fit.q_values[4:]
        assert max(window) / min(window) <= 3.0
        assert fit.q == max(fit.q_values)

    def test_scale_invariance_exact_in_log_domain(self, exp_profile):
        fit1 = decay_fit(exp_profile, 1.0, 1.0, 2.0, 8)
        fit2 = decay_fit(1e6 * exp_profile, 1.0, 1.0, 2.0, 8)
        for q1, q2 in zip(fit1.q_values, fit2.q_values):
            assert math.log(q2) == pytest.approx(math.log(q1), abs=1e-12)

    def test_class_defect_flags_poly(self):
        grid = Grid1D(1024, 100.0)
        poly = Field(grid, (1.0 + grid.points**2) ** -1.5)
        fit = decay_fit(poly, 1.0, 1.0, 2.0, 3)
        assert fit.class_defect == "outside-exponential-class"
        with pytest.raises(ValueError):
            decay_fit(poly, 1.0, 1.0, 2.0, 3, strict=True)

    def test_weight_overflow_raises(self):
        grid = Grid1D(1024, 200.0)
        poly = Field(grid, (1.0 + grid.points**2) ** -1.5)
        with pytest.raises(OverflowError):
            decay_fit(poly, 10.0, 1.0, 2.0, 3)

    def test_clean_class_not_flagged(self, exp_profile):
        assert exponential_class_defect(exp_profile, 1.0, 1.0) == ""


class TestWeightCommutator:
    def test_zero_orders_bounded_by_multiplier(self, fit_gaussian):
        # |xi| <xi>^{theta-1} <= <xi>^theta makes C0 = 1 sufficient
        check = weight_commutator_check(fit_gaussian, 0, 0, theta=2.0)
        assert check.c0_first <= 1.0 + 1e-12

    def test_gaussian_mixed_orders(self, fit_gaussian):
        corpus_c0 = 2.0  # stability sweep below keeps well under this
        check = weight_commutator_check(fit_gaussian, 2, 1, theta=2.0)
        assert check.lhs_first <= corpus_c0 * check.core_first
        assert check.lhs_second <= check.fixed_second + corpus_c0 * check.core_second

    def test_corpus_sup_stable(self, fit_grid):
        sups = []
        for seed in (21, 22):
            rng = np.random.default_rng(seed)
            worst = 0.0
            for _ in range(25):
                u = random_resolved_field(fit_grid, rng)
                alpha = int(rng.integers(0, 5))
                m = int(rng.integers(0, 2))
                worst = max(worst, weight_commutator_check(u, alpha, m).c0)
            sups.append(worst)
        assert max(sups) <= 2.0 * min(sups)
        assert max(sups) < 10.0

    def test_rejects_negative_orders(self, fit_gaussian):
        with pytest.raises(ValueError):
            weight_commutator_check(fit_gaussian, -1, 0)
