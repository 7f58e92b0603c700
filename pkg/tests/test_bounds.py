import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from mc_curse import bounds
from mc_curse.bounds import AccuracySpec, SampleCount
from mc_curse.sampling import RngStream, sample_ball_batch

DELTAS = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3]
PS = [0.5, 0.9, 0.99]


def three_sigma(p, trials):
    return 3 * math.sqrt(p * (1 - p) / trials)


class TestSampleCount:
    def test_ceil_snaps_rounding_noise(self):
        assert SampleCount.ceil(59.000000000000004).value == 59
        assert SampleCount.ceil(58.4).value == 59
        assert SampleCount.ceil(0.3).value == 1

    def test_large_values_are_magnitudes(self):
        c = SampleCount.ceil(6.1e13 * 1e3)
        assert not c.is_ceiled
        assert str(c) == "6.100000e+16"

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            SampleCount.ceil(-1.0)

    def test_accuracy_spec_validation(self):
        for d, p in [(0.0, 0.5), (1.0, 0.5), (0.5, 0.0), (0.5, 1.0)]:
            with pytest.raises(ValueError):
                AccuracySpec(d, p)


class TestBallL2:
    def test_delta_one_whole_half_ball(self):
        for count in [1, 2, 7]:
            assert bounds.prob_empirical_max_l2(5, 1.0, count) == pytest.approx(1 - 0.5**count)

    def test_reference_n10(self):
        n_min = bounds.nmin_l2(10, 0.05, 0.95)
        assert float(n_min) == pytest.approx(8.8694e6, rel=5e-5)
        assert bounds.prob_empirical_max_l2(10, 0.05, 8.87e6) == pytest.approx(0.95, abs=5e-4)

    def test_one_dimension(self):
        assert int(bounds.nmin_l2(1, 0.05, 0.95)) == 119

    def test_n15(self):
        assert float(bounds.nmin_l2(15, 0.05, 0.95)) == pytest.approx(3.6e9, rel=0.02)

    def test_probability_matches_simulation(self):
        n, delta, count, reps = 3, 0.2, 100, 10**4
        x1 = sample_ball_batch("l2", n, count * reps, RngStream(2024))[:, 0]
        freq = np.mean(x1.reshape(reps, count).max(axis=1) > 1 - delta)
        p = bounds.prob_empirical_max_l2(n, delta, count)
        assert abs(freq - p) < three_sigma(p, reps)

    @given(
        st.integers(min_value=1, max_value=40),
        st.sampled_from(DELTAS),
        st.sampled_from(PS + [0.95]),
    )
    def test_inversion_consistency(self, n, delta, p):
        count = bounds.nmin_l2(n, delta, p)
        # N and N - 1 are only distinguishable in double when (1 - p) q is well above eps
        assume(count.is_ceiled and (1 - p) * bounds.tail_l2(n, delta) > 1e-10)
        assert bounds.prob_empirical_max_l2(n, delta, count.value) >= p
        if count.value > 1:
            assert bounds.prob_empirical_max_l2(n, delta, count.value - 1) < p


class TestLowerBounds:
    def test_reference_values(self):
        appr, tilde = bounds.nmin_l2_lower(10, 0.05, 0.95)
        assert float(appr) == pytest.approx(8.7972e6, rel=5e-5)
        assert float(tilde) == pytest.approx(8.5998e6, rel=5e-5)

    def test_ordering_sweep(self):
        for n in range(2, 51):
            for delta in DELTAS:
                for p in PS:
                    appr, tilde = bounds.nmin_l2_lower(n, delta, p)
                    exact = bounds.nmin_l2(n, delta, p)
                    assert float(tilde) <= float(appr) <= float(exact)


class TestCap:
    def test_hemisphere(self):
        assert bounds.cap_success_probability(3.0, 3.0, 8) == 0.5

    def test_empty(self):
        assert bounds.cap_success_probability(3.0, 0.0, 8) == 0.0

    def test_reference_n15(self):
        val = bounds.cap_success_probability(100.0, 1.0, 15)
        assert 1e-16 <= val <= 1e-14
        # (1/2) I(0.0199; 8, 0.5), quadrature value frozen in test_specfun
        assert val == pytest.approx(0.5 * 4.873033061393969e-15, rel=1e-10)

    def test_cap_matches_simulation_low_dim(self):
        r, h, n = 1.0, 0.4, 3
        x1 = sample_ball_batch("l2", n, 10**6, RngStream(6))[:, 0]
        freq = np.mean(x1 >= r - h)
        # spherical cap in 3D: exact volume pi h^2 (3r - h) / 3 over 4 pi r^3 / 3
        exact = h * h * (3 * r - h) / (4 * r**3)
        assert bounds.cap_success_probability(r, h, n) == pytest.approx(exact, rel=1e-12)
        assert abs(freq - exact) < three_sigma(exact, 10**6)

    def test_h_above_r_rejected(self):
        with pytest.raises(ValueError):
            bounds.cap_success_probability(1.0, 1.5, 3)


class TestMultiobjective:
    def test_reference_value(self):
        assert float(bounds.nmin_multiobjective(10, 0.05, 0.95)) == pytest.approx(3.4e5, rel=0.015)

    @pytest.mark.parametrize("delta", [0.05, 0.3, 0.7])
    def test_n2_uniform(self, delta):
        want = math.log(0.1) / math.log(1 - (2 * delta - delta**2))
        assert int(bounds.nmin_multiobjective(2, delta, 0.9)) == math.ceil(want)

    def test_approximation_close_for_small_delta(self):
        exact = float(bounds.nmin_multiobjective(10, 0.01, 0.95))
        assert bounds.nmin_multiobjective_approx(10, 0.01, 0.95) == pytest.approx(exact, rel=1e-6)

    def test_calibrated_by_simulation(self):
        n, delta, p, reps = 4, 0.2, 0.9, 10**4
        count = int(bounds.nmin_multiobjective(n, delta, p))
        pts = sample_ball_batch("l2", n, count * reps, RngStream(77))
        kappa = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2).reshape(reps, count).max(axis=1)
        freq = np.mean(kappa > 1 - delta)
        exact = bounds.prob_boundary_hit(n, delta, count)
        assert exact >= p
        assert abs(freq - exact) < three_sigma(exact, reps)


class TestModeExpectation:
    def test_mode_n_one_sample(self):
        assert bounds.mode_empirical_max(7, 1) == 0.0

    def test_mode_reference(self):
        assert round(bounds.mode_empirical_max(20, 10**9), 4) == 0.8754

    def test_mode_approx(self):
        assert bounds.mode_empirical_max_approx(20, 10**9) == pytest.approx(1 - 10**-0.9, abs=1e-14)
        assert round(bounds.mode_empirical_max_approx(20, 10**9), 4) == 0.8741

    def test_mode_domain(self):
        with pytest.raises(ValueError):
            bounds.mode_empirical_max(2, 10)

    @pytest.mark.parametrize("count", [1, 5, 1000])
    def test_expect_n2(self, count):
        assert bounds.expect_empirical_max(2, count) == pytest.approx(count / (count + 1), rel=1e-13)

    def test_expect_reference(self):
        assert round(bounds.expect_empirical_max(20, 10**9), 4) == 0.8802

    def test_expect_against_quadrature(self):
        n, count = 4, 100

        def x_pdf(x):
            return x * count * n / 2 * (1 - x) ** (n / 2 - 1) * (1 - (1 - x) ** (n / 2)) ** (count - 1)

        val, _ = integrate.quad(x_pdf, 0, 1, epsabs=1e-13, epsrel=1e-13, limit=200)
        assert bounds.expect_empirical_max(n, count) == pytest.approx(val, abs=1e-8)

    def test_mode_and_expectation_close(self):
        assert abs(bounds.mode_empirical_max(20, 10**9) - bounds.expect_empirical_max(20, 10**9)) < 0.01


class TestBox:
    def test_axis_reference(self):
        assert int(bounds.nmin_box_axis(0.1, 0.95)) == 59
        assert int(bounds.nmin_box_axis(0.05, 0.95)) == 119

    def test_axis_small_p(self):
        assert int(bounds.nmin_box_axis(0.1, 1e-12)) == 1

    def test_diag_reference(self):
        assert abs(int(bounds.nmin_box_diag(2, 0.1, 0.95)) - 600) <= 2
        # printed as 1.12e10; the formula gives 1.1132e10, equal at 2 significant digits
        assert f"{float(bounds.nmin_box_diag(10, 0.1, 0.95)):.1e}" == "1.1e+10"
        assert f"{float(bounds.nmin_box_diag(10, 0.1, 0.99)):.1e}" == "1.7e+10"

    def test_diag_log_space_matches_direct_small_n(self):
        for n in range(1, 8):
            q = n**n * 0.05**n / (2**n * math.factorial(n))
            assert float(bounds.nmin_box_diag(n, 0.05, 0.95)) == math.ceil(math.log(0.05) / math.log1p(-q))

    def test_diag_precondition(self):
        with pytest.raises(ValueError):
            bounds.nmin_box_diag(10, 0.5, 0.95)

    def test_stirling_form_brackets(self):
        for n in [10, 20, 40]:
            for delta in [0.005, 0.01, 0.02]:
                exact = float(bounds.nmin_box_diag(n, delta, 0.95))
                stirling = bounds.nmin_box_diag_stirling(n, delta, 0.95)
                assert stirling <= exact <= stirling * math.exp(1 / (12 * n)) + 1

    def test_diag_corner_volume_simulation(self):
        # P{sum x >= n(1 - delta)} = (n delta)^n / (2^n n!) on the box
        n, delta, draws = 2, 0.3, 10**6
        s = sample_ball_batch("linf", n, draws, RngStream(9)).sum(axis=1)
        q = math.exp(bounds.log_tail_box_diag(n, delta))
        assert abs(np.mean(s >= n * (1 - delta)) - q) < three_sigma(q, draws)


class TestL1:
    def test_reference_values(self):
        assert int(bounds.nmin_l1(1, 0.05, 0.95)) == 119
        assert float(bounds.nmin_l1(10, 0.05, 0.95)) == pytest.approx(6.1e13, rel=0.01)
        assert float(bounds.nmin_l1(15, 0.05, 0.95)) == pytest.approx(2e20, rel=0.03)
        assert not bounds.nmin_l1(15, 0.05, 0.95).is_ceiled

    def test_approx(self):
        assert bounds.nmin_l1_approx(10, 0.05, 0.95) == pytest.approx(float(bounds.nmin_l1(10, 0.05, 0.95)), rel=1e-9)


class TestGridCardinality:
    def test_reference(self):
        assert float(bounds.uniform_grid_cardinality(10, 0.1)) == pytest.approx(6.13e12, rel=1e-3)
        assert bounds.uniform_grid_cardinality(10, 0.1).value == 19**10

    def test_trivial(self):
        assert bounds.uniform_grid_cardinality(1, 0.5).value == 3
        assert float(bounds.uniform_grid_cardinality(30, 0.999999)) == pytest.approx(1.0, rel=1e-4)
        assert float(bounds.uniform_grid_cardinality(3, 1 - 1e-12)) == pytest.approx(1.0, rel=1e-10)


class TestFamilyProperties:
    FAMILIES = {
        "l2": bounds.nmin_l2,
        "box_diag": bounds.nmin_box_diag,
        "l1": bounds.nmin_l1,
        "multiobjective": bounds.nmin_multiobjective,
    }

    @pytest.mark.parametrize("name", sorted(FAMILIES))
    def test_monotonicity(self, name):
        fn = self.FAMILIES[name]
        lo = 2 if name == "multiobjective" else 1
        deltas = [0.01, 0.02, 0.03, 0.05]
        for p in PS:
            for d in deltas:
                vals = [float(fn(n, d, p)) for n in range(lo, 16)]
                assert all(a <= b for a, b in zip(vals, vals[1:]))
            for n in range(lo, 16):
                vals = [float(fn(n, d, p)) for d in deltas]
                assert all(a >= b for a, b in zip(vals, vals[1:]))
        for n in range(lo, 16):
            vals = [float(fn(n, 0.05, p)) for p in PS]
            assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_cross_family_ordering(self):
        for n in range(2, 16):
            l2 = float(bounds.nmin_l2(n, 0.05, 0.95))
            box = float(bounds.nmin_box_diag(n, 0.05, 0.95))
            l1 = float(bounds.nmin_l1(n, 0.05, 0.95))
            assert l2 <= box <= l1

    @settings(max_examples=50)
    @given(st.integers(2, 30), st.floats(0.01, 0.5), st.floats(0.05, 0.99))
    def test_multiobjective_inversion(self, n, delta, p):
        count = bounds.nmin_multiobjective(n, delta, p)
        assume(count.is_ceiled and (1 - p) * bounds.tail_image2d(n, delta) > 1e-10)
        assert bounds.prob_boundary_hit(n, delta, count.value) >= p
        if count.value > 1:
            assert bounds.prob_boundary_hit(n, delta, count.value - 1) < p
