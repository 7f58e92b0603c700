import math

import numpy as np
import pytest
from scipy import stats

from mc_curse import bounds
from mc_curse.distributions import cdf_empirical_max_m2, ks_test
from mc_curse.errors import BudgetExceededError
from mc_curse.experiments import (
    ExperimentSpec,
    calibrate_probability,
    default_image_objective,
    diagonal_objective,
    reproduce_table1,
    reproduce_table2,
    run_empirical_max,
    run_image2d,
)
from mc_curse.sampling import RngStream, sample_ball_batch


class TestSpec:
    def test_defaults(self):
        spec = ExperimentSpec("l2", 4, 100)
        assert spec.chunk_size == 100 and spec.chunks == 1
        np.testing.assert_array_equal(spec.objective, [1, 0, 0, 0])

    def test_budget_guard(self):
        with pytest.raises(BudgetExceededError):
            ExperimentSpec("l2", 3, 10**6, repetitions=2000)
        with pytest.raises(BudgetExceededError):
            ExperimentSpec("l2", 3, 1000, max_draws=999)

    def test_rejects_bad_objective(self):
        with pytest.raises(ValueError):
            ExperimentSpec("l2", 3, 10, objective=np.zeros(3))
        with pytest.raises(ValueError):
            ExperimentSpec("l2", 3, 10, objective=np.ones(4))

    def test_image_needs_orthonormal_rows(self):
        spec = ExperimentSpec("l2", 3, 10, objective=np.array([[1.0, 0, 0], [1.0, 1.0, 0]]))
        with pytest.raises(ValueError):
            run_image2d(spec)
        with pytest.raises(ValueError):
            run_image2d(ExperimentSpec("linf", 3, 10, objective=default_image_objective(3)))


class TestEmpiricalMax:
    def test_one_ball_order_statistic(self):
        # max of N draws of U(-1, 1): mean 1 - 2/(N+1), sd about 2/N
        count, reps = 10**4, 400
        s = run_empirical_max(ExperimentSpec("l2", 1, count, repetitions=reps, seed=3))
        mean = 1 - 2 / (count + 1)
        sd = 2 * math.sqrt(count) / ((count + 1) * math.sqrt(count + 2))
        assert abs(s.mean_max - mean) < 3 * sd / math.sqrt(reps)

    def test_matches_direct_sampling(self):
        spec = ExperimentSpec("l1", 4, 1000, repetitions=2, chunk_size=300, seed=8)
        s = run_empirical_max(spec)
        for rep in range(2):
            want = max(
                sample_ball_batch("l1", 4, 300, spec.chunk_stream(rep, c))[: min(300, 1000 - 300 * c), 0].max()
                for c in range(4)
            )
            assert s.maxima[rep] == want

    def test_linf_fast_path_agrees_with_sampler(self):
        spec = ExperimentSpec("linf", 6, 500, objective=diagonal_objective(6), seed=2)
        s = run_empirical_max(spec)
        direct = sample_ball_batch("linf", 6, 500, spec.chunk_stream(0, 0)).sum(axis=1).max()
        assert s.empirical_max == pytest.approx(direct, abs=1e-13)

    @pytest.mark.parametrize("ball", ["l1", "l2", "linf"])
    def test_never_exceeds_true_max(self, ball):
        obj = np.array([0.3, -1.2, 0.5])
        s = run_empirical_max(ExperimentSpec(ball, 3, 10**5, objective=obj, repetitions=3))
        assert s.empirical_max <= s.true_max + 1e-12

    def test_determinism_across_workers(self):
        base = dict(ball="l2", n=5, count=5000, repetitions=12, chunk_size=700, seed=42)
        a = run_empirical_max(ExperimentSpec(**base, workers=1))
        b = run_empirical_max(ExperimentSpec(**base, workers=4))
        np.testing.assert_array_equal(a.maxima, b.maxima)

    def test_monotone_coupling(self):
        prev = -np.inf
        for count in [1, 10, 99, 500, 2000, 10**4]:
            s = run_empirical_max(ExperimentSpec("l2", 6, count, repetitions=4, chunk_size=512, seed=9))
            assert np.all(s.maxima >= prev)
            prev = s.maxima

    def test_success_count(self):
        s = run_empirical_max(ExperimentSpec("l2", 2, 50, repetitions=100), threshold=0.9)
        assert s.success_count == int(np.sum(s.maxima > 0.9))
        assert s.success_count <= 100


class TestImage2d:
    def test_kappa_squared_uniform_at_n2(self):
        spec = ExperimentSpec("l2", 2, 1, objective=default_image_objective(2), repetitions=5000, seed=1)
        s = run_image2d(spec)
        assert stats.kstest(s.maxima, "uniform").pvalue > 0.01
        np.testing.assert_allclose(s.boundary_proximity**2, s.maxima)

    def test_maxima_follow_eta_cdf(self):
        n, count, reps = 20, 10**4, 10**3
        spec = ExperimentSpec("l2", n, count, objective=default_image_objective(n), repetitions=reps, seed=5)
        s = run_image2d(spec)
        assert ks_test(s.maxima, lambda x: cdf_empirical_max_m2(n, count, x), 0.01).passed

    def test_n50_gap_exceedances_match_closed_form(self):
        # a single run keeps every image 0.35 away from the boundary with probability ~0.9;
        # over 20 runs the number of exceptions should look Binomial(20, q)
        n, count, reps = 50, 10**5, 20
        q = 1 - cdf_empirical_max_m2(n, count, 0.65**2)
        assert 0.09 < q < 0.12
        spec = ExperimentSpec("l2", n, count, objective=default_image_objective(n), repetitions=reps)
        over = int(np.sum(run_image2d(spec).boundary_proximity >= 0.65))
        assert stats.binomtest(over, reps, q).pvalue > 0.01

    def test_rotated_objective_same_law(self):
        n, count = 6, 200
        q, _ = np.linalg.qr(RngStream(3).generator().standard_normal((n, 2)))
        spec = ExperimentSpec("l2", n, count, objective=q.T, repetitions=2000, seed=4)
        s = run_image2d(spec)
        assert ks_test(s.maxima, lambda x: cdf_empirical_max_m2(n, count, x), 0.01).passed

    def test_scatter(self):
        spec = ExperimentSpec("l2", 5, 3000, objective=default_image_objective(5), chunk_size=1000, scatter=2500)
        s = run_image2d(spec)
        assert s.scatter.shape == (2500, 2)
        assert np.max(np.einsum("ij,ij->i", s.scatter, s.scatter)) <= s.empirical_max


class TestCalibration:
    def test_scalar_probability(self):
        spec = ExperimentSpec("l2", 3, 100, repetitions=10**4, seed=11)
        rec = calibrate_probability(bounds.prob_empirical_max_l2, spec, 0.2)
        assert rec.agree, rec.as_dict()

    def test_boundary_probability(self):
        n, delta = 4, 0.2
        count = int(bounds.nmin_multiobjective(n, delta, 0.9))
        spec = ExperimentSpec("l2", n, count, objective=default_image_objective(n), repetitions=10**4, seed=12)
        rec = calibrate_probability(bounds.prob_boundary_hit, spec, delta)
        assert rec.predicted >= 0.9
        assert rec.agree, rec.as_dict()

    def test_delta_one(self):
        count = 8
        spec = ExperimentSpec("l2", 3, count, repetitions=2000, seed=13)
        rec = calibrate_probability(bounds.prob_empirical_max_l2, spec, 1.0)
        assert rec.predicted == pytest.approx(1 - 0.5**count, rel=1e-14)
        assert rec.agree

    def test_needs_repetitions(self):
        with pytest.raises(ValueError):
            calibrate_probability(bounds.prob_empirical_max_l2, ExperimentSpec("l2", 3, 10, repetitions=10), 0.2)


class TestTables:
    def test_table1_shape(self):
        t = reproduce_table1()
        assert set(t.rows) == {"l2", "linf", "l1"}
        assert all(len(v) == 7 for v in t.rows.values())
        assert int(t.rows["l2"][0]) == 119

    def test_table2_small(self):
        t = reproduce_table2(budget=1000, repetitions=5, dims=(2, 3))
        assert t.rows["uniform"][0] == pytest.approx(2 * (1 - 2 / 33))
        assert len(t.rows["monte_carlo"]) == 2
        assert all(m < n for m, n in zip(t.rows["sobol"], (2, 3)))

    def test_table2_guard(self):
        with pytest.raises(BudgetExceededError):
            reproduce_table2(budget=10**7, repetitions=100)
