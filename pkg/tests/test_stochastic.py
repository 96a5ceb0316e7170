import math

import numpy as np
import pytest
from scipy import stats

from tsrm import airy, marginals, pde
from tsrm.errors import DomainError, StatisticsError
from tsrm.stochastic import brownian, gof, tsaw


class TestPathFunctional:
    def test_start_at_zero(self):
        for seed in range(5):
            s = brownian.sample_path_functional(0.0, 1.0, 1e-3, seed)
            assert s.S == 0.0

    def test_monotone_and_decomposition(self):
        for seed in range(20):
            s = brownian.sample_path_functional(0.7, 2.0, 1e-3, seed)
            assert s.S >= 0 and np.all(s.T1 >= 0) and np.all(s.T2 >= 0)
            assert np.all(np.diff(s.T1) >= 0)
            T = s.T
            fin = np.isfinite(T)
            assert np.all(np.diff(T[fin]) >= -1e-12)
            assert s.T1[0] == 0.0

    def test_reproducible(self):
        a = brownian.sample_path_functional(0.5, 1.0, 1e-3, 11)
        b = brownian.sample_path_functional(0.5, 1.0, 1e-3, 11)
        assert a.S == b.S and np.array_equal(a.T2, b.T2)

    def test_domain(self):
        with pytest.raises(DomainError):
            brownian.sample_path_functional(-1.0, 1.0, 1e-3, 0)
        with pytest.raises(DomainError):
            brownian.sample_path_functional(1.0, 1.0, 0.0, 0)


class TestMonteCarlo:
    def test_u_at_zero_exact(self):
        mu, se = brownian.mc_estimate("u", 1000, 1e-3, 0, h=0.0)
        assert mu == 1.0 and se == 0.0

    def test_u_at_one(self):
        mu, se = brownian.mc_estimate("u", 20_000, 1e-4, 1, h=1.0)
        assert abs(mu - airy.u(1.0)) < 3 * se

    def test_nu_hat_initial_value(self):
        mu, se = brownian.mc_estimate("nu_hat", 20_000, 1e-4, 2, h=0.5, x=0.0)
        assert abs(mu - airy.u(0.5) ** 2) < 3 * se
        mp_, sp = brownian.mc_estimate("nu_hat", 20_000, 1e-4, 2, h=0.5, x=0.0, product=True)
        assert abs(mp_ - airy.u(0.5) ** 2) < 3 * sp

    def test_w(self):
        mu, se = brownian.mc_estimate("w", 20_000, 1e-4, 3, x=1.0)
        assert abs(mu - marginals.w_of_x(1.0)) < 3 * se

    def test_phi_against_pde(self):
        f = pde.solve_phi()
        ens = brownian.simulate_paths(0.5, [0.5, 1.0], 20_000, 1e-4, 4)
        mu, se = ens.estimate("phi")
        for k, x in enumerate((0.5, 1.0)):
            assert abs(mu[k] - pde.interpolate(f, x, 0.5)) < 3 * se[k]

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            brownian.mc_estimate("u", 999, 1e-3, 0)
        with pytest.raises(DomainError):
            brownian.mc_estimate("psi", 1000, 1e-3, 0)


class TestTsawStep:
    def test_first_step_symmetric(self):
        assert tsaw.p_right(0, 1.0) == 0.5
        rng = np.random.default_rng(0)
        right = sum(tsaw.tsaw_step(tsaw.TsawState(), 1.0, rng).position == 1 for _ in range(4000))
        assert abs(right - 2000) < 4 * math.sqrt(1000)

    @pytest.mark.parametrize("beta", [0.5, 1.0])
    def test_repulsion_after_back_and_forth(self, beta):
        st = tsaw.TsawState()
        st.bonds[0] = 2
        st.n = 2
        assert st.delta() == -2
        p_left = 1 - tsaw.p_right(st.delta(), beta)
        assert p_left == pytest.approx(math.exp(2 * beta) / (math.exp(2 * beta) + math.exp(-2 * beta)), rel=1e-14)

    def test_bookkeeping(self):
        rng = np.random.default_rng(5)
        st = tsaw.TsawState()
        for _ in range(500):
            tsaw.tsaw_step(st, 1.0, rng)
        assert sum(st.bonds.values()) == st.n == 500
        j = st.position
        assert st.local_time() == 0.5 * (st.occupation(j - 1) + st.occupation(j))

    def test_kernel_matches_reference_law(self):
        rng = np.random.default_rng(9)
        ref = []
        for _ in range(3000):
            st = tsaw.TsawState()
            for _ in range(60):
                tsaw.tsaw_step(st, 1.0, rng)
            ref.append((st.position, st.local_time()))
        ref = np.array(ref)
        ens = tsaw.tsaw_ensemble(3000, 60, seed=9)
        assert stats.ks_2samp(np.abs(ref[:, 0]), np.abs(ens.position)).pvalue > 1e-3
        assert stats.ks_2samp(ref[:, 1], ens.local_time).pvalue > 1e-3


class TestEnsemble:
    def test_reproducible_across_chunking(self):
        a = tsaw.tsaw_ensemble(300, 2000, seed=42, chunk=7, workers=1)
        b = tsaw.tsaw_ensemble(300, 2000, seed=42, chunk=4096, workers=3)
        assert np.array_equal(a.position, b.position)
        assert np.array_equal(a.local_time, b.local_time)
        c = tsaw.tsaw_ensemble(300, 2000, seed=43)
        assert not np.array_equal(a.position, c.position)

    def test_records(self):
        ens = tsaw.tsaw_ensemble(10, 100, seed=1)
        recs = ens.records()
        assert len(recs) == 10 and all(r.n_steps == 100 and r.mode == "fixed" for r in recs)
        assert all((r.position - r.n_steps) % 2 == 0 for r in recs)
        assert tsaw.tsaw_run(100, seed=1).n_steps == 100

    def test_geometric_mean(self):
        n = tsaw.stopping_times(10_000, 1000, "geometric", 3)
        assert n.mean() == pytest.approx(1000, rel=0.02)

    def test_superdiffusive_exponent(self):
        ns = np.array([10_000, 30_000, 100_000])
        rms = [math.sqrt(np.mean(tsaw.tsaw_ensemble(1500, int(n), seed=7).position.astype(float) ** 2))
               for n in ns]
        slope = np.polyfit(np.log(ns), np.log(rms), 1)[0]
        assert slope == pytest.approx(2 / 3, rel=0.10)

    def test_positions_centred(self):
        ens = tsaw.tsaw_ensemble(4000, 5000, seed=8)
        x = ens.position.astype(float)
        assert abs(x.mean()) < 3 * x.std() / math.sqrt(x.size)

    def test_domain(self):
        with pytest.raises(DomainError):
            tsaw.tsaw_ensemble(10, 10, mode="poisson")
        with pytest.raises(DomainError):
            tsaw.tsaw_ensemble(10, 10, beta=0.0)


class TestGof:
    def test_null_samples_pass(self):
        x = marginals.sample("nu1_hat", 20_000, np.random.default_rng(12))
        r = gof.calibrate_and_test(x, "nu1_hat", calibrate=False)
        assert r.p_value > 1e-3
        assert r.ks_statistic < 0.02

    def test_calibration_recovers_scale(self):
        x = marginals.sample("nu2", 20_000, np.random.default_rng(13))
        r = gof.calibrate_and_test(2.5 * x, "nu2")
        assert r.calibrated_scale == pytest.approx(0.4, rel=0.02)
        assert r.p_value > 1e-3
        assert sum(r.histogram[1]) == r.n == 20_000
        assert 0 <= r.ks_statistic <= 1
        d = r.to_dict()
        assert set(d) >= {"n", "ks", "alpha_hat", "moment_checks"}

    def test_wrong_shape_detected(self):
        x = np.random.default_rng(14).exponential(size=20_000)
        assert gof.calibrate_and_test(x, "nu2").ks_statistic > 0.05

    def test_errors(self):
        with pytest.raises(StatisticsError):
            gof.calibrate_and_test(np.ones(10), "nu1")
        with pytest.raises(StatisticsError):
            gof.calibrate_and_test(np.zeros(2000), "nu1")
        with pytest.raises(StatisticsError):
            gof.calibrate_and_test(-np.ones(2000), "nu2")
        with pytest.raises(StatisticsError):
            gof.calibrate_and_test(np.full(2000, np.nan), "nu1")
