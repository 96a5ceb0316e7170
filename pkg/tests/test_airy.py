import math

import mpmath as mp
import numpy as np
import pytest
from scipy.integrate import solve_ivp

from tsrm import airy
from tsrm.errors import DomainError

mp.mp.dps = 30


def _mp_u(h):
    return 3 ** (mp.mpf(2) / 3) * mp.gamma(mp.mpf(2) / 3) * mp.airyai(mp.cbrt(2) * h)


def _series_ai(z, terms=200):
    # Maclaurin series of Ai at high precision, independent of the library
    z = mp.mpf(z)
    c1 = 1 / (mp.power(3, mp.mpf(2) / 3) * mp.gamma(mp.mpf(2) / 3))
    c2 = 1 / (mp.power(3, mp.mpf(1) / 3) * mp.gamma(mp.mpf(1) / 3))
    f, g = mp.mpf(1), z
    sf, sg = f, g
    for k in range(1, terms):
        f *= z ** 3 / ((3 * k - 1) * (3 * k))
        g *= z ** 3 / ((3 * k) * (3 * k + 1))
        sf += f
        sg += g
    return c1 * sf - c2 * sg


class TestAiryPair:
    def test_values_at_zero(self):
        a = airy.airy_pair(0.0)
        assert a.ai == pytest.approx(0.3550280539, abs=1e-10)
        assert a.ai_prime == pytest.approx(-0.2588194038, abs=1e-10)

    def test_wronskian(self):
        for z in (-7.0, -1.0, 0.0, 3.0, 9.5):
            assert airy.airy_pair(z).wronskian == pytest.approx(1 / math.pi, rel=1e-12)

    def test_against_series_oracle(self):
        with mp.workdps(60):
            ref = float(_series_ai(5))
        assert airy.airy_pair(5.0).ai == pytest.approx(ref, rel=1e-10)
        assert ref == pytest.approx(1.0834e-4, rel=1e-3)

    @pytest.mark.parametrize("z", [-10.0, -4.3, -0.7, 0.4, 2.0, 6.0, 10.0])
    def test_against_mpmath(self, z):
        a = airy.airy_pair(z)
        assert a.ai == pytest.approx(float(mp.airyai(z)), rel=1e-10, abs=1e-14)
        assert a.bi == pytest.approx(float(mp.airybi(z)), rel=1e-10)

    def test_scaled_beyond_overflow(self):
        a = airy.airy_pair(400.0)
        assert a.scaled and np.isfinite(a.bi)
        assert a.wronskian == pytest.approx(1 / math.pi, rel=1e-10)

    def test_non_finite(self):
        with pytest.raises(DomainError):
            airy.airy_pair(float("nan"))


class TestNormalizedU:
    def test_anchor_values(self):
        assert airy.u(0.0) == 1.0
        target = -6 ** (1 / 3) * math.gamma(2 / 3) / math.gamma(1 / 3)
        assert airy.u_prime(0.0) == pytest.approx(target, rel=1e-14)
        assert airy.u_prime(0.0) == pytest.approx(float(mp.diff(_mp_u, 0)), rel=1e-13)

    @pytest.mark.parametrize("h", [-5.0, -1.2, 0.3, 1.0, 2.5, 6.0])
    def test_against_mpmath(self, h):
        assert airy.u(h) == pytest.approx(float(_mp_u(h)), rel=1e-10, abs=1e-15)
        d = mp.diff(_mp_u, h)
        assert airy.u_prime(h) == pytest.approx(float(d), rel=1e-9, abs=1e-14)

    def test_asymptotic_prefactor(self):
        h = 8.0
        scaled = airy.u(h) * h ** 0.25 * math.exp(2 ** 1.5 / 3 * h ** 1.5)
        pref = 3 ** (2 / 3) * math.gamma(2 / 3) / (2 ** (13 / 12) * math.sqrt(math.pi))
        assert pref == pytest.approx(0.75, abs=1e-3)
        assert scaled == pytest.approx(pref, rel=5e-3)

    def test_ode_residual_random(self):
        rng = np.random.default_rng(1)
        h = rng.uniform(-5, 5, 200)
        res = np.abs(airy.u_second(h) - 2 * h * airy.u(h))
        assert np.all(res <= 1e-8 * (1 + np.abs(airy.u(h))))

    def test_log_u_deep_tail(self):
        assert airy.log_u(30.0) == pytest.approx(float(mp.log(_mp_u(30))), rel=1e-10)


class TestSpectrum:
    def test_first_zero_by_bisection(self):
        from scipy.optimize import brentq

        d1 = brentq(lambda h: airy.u_prime(-h), 0.5, 1.5, xtol=1e-15)
        data = airy.spectrum(50)
        assert data.delta_prime[0] == pytest.approx(d1, abs=1e-12)
        assert data.delta_prime[0] == pytest.approx(0.808616, abs=1e-6)
        assert d1 == pytest.approx(1.0187930 / 2 ** (1 / 3), abs=1e-7)

    def test_first_weight(self):
        data = airy.spectrum(50)
        assert data.p[0] == pytest.approx(0.5 * airy.U_PRIME_0 ** 2 * data.delta_prime[0] ** -4, rel=1e-14)
        assert data.p[0] == pytest.approx(0.98663, abs=1e-5)

    def test_weights_sum_to_one(self):
        data = airy.spectrum(50)
        assert abs(data.p.sum() + data.tail_estimate - 1) < 1e-6
        assert abs(data.p.sum() + data.tail_estimate - 1) <= data.tail_bound

    def test_zeros_against_mpmath(self):
        data = airy.spectrum(40)
        for k in (1, 2, 10, 40):
            ref = -mp.airyaizero(k, derivative=1) / mp.cbrt(2)
            assert data.delta_prime[k - 1] == pytest.approx(float(ref), rel=1e-12)

    def test_residual_and_sign_changes(self):
        data = airy.spectrum(200)
        d = data.delta_prime
        assert np.max(np.abs(airy.u_prime(-d))) < 1e-10
        # exactly one sign change of u'(-h) between consecutive zeros' midpoints
        grid = np.concatenate([[0.0], 0.5 * (d[:-1] + d[1:])])
        for lo, hi in zip(grid[:-1], grid[1:]):
            s = np.sign(airy.u_prime(-np.linspace(lo, hi, 64)))
            assert np.count_nonzero(np.diff(s)) == 1

    def test_asymptotics(self):
        d = airy.spectrum(500).delta_prime
        k = np.array([10, 100, 500])
        err = np.abs(d[k - 1] / airy.asymptotic_zero(k) - 1)
        assert np.all(np.diff(err) < 0) and err[-1] < 2e-3

    def test_bad_kmax(self):
        with pytest.raises(DomainError):
            airy.spectrum(0)


class TestTraceSums:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_closed_values(self, n):
        t = airy.trace_sum(n, 20_000)
        assert t.value == pytest.approx(airy.trace_target(n), rel=1e-9)

    def test_numeric_targets(self):
        up = -mp.cbrt(6) * mp.gamma(mp.mpf(2) / 3) / mp.gamma(mp.mpf(1) / 3)
        assert airy.trace_target(2) == pytest.approx(float(-2 / up), rel=1e-14)
        assert airy.trace_target(4) == pytest.approx(float(2 / up ** 2), rel=1e-14)

    def test_bound_shrinks(self):
        b = [airy.trace_sum(2, k).bound for k in (100, 1000, 10_000)]
        assert b[0] > b[1] > b[2] > 0

    def test_diverging(self):
        with pytest.raises(DomainError):
            airy.trace_sum(1.5)


class TestCompanion:
    def test_initial_conditions(self):
        for lam in (0.5, 1.0, 2.0, 4.0):
            v = airy.companion(lam)
            assert v(lam) == pytest.approx(airy.u(lam), rel=1e-12)
            assert v.derivative(lam) == pytest.approx(-airy.u_prime(lam), rel=1e-12)

    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 4.0])
    def test_wronskian_constant(self, lam):
        v = airy.companion(lam)
        t = np.linspace(lam, lam + 3, 20)
        wr = airy.u(t) * v.derivative(t) - airy.u_prime(t) * v(t)
        np.testing.assert_allclose(wr, -2 * airy.u(lam) * airy.u_prime(lam), rtol=1e-9)

    def test_against_runge_kutta(self):
        sol = solve_ivp(lambda t, y: [y[1], 2 * t * y[0]], (1.0, 2.0),
                        [airy.u(1.0), -airy.u_prime(1.0)], method="DOP853", rtol=1e-12, atol=1e-14)
        assert airy.v_lambda_eval(airy.companion(1.0), 2.0) == pytest.approx(sol.y[0, -1], rel=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            airy.companion(0.0)


class TestKeyIdentity:
    def test_zero(self):
        assert airy.key_identity_residual(0.0).residual == pytest.approx(0.0, abs=1e-15)

    def test_truncated_within_bound(self):
        r = airy.key_identity_residual(1.0, 200)
        assert r.residual <= r.tail_bound
        assert r.corrected <= 1e-7

    @pytest.mark.parametrize("z", [0.25, 0.5, 1.0, 2.0])
    def test_converges(self, z):
        rs = [airy.key_identity_residual(z, k) for k in (50, 200, 800)]
        assert rs[0].residual > rs[1].residual > rs[2].residual
        assert all(r.residual <= r.tail_bound for r in rs)

    def test_pole(self):
        d1 = airy.spectrum(10).delta_prime[0]
        with pytest.raises(DomainError):
            airy.key_identity_residual(-float(d1), 10)
