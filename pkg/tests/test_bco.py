import math
import time

import numpy as np
import pytest

from lattheta.bco import (
    BcoPoint,
    Certificate,
    alpha1,
    certify_increasing,
    e_tilde,
    e_tilde_d3,
    energy,
    f_i,
    g_alpha_argmin,
    h_alpha,
    k_alpha,
    rho_t,
    t0,
    thm14_scan,
)
from lattheta.jacobi import jacobi_theta
from lattheta.lattice import make_preset
from lattheta.theta_sum import theta_direct

SQRT3 = math.sqrt(3.0)


class TestFi:
    def test_value_at_one(self):
        assert f_i(3, 1.0, 1.0) == pytest.approx(jacobi_theta(3, 1.0).value ** 2, abs=1e-13)

    def test_critical_point_at_one(self):
        assert f_i(3, 1.0, 1.0, 1) == pytest.approx(0.0, abs=1e-12)
        assert f_i(2, 1.0, 1.0, 1) == pytest.approx(0.0, abs=1e-12)

    def test_product_value(self):
        got = f_i(3, 1.0, 2.0)
        want = jacobi_theta(3, 2.0).value * jacobi_theta(3, 0.5).value
        assert got == pytest.approx(want, abs=1e-13)

    def test_symmetry_y_inverse(self):
        for y in (1.3, 2.0, 2.8):
            assert f_i(2, 1.5, y) == pytest.approx(f_i(2, 1.5, 1 / y), rel=1e-12)

    @pytest.mark.parametrize("i", [2, 3])
    @pytest.mark.parametrize("y", [1.0, 1.2, 1.6])
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_derivatives_match_fd(self, i, y, order):
        h = 1e-5
        fd = (f_i(i, 1.0, y + h, order - 1) - f_i(i, 1.0, y - h, order - 1)) / (2 * h)
        an = f_i(i, 1.0, y, order)
        assert abs(fd - an) <= 1e-6 * max(abs(an), 1e-3)

    def test_kind_guard(self):
        with pytest.raises(ValueError):
            f_i(4, 1.0, 1.0)


class TestETilde:
    def test_factorization(self):
        for y in (1.0, 1.3, 1.7):
            for t in (0.9, 1.0, 1.4):
                pref = jacobi_theta(3, t * t * 1.0).value
                assert energy(y, t, 1.0) == pytest.approx(
                    pref * e_tilde(BcoPoint(y, t, 1.0)), abs=1e-12)

    def test_critical_point(self):
        assert e_tilde(BcoPoint(1.0, 1.0, 1.0), 1) == pytest.approx(0.0, abs=1e-10)

    def test_second_derivative_frozen(self):
        # finite-difference oracle on the raw 2D sums gives 0.006149 here
        assert e_tilde(BcoPoint(1.0, 0.9, 1.0), 2) == pytest.approx(0.0061489, abs=1e-6)

    def test_energy_matches_lattice_sum(self):
        got = energy(1.5, 1.0, 1.0)
        td = theta_direct(make_preset("Lyt", [1.5, 1.0]), np.zeros(3), 1.0)
        assert abs(got - td.value) <= 1e-10

    def test_cross_module_random(self):
        rng = np.random.default_rng(14)
        for _ in range(30):
            y = float(rng.uniform(1.0, 2.5))
            t = float(rng.uniform(0.5, 2.0))
            a = float(rng.uniform(0.4, 2.5))
            got = energy(y, t, a)
            td = theta_direct(make_preset("Lyt", [y, t]), np.zeros(3), a)
            assert abs(got - td.value) <= 1e-9 + td.abs_error

    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("y", [1.1, 1.25, 1.6])
    def test_derivatives_match_fd(self, order, y):
        h = 1e-5
        p = lambda yy: BcoPoint(yy, 0.9, 1.0)
        fd = (e_tilde(p(y + h), order - 1) - e_tilde(p(y - h), order - 1)) / (2 * h)
        an = e_tilde(p(y), order)
        assert abs(fd - an) <= 1e-6 * max(abs(an), 1e-3)

    def test_invariants(self):
        with pytest.raises(ValueError):
            BcoPoint(0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            BcoPoint(1.0, -1.0, 1.0)
        with pytest.raises(ValueError):
            e_tilde(BcoPoint(1.0, 1.0, 1.0), 3)


class TestHAlpha:
    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 5.0])
    def test_limit_below_one(self, a):
        assert h_alpha(1.0, a) < 1.0

    def test_sign_around_crossing(self):
        assert h_alpha(1.0, 1.0) - rho_t(1.0, 1.0) > 0
        assert h_alpha(1.0, 3.0) - rho_t(1.0, 3.0) < 0

    def test_continuity_at_one(self):
        assert abs(h_alpha(1.001, 1.0) - h_alpha(1.0, 1.0)) <= 1e-3

    def test_domain(self):
        with pytest.raises(ValueError):
            h_alpha(0.8, 1.0)


class TestRoots:
    def test_t0_at_one(self):
        v = t0(1.0, 1e-9)
        assert v <= 0.9
        assert rho_t(v, 1.0) == pytest.approx(h_alpha(1.0, 1.0), abs=1e-8)

    def test_t0_sweep_finite_positive(self):
        for a in np.geomspace(0.1, 10.0, 100):
            v = t0(float(a), 1e-6)
            assert math.isfinite(v) and v > 0

    def test_alpha1_value(self):
        a1 = alpha1(1e-6)
        assert a1 == pytest.approx(2.38, abs=0.01)
        assert 1 / a1 == pytest.approx(0.42, abs=0.01)


class TestKAlpha:
    def test_independent_term_by_term(self):
        # independent re-implementation of the displayed nine-product sum
        a = 1.0
        b = a / SQRT3
        th = lambda i, x, n: jacobi_theta(i, x, n).value
        total = 0.0
        for i in (2, 3):
            total += (a ** 3 * abs(th(i, a, 3)) * th(i, b, 0)
                      + a ** 3 * th(i, a, 0) * abs(th(i, b, 3))
                      + 3 * a ** 3 * th(i, a, 2) * abs(th(i, b, 1))
                      + 5 * a ** 2 * abs(th(i, a, 1)) * abs(th(i, b, 1))
                      + 3 * a ** 2 * abs(th(i, a, 1)) * th(i, b, 2)
                      + 6 * a * th(i, a, 0) * th(i, b, 0)
                      + 2 * a ** 2 * abs(th(i, a, 1)) * th(i, b, 0)
                      + 2 * a ** 2 * th(i, a, 0) * abs(th(i, b, 1))
                      + 4 * a ** 2 * th(i, a, 0) * th(i, b, 2))
        assert k_alpha(1.0) == pytest.approx(total, rel=1e-12)

    @pytest.mark.parametrize("a", [0.1, 1.0, 10.0])
    def test_finite_positive(self, a):
        v = k_alpha(a)
        assert math.isfinite(v) and v > 0

    @pytest.mark.parametrize("t", [0.5, 0.9, 1.0, math.sqrt(2)])
    def test_dominates_third_derivative(self, t):
        K = k_alpha(1.0)
        ys = np.linspace(1.0, SQRT3, 1000)
        sup = max(abs(e_tilde_d3(BcoPoint(float(y), t, 1.0))) for y in ys)
        assert K > sup


class TestCertify:
    def test_alpha1_t09_certifies(self):
        start = time.time()
        cert = certify_increasing(1.0, 0.9)
        assert time.time() - start < 5.0
        assert cert.verdict == "certified_increasing"
        assert cert.final_y >= SQRT3
        assert cert.steps[0][0] == 1.0
        assert cert.steps[0][1] == 0.0
        assert all(b > 0 for _, _, b in cert.steps[:-1])

    def test_monotone_extension_t2(self):
        cert = certify_increasing(1.0, 2.0)
        assert cert.verdict == "certified_increasing"

    def test_inconclusive_below_t0(self):
        cert = certify_increasing(5.0, 0.5)
        assert cert.verdict == "inconclusive"
        assert "E~''" in cert.reason

    def test_certificate_soundness_dense_grid(self):
        # every certified case must have E~' >= -1e-12 on a dense grid
        for alpha, t in ((1.0, 0.9), (1.0, 2.0), (0.5, 1.5)):
            cert = certify_increasing(alpha, t)
            if cert.verdict != "certified_increasing":
                continue
            ys = np.linspace(1.0, SQRT3, 10_000)
            vals = [e_tilde(BcoPoint(float(y), t, alpha), 1) for y in ys]
            assert min(vals) >= -1e-12


class TestThm17Points:
    def test_point1_argmin_in_unit_sqrt3(self):
        for t in (0.7, 1.0, 1.4):
            for a in (0.5, 1.0, 2.0):
                ys = np.linspace(1.0, 6.0, 400)
                vals = [e_tilde(BcoPoint(float(y), t, a)) for y in ys]
                ybest = ys[int(np.argmin(vals))]
                assert 1.0 - 1e-9 <= ybest <= SQRT3 + 1e-6 + (ys[1] - ys[0])

    def test_points2_3(self):
        # above alpha1 the BCC direction is a local max: E~''(1) < 0
        assert e_tilde(BcoPoint(1.0, 1.0, 3.0), 2) < 0
        assert certify_increasing(1.0, 1.0).verdict == "certified_increasing"


class TestGAlpha:
    @pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
    def test_argmin_sqrt3(self, a):
        am, gpp1 = g_alpha_argmin(a, 1e-8)
        assert am == pytest.approx(SQRT3, abs=1e-6)
        assert gpp1 < 0


class TestThm14:
    def test_u4_max_at_zero(self):
        vals = dict(thm14_scan([2.0, 0.5], 1.0, "U4", [-1.0, -0.5, 0.0, 0.5, 1.0]))
        assert all(vals[0.0] > vals[t] for t in (-1.0, -0.5, 0.5, 1.0))

    def test_u3_min_at_zero(self):
        vals = dict(thm14_scan([2.0, 0.5], 1.0, "U3", [-1.0, 0.0, 1.0]))
        assert vals[0.0] < vals[-1.0]
        assert vals[0.0] < vals[1.0]

    def test_u2_at_zero_is_theta2_power(self):
        vals = dict(thm14_scan([2.0, 0.5], 1.0, "U2", [0.0]))
        assert vals[0.0] == pytest.approx(jacobi_theta(2, 1.0).value ** 2, abs=1e-12)

    def test_product_constraint(self):
        with pytest.raises(ValueError):
            thm14_scan([2.0, 1.0], 1.0, "U4", [0.0])
        with pytest.raises(ValueError):
            thm14_scan([1.0, 1.0], 1.0, "U4", [0.0])
