import numpy as np
import pytest
from scipy.integrate import quad

from levy_dividend_opt import laplace_exponent, solve_roots, z_change_of_measure
from levy_dividend_opt.scale import (
    asymptotic_check,
    build_scale,
    change_of_measure_mixture,
    refraction_identity_residual,
)


def laplace_quad_oracle(pair, theta, family="x"):
    fam = pair.x if family == "x" else pair.y
    xmax = 60.0 / (theta - fam.W.max_real_exponent)
    val, err = quad(lambda y: np.exp(-theta * y) * fam.W(y), 0.0, xmax, limit=500)
    return val


def test_bm_scale_closed_form(pair_bm):
    # psi = lam^2: W(x) = sinh(sqrt(q) x)/sqrt(q)
    rq = np.sqrt(0.05)
    for x in (0.0, 0.5, 1.0, 3.0):
        assert pair_bm.x.W(x) == pytest.approx(np.sinh(rq * x) / rq, rel=1e-10, abs=1e-12)
    assert pair_bm.x.W0 == pytest.approx(0.0, abs=1e-12)


def test_boundary_values(pair1, pair2):
    assert pair1.x.W0 == pytest.approx(0.0, abs=1e-12)          # unbounded variation
    assert pair1.y.W0 == pytest.approx(0.0, abs=1e-12)
    assert pair2.x.W0 == pytest.approx(1.0 / 5.0, rel=1e-10)    # bounded variation: 1/c
    assert pair2.y.W0 == pytest.approx(1.0 / 4.9, rel=1e-10)    # 1/(c - delta)


def test_boundary_derivatives(pair1, pair2):
    assert pair1.x.Wp0 == pytest.approx(2.0 / 0.04, rel=1e-8)           # 2/sigma^2
    assert pair1.y.Wp0 == pytest.approx(2.0 / 0.04, rel=1e-8)
    assert pair2.x.Wp0 == pytest.approx((0.05 + 0.01) / 25.0, rel=1e-8)  # (q+kappa)/c^2
    assert pair2.y.Wp0 == pytest.approx((0.05 + 0.01) / 4.9**2, rel=1e-8)


def test_scale_increasing_positive(pair1, pair2, pair_bm):
    grid = np.linspace(1e-6, 20.0, 200)
    for pair in (pair1, pair2, pair_bm):
        for fam in (pair.x, pair.y):
            vals = fam.W(grid)
            assert np.all(vals > 0)
            assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("family", ["x", "y"])
def test_laplace_transform_oracle(pair1, pair2, pair_bm, family):
    rng = np.random.default_rng(42)
    for pair in (pair1, pair2, pair_bm):
        shift = 0.0 if family == "x" else pair.model.delta
        top = pair.roots.phi_q if family == "x" else pair.roots.varphi_q
        for theta in top + 0.1 + rng.uniform(0.0, 4.0, size=5):
            got = laplace_quad_oracle(pair, theta, family)
            closed = 1.0 / (
                laplace_exponent(pair.model, theta) - shift * theta - pair.model.q
            )
            assert got == pytest.approx(closed, rel=1e-6)


def test_refraction_identity(pair1, pair2):
    for pair in (pair1, pair2):
        for x in (0.0, 0.5, 2.0, 5.0, 10.0):
            resid = refraction_identity_residual(pair, x)
            assert abs(resid) < 1e-9 * (1.0 + pair.y.Wbar(x))


def test_appendix_tail_identities(pair1, pair2):
    # int_0^inf e^{-varphi y} W(y) dy = 1/(delta varphi)
    # int_0^inf e^{-varphi y} W'(y) dy = 1/delta - W(0)
    for pair in (pair1, pair2):
        varphi = pair.roots.varphi_q
        d = pair.model.delta
        assert pair.x.W.tail_laplace(varphi, 0.0) == pytest.approx(
            1.0 / (d * varphi), rel=1e-10
        )
        assert pair.x.Wp.tail_laplace(varphi, 0.0) == pytest.approx(
            1.0 / d - pair.x.W0, rel=1e-10
        )


def test_derivative_convolution_identities(pair1, pair2):
    # conv(WW, W')    = WW - W - delta WW W(0)            (all at x)
    # conv(WW', W)    = WW - (1 + delta WW(0)) W
    # conv(WW', W')   = (1 - delta W(0)) WW' - (1 + delta WW(0)) W'
    for pair in (pair1, pair2):
        d = pair.model.delta
        w0 = pair.x.W0
        ww0 = pair.y.W0
        conv_a = pair.y.W.convolve_from(pair.x.Wp, 0.0)
        conv_b = pair.y.Wp.convolve_from(pair.x.W, 0.0)
        conv_c = pair.y.Wp.convolve_from(pair.x.Wp, 0.0)
        for x in np.linspace(0.25, 10.0, 14):
            scale = 1.0 + abs(pair.y.W(x))
            r_a = d * conv_a(x) - (pair.y.W(x) - pair.x.W(x) - d * pair.y.W(x) * w0)
            r_b = d * conv_b(x) - (pair.y.W(x) - (1 + d * ww0) * pair.x.W(x))
            r_c = d * conv_c(x) - (
                (1 - d * w0) * pair.y.Wp(x) - (1 + d * ww0) * pair.x.Wp(x)
            )
            assert abs(r_a) < 1e-9 * scale
            assert abs(r_b) < 1e-9 * scale
            assert abs(r_c) < 1e-9 * (1.0 + abs(pair.y.Wp(x)))


def test_z_and_zbar_conventions(pair1):
    fam = pair1.x
    assert fam.Z_at(0.0) == pytest.approx(1.0)
    assert fam.Z_at(-3.0) == 1.0
    assert fam.Zbar_at(-2.0) == -2.0
    # Z' = q W and Zbar' = Z
    h = 1e-6
    for x in (0.5, 2.0):
        assert (fam.Z(x + h) - fam.Z(x - h)) / (2 * h) == pytest.approx(
            pair1.model.q * fam.W(x), rel=1e-7
        )
        assert (fam.Zbar(x + h) - fam.Zbar(x - h)) / (2 * h) == pytest.approx(
            fam.Z(x), rel=1e-7
        )


def test_change_of_measure_value(pair1, pair2):
    for pair in (pair1, pair2):
        assert z_change_of_measure(pair, 0.0) == 1.0
        assert z_change_of_measure(pair, -1.0) == 1.0
        phi = pair.roots.phi_q
        for x in (0.5, 1.0, 2.0):
            iv, _ = quad(lambda z: np.exp(-phi * z) * pair.y.W(z), 0.0, x, limit=300)
            expect = 1.0 + pair.model.delta * phi * iv
            assert z_change_of_measure(pair, x) == pytest.approx(expect, rel=1e-9)
        grid = [z_change_of_measure(pair, x) for x in np.linspace(0.0, 6.0, 25)]
        assert np.all(np.diff(grid) > 0)


def test_asymptotic_convergence(pair1, pair2, pair_bm):
    for pair in (pair1, pair2, pair_bm):
        rep = asymptotic_check(pair)
        for fam in ("x", "y"):
            assert rep[fam]["max_deviation_at_largest"] < 1e-8
            assert rep[fam]["increasing"]
            assert rep[fam]["below_limit"]
    # pure BM limit: 1/psi'(Phi) = 1/(2 sqrt(q))
    rep = asymptotic_check(pair_bm)
    assert rep["x"]["limit"] == pytest.approx(1.0 / (2 * np.sqrt(0.05)), rel=1e-10)


def test_log_convexity_of_w_prime(pair1, pair2):
    # (log W')'' >= 0 for completely monotone jump mixtures
    for pair in (pair1, pair2):
        xs = np.linspace(0.05, 15.0, 300)
        logwp = np.log(pair.x.Wp(xs))
        second = np.diff(logwp, 2)
        assert np.all(second >= -1e-10)


def test_mixture_csv_dump_schema(pair1):
    text = pair1.x.W.dump_csv()
    assert text.splitlines()[0] == "re_coeff,im_coeff,re_exp,im_exp"
    assert len(text.strip().splitlines()) == len(pair1.x.W) + 1
