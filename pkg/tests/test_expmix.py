import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from levy_dividend_opt.expmix import ExpMixture


def make_real_mixture():
    return ExpMixture([2.0, -1.5, 0.25], [-0.5, -2.0, 0.3])


def make_conjugate_mixture():
    return ExpMixture(
        [1.0 + 0.5j, 1.0 - 0.5j, 0.7],
        [-1.0 + 2.0j, -1.0 - 2.0j, -0.2],
    )


@pytest.mark.parametrize("mix", [make_real_mixture(), make_conjugate_mixture()])
def test_evaluation_is_real(mix):
    xs = np.linspace(0.0, 10.0, 50)
    vals = mix(xs)
    assert vals.dtype == np.float64
    # conjugate mixture evaluates through the explicit cosine form
    if len(mix) == 3 and np.any(mix.exponents.imag != 0):
        x = 1.3
        direct = 2 * np.real((1.0 + 0.5j) * np.exp((-1.0 + 2.0j) * x)) + 0.7 * np.exp(-0.2 * x)
        assert mix(x) == pytest.approx(direct, rel=1e-12)


def test_zero_below_support():
    mix = make_real_mixture()
    assert mix(-1.0) == 0.0
    assert np.all(mix(np.array([-2.0, -0.1])) == 0.0)


def test_derivative_matches_finite_difference():
    mix = make_conjugate_mixture()
    d = mix.derivative()
    h = 1e-6
    for x in (0.5, 1.0, 4.0):
        fd = (mix(x + h) - mix(x - h)) / (2 * h)
        assert d(x) == pytest.approx(fd, rel=1e-8)


def test_antiderivative_matches_quadrature():
    mix = make_conjugate_mixture()
    F = mix.antiderivative()
    assert F(0.0) == pytest.approx(0.0, abs=1e-14)
    for x in (0.7, 2.5, 6.0):
        val, _ = quad(mix, 0.0, x, limit=200)
        assert F(x) == pytest.approx(val, rel=1e-10)


def test_antiderivative_of_constant_rejected():
    mix = ExpMixture([1.0, 2.0], [0.0, -1.0])
    with pytest.raises(ValueError):
        mix.antiderivative()


def test_tail_laplace_matches_quadrature():
    mix = make_real_mixture()
    s = 1.5
    for b in (0.0, 1.0, 3.0):
        val, _ = quad(lambda y: np.exp(-s * y) * mix(y), b, 200.0, limit=400)
        assert mix.tail_laplace(s, b) == pytest.approx(val, rel=1e-9)


def test_tail_laplace_divergence_guard():
    mix = make_real_mixture()   # max exponent 0.3
    with pytest.raises(ValueError):
        mix.tail_laplace(0.2)


def test_tilted_tail_consistent_with_tail_laplace():
    mix = make_real_mixture()
    s = 2.0
    tilted = mix.tilted_tail(s)
    for b in (0.0, 0.5, 2.0):
        assert tilted(b) == pytest.approx(np.exp(s * b) * mix.tail_laplace(s, b), rel=1e-12)


def test_convolution_matches_quadrature():
    f = ExpMixture([1.0, 0.5], [-0.7, -0.1])
    g = make_conjugate_mixture()
    b = 0.8
    conv = f.convolve_from(g, b)
    for x in (1.0, 2.5, 5.0):
        val, _ = quad(lambda y: f(x - y) * g(y), b, x, limit=400)
        assert conv(x) == pytest.approx(val, rel=1e-9, abs=1e-13)


def test_convolution_shared_exponent_rejected():
    f = ExpMixture([1.0], [-0.5])
    g = ExpMixture([1.0], [-0.5 + 1e-10])
    with pytest.raises(ValueError):
        f.convolve_from(g, 0.0)


def test_product_is_pointwise():
    f = make_real_mixture()
    g = ExpMixture([0.5, -0.2], [-1.2, -0.05])
    prod = f.product(g)
    for x in (0.0, 1.3, 4.0):
        assert prod(x) == pytest.approx(f(x) * g(x), rel=1e-11)


def test_merge_sums_near_duplicate_exponents():
    mix = ExpMixture([1.0, 2.0], [-1.0, -1.0 + 1e-12])
    assert len(mix) == 1
    assert mix(0.0) == pytest.approx(3.0)


def test_eval_shifted_avoids_overflow():
    mix = ExpMixture([1.0, 1.0], [1.0, -1.0])
    # direct evaluation at x = 800 would overflow; shifted stays finite
    val = mix.eval_shifted(800.0, 1.0)
    assert val == pytest.approx(1.0, rel=1e-12)


def test_overflow_guard_raises():
    mix = ExpMixture([1.0], [2.0])
    with pytest.raises(OverflowError):
        mix(400.0)


@given(
    c=st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=4),
    seed=st.integers(min_value=0, max_value=2**31),
)
@settings(max_examples=50, deadline=None)
def test_add_scale_linear(c, seed):
    rng = np.random.default_rng(seed)
    w = -rng.uniform(0.1, 3.0, size=len(c))
    f = ExpMixture(c, w)
    g = ExpMixture(rng.uniform(-1, 1, size=2), -rng.uniform(0.1, 3.0, size=2))
    x = rng.uniform(0.0, 5.0)
    assert (f + g)(x) == pytest.approx(f(x) + g(x), rel=1e-10, abs=1e-12)
    assert (f * 2.5)(x) == pytest.approx(2.5 * f(x), rel=1e-12, abs=1e-300)


def test_csv_dump_round_trips():
    mix = make_conjugate_mixture()
    text = mix.dump_csv()
    lines = text.strip().splitlines()
    assert lines[0] == "re_coeff,im_coeff,re_exp,im_exp"
    rows = [tuple(float(v) for v in ln.split(",")) for ln in lines[1:]]
    again = ExpMixture(
        [complex(rc, ic) for rc, ic, _, _ in rows],
        [complex(re, ie) for _, _, re, ie in rows],
    )
    x = np.linspace(0, 5, 11)
    np.testing.assert_allclose(again(x), mix(x), rtol=1e-14)
