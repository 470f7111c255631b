import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from litetts.dual import Dual, tangent_of, value_of
from litetts.numerics import conv1d, layer_norm, linear, sigmoid


def test_product_rule():
    a, b = Dual(np.array(3.0), np.array(1.0)), Dual(np.array(5.0), np.array(2.0))
    c = a * b
    assert value_of(c) == 15.0
    assert tangent_of(c) == 3.0 * 2.0 + 1.0 * 5.0


@settings(max_examples=50, deadline=None)
@given(coeffs=st.lists(st.floats(-3, 3), min_size=1, max_size=5), x=st.floats(-2, 2))
def test_polynomial_matches_symbolic_derivative(coeffs, x):
    d = Dual(np.array(x), np.array(1.0))
    p = sum(c * d ** i for i, c in enumerate(coeffs))
    expect = sum(i * c * x ** (i - 1) for i, c in enumerate(coeffs) if i > 0)
    assert tangent_of(p) == pytest.approx(expect, rel=1e-12, abs=1e-12)


def test_unary_chain_rule():
    x = np.linspace(-1.5, 1.5, 7)
    d = Dual(x, np.ones_like(x))
    np.testing.assert_allclose(tangent_of(np.tanh(d)), 1 - np.tanh(x) ** 2, atol=1e-14)
    np.testing.assert_allclose(tangent_of(np.exp(d)), np.exp(x), atol=1e-14)
    s = 1 / (1 + np.exp(-x))
    np.testing.assert_allclose(tangent_of(sigmoid(d)), s * (1 - s), atol=1e-14)


def _fd(f, x, dx, eps=1e-6):
    return (f(x + eps * dx) - f(x - eps * dx)) / (2 * eps)


def test_kernels_propagate_tangents():
    rng = np.random.default_rng(0)
    x, dx = rng.normal(size=(3, 9)), rng.normal(size=(3, 9))
    w = rng.normal(size=(4, 3, 3))
    f = lambda v: conv1d(v, w)  # noqa: E731
    np.testing.assert_allclose(tangent_of(f(Dual(x, dx))), _fd(f, x, dx), atol=1e-7)
    g, b = rng.normal(size=9), rng.normal(size=9)
    f2 = lambda v: layer_norm(v, g, b)  # noqa: E731
    np.testing.assert_allclose(tangent_of(f2(Dual(x, dx))), _fd(f2, x, dx), atol=1e-7)
    f3 = lambda v: np.abs(np.fft.rfft(linear(v, rng_w), axis=-1))  # noqa: E731
    rng_w = rng.normal(size=(6, 9))
    np.testing.assert_allclose(tangent_of(f3(Dual(x, dx))), _fd(f3, x, dx), atol=1e-6)


def test_dual_refuses_silent_conversion():
    with pytest.raises(TypeError):
        np.asarray(Dual(np.ones(2), np.ones(2))).sum()
