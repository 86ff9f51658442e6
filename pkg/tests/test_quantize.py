import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from selftrig.quantize import q_uniform, sign_eps


@pytest.mark.parametrize("z, eps, out", [(0.5, 0.1, 1), (-0.05, 0.1, 0), (0.1, 0.1, 1),
                                         (-0.1, 0.1, -1), (0.0, 0.1, 0)])
def test_sign_eps(z, eps, out):
    assert sign_eps(z, eps) == out


@pytest.mark.parametrize("eps", [0.0, -1.0])
def test_sign_eps_rejects_bad_eps(eps):
    with pytest.raises(ValueError):
        sign_eps(1.0, eps)


def test_sign_eps_rejects_nan():
    with pytest.raises(ValueError):
        sign_eps(math.nan, 0.1)


@pytest.mark.parametrize("x, d, out", [(0.26, 0.5, 0.5), (0.24, 0.5, 0.0), (0.25, 0.5, 0.5),
                                       (-0.25, 0.5, 0.0), (-0.26, 0.5, -0.5)])
def test_q_uniform(x, d, out):
    assert q_uniform(x, d) == out


def test_q_uniform_rejects_bad_delta():
    with pytest.raises(ValueError):
        q_uniform(1.0, 0.0)


@given(st.floats(-1e3, 1e3), st.floats(0.01, 10))
def test_sign_eps_properties(z, eps):
    assert sign_eps(z, eps) * z >= 0
    assert sign_eps(-z, eps) == -sign_eps(z, eps)


@given(st.integers(-10**6, 10**6), st.integers(1, 64))
def test_q_uniform_shift(k, m):
    # dyadic grid so x + delta is exact
    delta = m / 64
    x = k / 128
    assert q_uniform(x + delta, delta) == q_uniform(x, delta) + delta


@given(st.floats(-1e6, 1e6), st.floats(1e-3, 1e3))
def test_q_uniform_error(x, delta):
    q = q_uniform(x, delta)
    assert abs(q - x) <= delta / 2 * (1 + 1e-12)
    assert abs(q / delta - round(q / delta)) < 1e-6
