import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from radialflow import _pykernels, kernels

try:
    from radialflow import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_backend_is_reported():
    assert kernels.BACKEND in {"cython", "python"}


@pytest.mark.parametrize("degree", [0, 1, 2, 3])
def test_quadrature_exact_for_cubics(degree):
    t = np.linspace(0.0, 2.0, 41)
    f = t ** degree
    q = _pykernels.reverse_cumulative_quad(f, t[1] - t[0])
    exact = (t[-1] ** (degree + 1) - t ** (degree + 1)) / (degree + 1)
    np.testing.assert_allclose(q, exact, rtol=0, atol=1e-13)


def test_quadrature_fourth_order():
    errs = []
    for n in (65, 129):
        t = np.linspace(0.0, 3.0, n)
        q = _pykernels.reverse_cumulative_quad(np.exp(t), t[1] - t[0])
        errs.append(abs(q[0] - (np.exp(3.0) - 1.0)))
    assert errs[0] / errs[1] > 12.0


def test_quadrature_needs_four_samples():
    with pytest.raises(ValueError):
        _pykernels.reverse_cumulative_quad(np.ones(3), 0.1)


def test_flow_update_matches_formula():
    u = np.ones(5)
    res = np.array([3.0, 2.0, 1.0, 0.5, 0.1])
    v, umin, vmin = _pykernels.flow_update(u, res, 2.0, 0.8, 0.1)
    expected_v = -0.8 * np.maximum(0.0, 1.0 - res / 2.0)
    np.testing.assert_allclose(v, expected_v)
    np.testing.assert_allclose(u, 1.0 + 0.1 * expected_v)
    assert umin == pytest.approx(u.min()) and vmin == pytest.approx(expected_v.min())


def test_local_minima_plateau_reports_right_end():
    a = np.array([3.0, 1.0, 1.0, 1.0, 2.0, 0.5, 4.0])
    assert list(_pykernels.local_minima(a)) == [3, 5]
    assert list(_pykernels.local_minima(np.array([1.0, 2.0, 3.0]))) == [0]
    assert list(_pykernels.local_minima(np.array([3.0, 2.0, 1.0]))) == [2]


@needs_ext
@given(arrays(np.float64, st.integers(4, 300), elements=finite), st.floats(1e-3, 1.0))
def test_quadrature_parity(f, h):
    np.testing.assert_allclose(_ckernels.reverse_cumulative_quad(f, h),
                               _pykernels.reverse_cumulative_quad(f, h), rtol=1e-12, atol=1e-9)


@needs_ext
@given(arrays(np.float64, st.integers(1, 200), elements=st.floats(1e-6, 10.0)),
       st.floats(1e-3, 10.0), st.floats(0.0, 1.0), st.floats(1e-3, 0.49))
def test_flow_update_parity(res, res_rho, amp, eps):
    u1, u2 = np.ones(res.size), np.ones(res.size)
    v1, m1, w1 = _ckernels.flow_update(u1, res, res_rho, amp, eps)
    v2, m2, w2 = _pykernels.flow_update(u2, res, res_rho, amp, eps)
    np.testing.assert_allclose(np.asarray(v1), v2, rtol=1e-14, atol=1e-15)
    np.testing.assert_allclose(u1, u2, rtol=1e-14)
    assert m1 == pytest.approx(m2, rel=1e-14) and w1 == pytest.approx(w2, rel=1e-14, abs=1e-15)


@needs_ext
@given(arrays(np.float64, st.integers(1, 200), elements=st.integers(-3, 3).map(float)))
def test_local_minima_parity(a):
    np.testing.assert_array_equal(np.asarray(_ckernels.local_minima(a)), _pykernels.local_minima(a))


@given(arrays(np.float64, st.integers(2, 100), elements=finite))
def test_local_minima_are_minima(a):
    for i in _pykernels.local_minima(a):
        if i > 0:
            assert a[i - 1] >= a[i]
        if i + 1 < a.size:
            assert a[i + 1] > a[i]
