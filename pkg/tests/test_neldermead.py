import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import minimize

from rlreadout.neldermead import nelder_mead


def test_quadratic():
    r = nelder_mead(lambda x: (x[0] - 1) ** 2 + (x[1] - 2) ** 2, [0.0, 0.0], xtol=1e-9)
    assert r.converged
    assert np.allclose(r.x, [1, 2], atol=1e-6)


def test_abs():
    r = nelder_mead(lambda x: abs(x[0]), [3.0], xtol=1e-10)
    assert abs(r.x[0]) < 1e-8


def test_rosenbrock():
    rosen = lambda x: 100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2  # noqa: E731
    r = nelder_mead(rosen, [-1.2, 1.0], xtol=1e-8, maxiter=500)
    assert r.nit < 500
    assert np.allclose(r.x, [1, 1], atol=1e-4)


def test_agrees_with_scipy():
    f = lambda x: (x[0] - 0.3) ** 2 + 3 * (x[1] + 0.7) ** 2 + x[0] * x[1]  # noqa: E731
    ours = nelder_mead(f, [1.0, 1.0], xtol=1e-10)
    ref = minimize(f, [1.0, 1.0], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14})
    assert np.allclose(ours.x, ref.x, atol=1e-6)


def test_iteration_cap_flags():
    r = nelder_mead(lambda x: float(np.sum(x**2)), [5.0, 5.0, 5.0], maxiter=3)
    assert not r.converged and r.nit == 3
    assert r.fun <= 75.0


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(-5, 5), st.floats(-5, 5))
def test_convex_quadratic(a, b, cx, cy):
    f = lambda x: a * (x[0] - cx) ** 2 + b * (x[1] - cy) ** 2  # noqa: E731
    r = nelder_mead(f, [0.0, 0.0], xtol=1e-9, maxiter=5000)
    assert np.allclose(r.x, [cx, cy], atol=1e-5)
