import math

import numpy as np
import pytest

from stableconc._numerics import (
    ConvergenceError,
    adaptive_gauss_legendre,
    adaptive_gauss_legendre_many,
    bisect_increasing,
    newton_bracketed_increasing,
)


def test_bisection_scalar():
    root = bisect_increasing(lambda s: s**3, 2.0, 0.0, 1.0)
    assert isinstance(root, float)
    assert root == pytest.approx(2 ** (1 / 3), rel=1e-15)


def test_bisection_vectorized_expands_bracket():
    targets = np.array([0.5, 10.0, 1e6])
    roots = bisect_increasing(np.expm1, targets, 0.0, 1.0)
    assert roots == pytest.approx(np.log1p(targets), rel=1e-14)


def test_bisection_bad_lower_bracket():
    with pytest.raises(ValueError):
        bisect_increasing(lambda s: s, 0.0, 1.0, 2.0)


def test_bisection_unbracketable():
    with pytest.raises(ConvergenceError):
        bisect_increasing(lambda s: np.tanh(s), 2.0, 0.0, 1.0, max_iter=20)


def test_gauss_legendre_polynomial_and_singular():
    assert adaptive_gauss_legendre(lambda x: x**5, 0.0, 2.0) == pytest.approx(64 / 6, rel=1e-14)
    # endpoint derivative singularity forces refinement near 0
    assert adaptive_gauss_legendre(np.sqrt, 0.0, 1.0, rtol=1e-12) == pytest.approx(2 / 3, rel=1e-11)


def test_gauss_legendre_reports_depth_limit():
    with pytest.raises(ConvergenceError):
        adaptive_gauss_legendre(lambda x: x**-0.9, 0.0, 1.0, rtol=1e-12)


def test_gauss_legendre_many_independent_intervals():
    a = np.array([0.0, 1.0, 3.0, 2.0])
    b = np.array([1.0, 5.0, 3.0, 40.0])
    got = adaptive_gauss_legendre_many(np.cos, a, b)
    assert got == pytest.approx(np.sin(b) - np.sin(a), rel=1e-9, abs=1e-12)
    assert got[2] == 0.0


def test_newton_matches_closed_form():
    t = np.array([1e-10, 0.3, 5.0, 1e8])
    f = lambda s: (np.expm1(s), np.exp(s))
    lo, hi = np.zeros_like(t), t
    assert newton_bracketed_increasing(f, t, lo, hi) == pytest.approx(np.log1p(t), rel=1e-14)


def test_newton_falls_back_to_bisection_on_overflow():
    # Newton from 0 jumps past the bracket for this steep function
    f = lambda s: (np.exp(s**3) - 1.0, 3 * s**2 * np.exp(s**3))
    root = newton_bracketed_increasing(f, np.array([2.0]), np.array([0.0]), np.array([500.0]))
    assert root[0] == pytest.approx(math.log(3.0) ** (1 / 3), rel=1e-13)
