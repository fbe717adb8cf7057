import math

import numpy as np
import pytest

from bergerfill.series import seval, sderiv, sexp, smul, trim


def test_trim_pads_and_truncates():
    assert np.array_equal(trim([1.0, 2.0], 4), [1.0, 2.0, 0.0, 0.0])
    assert np.array_equal(trim([1.0, 2.0, 3.0], 2), [1.0, 2.0])


def test_smul_matches_polynomial_product():
    a = [1.0, 2.0, 3.0]
    b = [4.0, 5.0]
    # (1 + 2t + 3t^2)(4 + 5t) = 4 + 13t + 22t^2 + 15t^3
    assert np.allclose(smul(a, b, 4), [4.0, 13.0, 22.0, 15.0])
    assert np.allclose(smul(a, b, 2), [4.0, 13.0])


def test_sexp_against_taylor():
    # exp(t) has coefficients 1/k!
    e = sexp([0.0, 1.0], 6)
    expect = [1.0 / math.factorial(k) for k in range(6)]
    assert np.allclose(e, expect, rtol=0, atol=1e-15)


def test_sexp_with_constant_term():
    # exp(c + a t) = exp(c) * exp(a t)
    e = sexp([0.7, -0.3], 5)
    assert np.allclose(e[0], np.exp(0.7))
    assert np.allclose(e, np.exp(0.7) * np.array(
        [(-0.3) ** k / math.factorial(k) for k in range(5)]
    ))


def test_sexp_inverse_roundtrip():
    rng = np.random.default_rng(3)
    a = rng.normal(0, 0.3, 8)
    prod = smul(sexp(a, 8), sexp(-a, 8), 8)
    assert np.allclose(prod, [1.0] + [0.0] * 7, atol=1e-14)


def test_sderiv():
    # d/dt (1 + 2t + 3t^2 + 4t^3) = 2 + 6t + 12t^2
    assert np.allclose(sderiv([1.0, 2.0, 3.0, 4.0], 3), [2.0, 6.0, 12.0])


def test_seval_horner():
    c = [1.0, -2.0, 0.5]
    t = 0.3
    assert seval(c, t) == pytest.approx(1.0 - 2.0 * t + 0.5 * t * t, abs=1e-16)
