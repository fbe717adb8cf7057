import numpy as np
import pytest

from bergerfill.errors import DomainError
from bergerfill.jets import (
    BergerBoundaryData,
    berger_boundary_jet,
    berger_center_jet,
    eval_jet,
    g2_from_boundary_metric,
    min_admissible_K0,
)


def combo(phi0, K0):
    return (3.0 - 4.0 * (phi0 * K0) ** (-1 / 3)
            + K0 ** (-1 / 3) * phi0 ** (-4 / 3))


def test_boundary_data_validation():
    with pytest.raises(DomainError):
        BergerBoundaryData(phi0=-1.0, K0=1.0)
    with pytest.raises(DomainError):
        BergerBoundaryData(phi0=1.0, K0=0.0)
    bd = BergerBoundaryData(phi0=2.0, K0=0.9, a=0.3)
    assert bd.is_admissible()
    assert bd.in_theorem_range()
    assert not BergerBoundaryData(phi0=5.0, K0=0.9).in_theorem_range()


def test_min_admissible_K0():
    # the combination vanishes exactly on the K0 = min_admissible curve
    for phi0 in [0.5, 0.9, 2.0, 3.5]:
        k = min_admissible_K0(phi0)
        assert combo(phi0, k) == pytest.approx(0.0, abs=1e-12)
        assert combo(phi0, k + 1e-3) > 0.0
    # exact value at phi0=2 is (7/(3*2^(4/3)))^3 = 343/432
    assert min_admissible_K0(2.0) == pytest.approx(343.0 / 432.0, rel=1e-14)


def test_hyperbolic_jet_is_zero():
    jet = berger_boundary_jet(BergerBoundaryData(1.0, 1.0, 0.0))
    assert np.array_equal(jet.coeffs_y1, np.zeros_like(jet.coeffs_y1))
    assert np.array_equal(jet.coeffs_y2, np.zeros_like(jet.coeffs_y2))


def test_boundary_jet_low_order_closed_forms():
    phi0, K0, a = 2.0, 0.85, 0.3
    jet = berger_boundary_jet(BergerBoundaryData(phi0, K0, a))
    assert jet.coeffs_y1[0] == pytest.approx(np.log(K0), abs=1e-15)
    assert jet.coeffs_y2[0] == pytest.approx(np.log(phi0), abs=1e-15)
    assert jet.coeffs_y1[1] == 0.0
    assert jet.coeffs_y2[1] == 0.0
    assert jet.coeffs_y1[2] == pytest.approx(2.0 * combo(phi0, K0), rel=1e-14)
    assert jet.coeffs_y2[2] == pytest.approx(
        16.0 * K0 ** (-1 / 3) * phi0 ** (-4 / 3) * (1.0 - phi0), rel=1e-14
    )
    assert jet.coeffs_y2[3] == pytest.approx(
        12.0 * (K0 * phi0) ** (-1 / 3) * a, rel=1e-14
    )
    assert jet.coeffs_y1[3] == 0.0


def test_boundary_jet_fifth_order_identity():
    # the x^5 coefficient of y1 is tied to the product of the y2
    # coefficients: y1_5 = -(4/15) y2_2 y2_3
    jet = berger_boundary_jet(BergerBoundaryData(0.5, 0.9, 0.17))
    y2_2, y2_3 = jet.coeffs_y2[2], jet.coeffs_y2[3]
    assert jet.coeffs_y1[5] == pytest.approx(-(4.0 / 15.0) * y2_2 * y2_3,
                                             rel=1e-12)


def test_center_jet_structure():
    jet = berger_center_jet(-0.4)
    # y2 = (q/2)s^2 + ..., y1 starts at s^4 or higher
    assert jet.coeffs_y2[2] == pytest.approx(-0.2, abs=1e-15)
    assert jet.coeffs_y1[0] == 0.0
    assert jet.coeffs_y1[1] == 0.0
    assert abs(jet.coeffs_y1[2]) < 1e-14
    assert abs(jet.coeffs_y1[3]) < 1e-14
    zero = berger_center_jet(0.0)
    assert np.array_equal(zero.coeffs_y1, np.zeros_like(zero.coeffs_y1))
    assert np.array_equal(zero.coeffs_y2, np.zeros_like(zero.coeffs_y2))


def test_jet_residual_decay():
    # truncation error of the order-8 jet decays at least like x^6.5
    from bergerfill.flow import full_residuals
    from bergerfill.series import sderiv, seval

    jet = berger_boundary_jet(BergerBoundaryData(1.5, 0.9, 0.1), order=8)
    n = jet.order + 1

    def resid(x):
        y1, d1, y2, d2 = eval_jet(jet, x)
        dd1 = seval(sderiv(sderiv(jet.coeffs_y1, n + 1), n), x)
        dd2 = seval(sderiv(sderiv(jet.coeffs_y2, n + 1), n), x)
        return np.max(np.abs(full_residuals(x, y1, d1, dd1, y2, d2, dd2)))

    r1, r2 = resid(0.01), resid(0.02)
    slope = np.log2(r2 / r1)
    assert slope >= 8 - 1.5


def test_eval_jet_trust_radius():
    jet = berger_boundary_jet(BergerBoundaryData(1.2, 0.95, 0.0))
    eval_jet(jet, 0.05)
    with pytest.raises(DomainError):
        eval_jet(jet, 0.5)
    cj = berger_center_jet(0.1)
    eval_jet(cj, 0.95)
    with pytest.raises(DomainError):
        eval_jet(cj, 0.5)


def test_center_jet_consistency_with_flow():
    # jet derivative must agree with the reduced vector field near x=1
    from bergerfill.flow import rhs

    jet = berger_center_jet(0.3)
    x = 0.97
    y1, d1, y2, d2 = eval_jet(jet, x)
    r = rhs(x, np.array([y1, y2, d2]))
    assert r[0] == pytest.approx(d1, abs=1e-9)


def test_g2_round_sphere():
    # ghat = eye/4 is the round representative; g2 = -ghat * 2
    g2 = g2_from_boundary_metric(np.eye(3) / 4.0)
    assert np.allclose(g2, -0.5 * np.eye(3), atol=1e-15)


@pytest.mark.parametrize("seed", range(4))
def test_g2_reconstructs_second_coefficients(seed):
    # the x^2 jet coefficients reconstructed from the intrinsic curvature
    # of the boundary metric match the jet recursion
    rng = np.random.default_rng(seed)
    # stay away from phi0 = 1, where the admissible K0 window degenerates
    phi0 = rng.uniform(*((0.45, 0.85) if seed % 2 else (1.3, 2.5)))
    k_min = min_admissible_K0(phi0)
    K0 = rng.uniform(k_min + 0.3 * (1.0 - k_min), 1.0)
    jet = berger_boundary_jet(BergerBoundaryData(phi0, K0, 0.0))
    I1 = (K0 / phi0 ** 2) ** (1 / 3)
    I2 = (K0 * phi0) ** (1 / 3)
    h0 = np.diag([I1, I2, I2])
    ghat = h0 / 4.0
    g2 = g2_from_boundary_metric(ghat)
    # hbar = 4 (1-x^2)^{-2} (ghat + g2 x^2 + ...) gives
    # hbar_2 = 4 g2 + 2 hbar_0
    h2 = 4.0 * g2 + 2.0 * h0
    y1_2 = sum(h2[i, i] / h0[i, i] for i in range(3))
    y2_2 = h2[1, 1] / h0[1, 1] - h2[0, 0] / h0[0, 0]
    assert y1_2 == pytest.approx(jet.coeffs_y1[2], rel=1e-10, abs=1e-10)
    assert y2_2 == pytest.approx(jet.coeffs_y2[2], rel=1e-10, abs=1e-10)
