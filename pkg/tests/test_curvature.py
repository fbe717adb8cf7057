import numpy as np
import pytest

from bergerfill.curvature import (
    MetricProfile4D,
    assemble,
    curvature_report,
    einstein_residual_4d,
    hyperbolic_profile,
    ricci_at,
    riemann_at,
    sectional,
    sectional_range,
)
from bergerfill.errors import DomainError


def test_metric_profile_validation():
    r = np.array([1.0, 0.5, 2.0])
    ones = np.ones((3, 3))
    with pytest.raises(DomainError):
        MetricProfile4D(r_grid=r, f=ones, fp=ones, fpp=ones)
    with pytest.raises(DomainError):
        MetricProfile4D(r_grid=np.array([0.5, 1.0, 2.0]), f=-ones,
                        fp=ones, fpp=ones)


def test_hyperbolic_assembly_is_sinh():
    m = assemble(hyperbolic_profile())
    assert np.allclose(m.f, np.sinh(m.r_grid)[:, None], atol=1e-12)
    assert np.allclose(m.fp, np.cosh(m.r_grid)[:, None], atol=1e-7)
    assert np.allclose(m.fpp, np.sinh(m.r_grid)[:, None], atol=1e-5)


def test_hyperbolic_is_einstein_and_constant_curvature():
    m = assemble(hyperbolic_profile())
    assert einstein_residual_4d(m) < 1e-8
    lo, hi = sectional_range(m, plane_samples=150, seed=1)
    assert lo == pytest.approx(-1.0, abs=1e-8)
    assert hi == pytest.approx(-1.0, abs=1e-8)


def test_riemann_symmetries_and_bianchi():
    rng = np.random.default_rng(4)
    for _ in range(20):
        f = rng.uniform(0.5, 2.0, 3)
        fp = rng.normal(0, 1.0, 3)
        fpp = rng.normal(0, 1.0, 3)
        R = riemann_at(f, fp, fpp)
        assert np.max(np.abs(R + np.transpose(R, (1, 0, 2, 3)))) < 1e-10
        assert np.max(np.abs(R + np.transpose(R, (0, 1, 3, 2)))) < 1e-10
        assert np.max(np.abs(R - np.transpose(R, (2, 3, 0, 1)))) < 1e-10
        bianchi = (R + np.transpose(R, (1, 2, 0, 3))
                   + np.transpose(R, (2, 0, 1, 3)))
        assert np.max(np.abs(bianchi)) < 1e-10
        ric = ricci_at(f, fp, fpp)
        assert np.max(np.abs(ric - ric.T)) < 1e-10


def test_radial_sectional_closed_form():
    # K(e_0, e_i) = -f_i'' / f_i for any warped product of this type
    f = np.array([1.3, 0.8, 1.1])
    fp = np.array([0.4, -0.2, 0.9])
    fpp = np.array([1.5, 0.6, 1.2])
    R = riemann_at(f, fp, fpp)
    for i in range(3):
        e0 = np.eye(4)[0]
        ei = np.eye(4)[i + 1]
        k = sectional(f, fp, fpp, e0, ei)
        assert k == pytest.approx(-fpp[i] / f[i], rel=1e-12)
        assert R[0, i + 1, i + 1, 0] == pytest.approx(k, rel=1e-12)


def test_mixed_sectional_round_closed_form():
    # constant warping f_i = f with fp = fpp = 0 gives the product-metric
    # value K(e_i, e_j) = (4 f_k^2 - 3 f^2 ... ) reduced here to 1/f^2
    # for the round fiber: K = (2/f^2)^2 * ... checked against -1 case above;
    # here just check symmetry of fiber planes under 1<->2 for equal warping
    f = np.array([1.5, 1.5, 1.5])
    z = np.zeros(3)
    R = riemann_at(f, z, z)
    k12 = R[1, 2, 2, 1]
    k13 = R[1, 3, 3, 1]
    k23 = R[2, 3, 3, 2]
    assert k12 == pytest.approx(k13, rel=1e-13)
    assert k12 == pytest.approx(k23, rel=1e-13)
    # totally geodesic fiber at a critical point of the warping:
    # Gauss equation gives intrinsic curvature of the rescaled 3-sphere
    assert k12 == pytest.approx(1.0 / 1.5 ** 2, rel=1e-12)


def test_sectional_rejects_parallel_vectors():
    f = np.ones(3)
    with pytest.raises(DomainError):
        sectional(f, f, f, np.array([1.0, 0, 0, 0]), np.array([2.0, 0, 0, 0]))


def test_sectional_range_rejects_few_samples():
    m = assemble(hyperbolic_profile(n=20))
    with pytest.raises(DomainError):
        sectional_range(m, plane_samples=10)


def test_einstein_residual_detects_corruption():
    prof = hyperbolic_profile()
    prof.y2 += 1e-3 * np.exp(-0.5 * ((prof.x - 0.5) / 0.1) ** 2)
    m = assemble(prof)
    assert einstein_residual_4d(m) > 1e-3


def test_curvature_report_hyperbolic():
    rep = curvature_report(hyperbolic_profile(), plane_samples=150, seed=3)
    assert rep.einstein_residual < 1e-8
    assert rep.flag_nonpositive
    assert rep.sec_max < 0.0


def test_center_regularity():
    # approaching the center (r -> 0) the warping closes up like r itself,
    # so frame curvatures stay bounded near -1 for the round solution
    m = assemble(hyperbolic_profile(n=400, eps=1e-5))
    i = int(np.argmin(m.r_grid))
    assert m.r_grid[i] < 1e-3
    R = riemann_at(m.f[i], m.fp[i], m.fpp[i])
    assert R[0, 1, 1, 0] == pytest.approx(-1.0, abs=1e-6)
    assert R[1, 2, 2, 1] == pytest.approx(-1.0, abs=1e-6)
