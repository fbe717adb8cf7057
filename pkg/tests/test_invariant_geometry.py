import numpy as np
import pytest

from bergerfill.errors import DomainError
from bergerfill.invariant_geometry import (
    berger_ricci_diagonal,
    check_positive_definite,
    general_einstein_residuals,
    inv3,
    ricci_invariant,
    su2_structure,
)


def test_structure_tables():
    s = su2_structure()
    # C_ij^k encodes the connection-at-base-point table; the (2,3)->1 slot
    # carries a minus sign in this orientation convention
    assert s.C[1, 2, 0] == -1.0
    assert s.C[2, 1, 0] == 1.0
    assert np.array_equal(s.T, 2.0 * s.C)
    # T is the frame bracket table: [Y_i, Y_j] = T_ij^k Y_k = 2 eps_ijk ...
    # with the same transposed-index convention
    assert s.T[0, 1, 2] == -2.0
    assert s.T[1, 0, 2] == 2.0


def test_positive_definite_rejects():
    with pytest.raises(DomainError):
        check_positive_definite(np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(DomainError):
        check_positive_definite(np.array([[1.0, 2.0, 0], [0, 1, 0], [0, 0, 1]]))
    check_positive_definite(np.diag([2.0, 1.0, 0.5]))


def test_inv3_matches_numpy():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = rng.normal(size=(3, 3))
        a = a @ a.T + 3.0 * np.eye(3)
        assert np.allclose(inv3(a), np.linalg.inv(a), atol=1e-12)


def test_ricci_round_sphere_exact():
    # the bi-invariant metric has Ric = 2 g for these structure constants
    r = ricci_invariant(np.eye(3))
    assert np.array_equal(r, 2.0 * np.eye(3))


def test_ricci_squashed_exact():
    r = ricci_invariant(np.diag([2.0, 1.0, 1.0]))
    assert np.allclose(r, np.diag([8.0, 0.0, 0.0]), atol=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_ricci_diagonal_closed_form(seed):
    rng = np.random.default_rng(seed)
    I1, I2, I3 = rng.uniform(0.3, 3.0, 3)
    r = ricci_invariant(np.diag([I1, I2, I3]))
    closed = berger_ricci_diagonal(I1, I2, I3)
    assert np.allclose(np.diag(r), closed, rtol=1e-12)
    off = r - np.diag(np.diag(r))
    assert np.max(np.abs(off)) < 1e-12


def test_ricci_scale_invariance():
    h = np.diag([1.7, 0.8, 1.1])
    assert np.allclose(ricci_invariant(2.5 * h), ricci_invariant(h), atol=1e-13)


def test_hyperbolic_einstein_residuals_vanish():
    # hbar(x) = (identity eigenvalues) solves the system identically
    h = np.eye(3)
    z = np.zeros((3, 3))
    for x in [0.1, 0.5, 0.9]:
        scal, gauge, tensor = general_einstein_residuals(x, h, z, z)
        assert scal == 0.0
        assert np.array_equal(gauge, np.zeros(3))
        # Ric(eye) = 2 eye makes the zeroth-order terms cancel exactly
        assert np.allclose(tensor, 0.0, atol=1e-15)


def test_einstein_residuals_domain():
    with pytest.raises(DomainError):
        general_einstein_residuals(1.5, np.eye(3), np.zeros((3, 3)),
                                   np.zeros((3, 3)))
