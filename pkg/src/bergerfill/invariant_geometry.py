"""Intrinsic geometry of left-invariant metrics on S^3.

Works at a fixed base point where the frame relations are encoded by the
structure-constant tables C_ij^p and T_ij^p = C_ij^p - C_ji^p.  For the
SU(2) frame with [Y_i, Y_j] = 2 eps_ijk Y_k the base-point tables are
C_ij^k = eps_jik and T_ij^k = 2 eps_jik.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

_MINOR_TOL = 1e-14


def _levi_civita():
    eps = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps


@dataclass(frozen=True)
class StructureConstants:
    """Base-point tables C_ij^p, T_ij^p and the alternating symbol."""

    C: np.ndarray
    T: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        if not np.allclose(self.T, self.C - np.swapaxes(self.C, 0, 1)):
            raise DomainError("T table must equal C_ij^p - C_ji^p")


def su2_structure():
    """Structure tables for the SU(2) frame at the base point."""
    eps = _levi_civita()
    # C_ij^k = eps_jik, hence T_ij^k = eps_jik - eps_ijk = 2 eps_jik
    C = np.swapaxes(eps, 0, 1).copy()
    return StructureConstants(C=C, T=2.0 * C, eps=eps)


def check_positive_definite(h):
    """Leading-principal-minor test for a symmetric 3x3 matrix."""
    h = np.asarray(h, dtype=float)
    if h.shape != (3, 3):
        raise DomainError("metric must be 3x3")
    if not np.allclose(h, h.T, atol=1e-12, rtol=1e-12):
        raise DomainError("metric must be symmetric")
    m1 = h[0, 0]
    m2 = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    m3 = _det3(h)
    if m1 <= _MINOR_TOL or m2 <= _MINOR_TOL or m3 <= _MINOR_TOL:
        raise DomainError("metric is not positive definite")


def _det3(h):
    return (
        h[0, 0] * (h[1, 1] * h[2, 2] - h[1, 2] * h[2, 1])
        - h[0, 1] * (h[1, 0] * h[2, 2] - h[1, 2] * h[2, 0])
        + h[0, 2] * (h[1, 0] * h[2, 1] - h[1, 1] * h[2, 0])
    )


def inv3(h):
    """Explicit cofactor inverse of a 3x3 matrix (no pivoting)."""
    h = np.asarray(h, dtype=float)
    d = _det3(h)
    if d == 0.0:
        raise DomainError("singular 3x3 matrix")
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(h, i, axis=0), j, axis=1)
            cof[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return cof.T / d


def _dT_table(s):
    """Closed form for dT[m,i,j,p] = d/dtheta^m T_ij^p at the base point.

    Valid for the SU(2) tables, where C_im^q = eps_miq:
    dT_mij^p = 2 sum_q (eps_qjp eps_miq + eps_iqp eps_mjq - eps_ijq eps_mqp).
    """
    e = s.eps
    dT = 2.0 * (
        np.einsum("qjp,miq->mijp", e, e)
        + np.einsum("iqp,mjq->mijp", e, e)
        - np.einsum("ijq,mqp->mijp", e, e)
    )
    return dT


def ricci_invariant(h, s=None):
    """Ricci tensor R_ij(h) of a left-invariant metric at the base point.

    Direct evaluation of the invariant-frame formula; the derivative-of-T
    terms use the closed eps-contraction rather than numerical frame
    differentiation.
    """
    if s is None:
        s = su2_structure()
    h = np.asarray(h, dtype=float)
    check_positive_definite(h)
    g = h
    gi = inv3(g)
    C, T = s.C, s.T
    dT = _dT_table(s)

    Ctr = np.einsum("kpp->k", C)
    Ttr = np.einsum("pkp->k", T)

    t1 = 0.5 * (
        np.einsum("pijp->ij", dT)
        + np.einsum("ipk,kjp->ij", C, T)
        + np.einsum("kjp,ipk->ij", C, T)
        + np.einsum("k,jik->ij", Ctr, T)
    )

    S = (
        dT
        + np.einsum("ipk,kqm->piqm", C, T)
        + np.einsum("pqk,ikm->piqm", C, T)
        - np.einsum("pkm,iqk->piqm", C, T)
    )
    X = np.einsum("pq,piqm,mj->ij", gi, S, g)
    t2 = -0.5 * (X + X.T)

    t3 = 0.25 * np.einsum("pik,kjp->ij", T, T)

    Y = np.einsum("pq,pik,kqm,mj->ij", gi, T, T, g)
    t4 = -0.25 * (Y + Y.T)

    v = np.einsum("kq,k->q", gi, Ttr)
    Z = np.einsum("q,iqm,mj->ij", v, T, g)
    t5 = -0.5 * (Z + Z.T)

    W = np.einsum("pq,pjk,iqm,km->ij", gi, T, T, g)
    t6 = 0.25 * (W + W.T)

    TG = np.einsum("abm,mc->abc", T, g)
    A = np.einsum("pl,jlk->jpk", gi, TG) + np.einsum("pl,klj->jpk", gi, TG)
    B = np.einsum("kq,pqi->ikp", gi, TG) + np.einsum("kq,iqp->ikp", gi, TG)
    t7 = -0.25 * np.einsum("jpk,ikp->ij", A, B)

    return t1 + t2 + t3 + t4 + t5 + t6 + t7


def berger_ricci_diagonal(I1, I2, I3):
    """Closed-form diagonal Ricci values for h = diag(I1, I2, I3)."""
    if I1 <= 0 or I2 <= 0 or I3 <= 0:
        raise DomainError("diagonal metric entries must be positive")
    R11 = 4.0 - 2.0 * (I2 / I3 + I3 / I2) + 2.0 * I1 * I1 / (I2 * I3)
    R22 = 4.0 - 2.0 * (I3 / I1 + I1 / I3) + 2.0 * I2 * I2 / (I1 * I3)
    R33 = 4.0 - 2.0 * (I2 / I1 + I1 / I2) + 2.0 * I3 * I3 / (I1 * I2)
    return R11, R22, R33


def general_einstein_residuals(x, h, hp, hpp, s=None):
    """Residuals of the homogeneous Einstein ODE system at one x in (0,1).

    Takes the 2-jet (h, h', h'') of the invariant metric hbar and returns
    (scalar residual, gauge vector residual, evolution tensor residual),
    all zero on exact Einstein profiles.  Dimension n = 3.
    """
    if s is None:
        s = su2_structure()
    if not 0.0 < x < 1.0:
        raise DomainError("x must lie in (0,1)")
    h = np.asarray(h, dtype=float)
    hp = np.asarray(hp, dtype=float)
    hpp = np.asarray(hpp, dtype=float)
    check_positive_definite(h)
    hi = inv3(h)
    n = 3

    A = hi @ hp          # h^{-1} h'
    trA = np.trace(A)
    trA2 = np.trace(A @ A)
    trB = np.trace(hi @ hpp)

    # d/dx [x(1-x^2) tr(h^{-1}h')] + (1/2) x(1-x^2) tr((h^{-1}h')^2)
    #   - 2 tr(h^{-1}h') , expanded with the product rule
    scalar = (
        (1.0 - 3.0 * x * x) * trA
        + x * (1.0 - x * x) * (trB - trA2)
        + 0.5 * x * (1.0 - x * x) * trA2
        - 2.0 * trA
    )

    C = s.C
    gauge = (
        np.einsum("ppq,qk,ki->i", C, hi, hp)
        + np.einsum("iqm,pq,mp->i", C, hi, hp)
        - np.einsum("qpp,qk,ki->i", C, hi, hp)
        - np.einsum("pik,pq,kq->i", C, hi, hp)
    )

    ric = ricci_invariant(h, s)
    om = 1.0 - x * x
    tensor = (
        -0.125 * x * om * om * hpp
        + 0.125 * ((n - 1) + (n + 1) * x * x) * om * hp
        + 0.125 * x * om * om * np.einsum("pq,pi,qj->ij", hi, hp, hp)
        + 0.125 * (1.0 + x * x) * om * trA * h
        - 0.0625 * x * om * om * trA * hp
        + (1.0 - n) * x * h
        + x * ric
    )
    return scalar, gauge, tensor
