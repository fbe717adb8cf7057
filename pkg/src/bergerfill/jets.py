"""Series solutions (jets) of the Berger system at the singular endpoints.

The boundary endpoint is x = 0 (conformal infinity), the center endpoint is
x = 1; center jets use the local variable s = 1 - x.  Jets are built by a
numerically-exact order-by-order linear solve: at each order the unknown
coefficient enters the truncated residual series linearly, so one base
evaluation plus one unit-perturbed evaluation pins it.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .invariant_geometry import check_positive_definite, inv3, ricci_invariant
from .series import seval, sderiv, sexp, smul, trim

TRUST_RADIUS = 0.1
DEFAULT_ORDER = 8


@dataclass(frozen=True)
class BergerBoundaryData:
    """Conformal-infinity data: squashing phi0, volume ratio K0, nonlocal a."""

    phi0: float
    K0: float
    a: float = 0.0

    def __post_init__(self):
        if self.phi0 <= 0 or self.K0 <= 0:
            raise DomainError("phi0 and K0 must be positive")

    def is_admissible(self):
        """Curvature-combination positivity (vacuously true at the round point).

        Solver iterates are allowed to leave this region; the branch guard
        in the flow converts genuine exits into penalty residuals.
        """
        if self.phi0 == 1.0 and self.K0 == 1.0:
            return True
        return self.curvature_combo() > 0

    def curvature_combo(self):
        p, k = self.phi0, self.K0
        return 3.0 - 4.0 * (p * k) ** (-1.0 / 3.0) + k ** (-1.0 / 3.0) * p ** (-4.0 / 3.0)

    def in_theorem_range(self):
        return 0.25 < self.phi0 < 4.0


def min_admissible_K0(phi0):
    """Smallest K0 with positive curvature combination, [(4 phi0^(-1/3) - phi0^(-4/3))/3]^3."""
    b = (4.0 * phi0 ** (-1.0 / 3.0) - phi0 ** (-4.0 / 3.0)) / 3.0
    return max(b, 0.0) ** 3


@dataclass(frozen=True)
class Jet:
    """Truncated series of (y1, y2) at an endpoint, in the local variable."""

    endpoint: str  # "boundary" (x=0) or "center" (x=1)
    coeffs_y1: np.ndarray
    coeffs_y2: np.ndarray
    order: int
    coeffs_y3: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.endpoint not in ("boundary", "center"):
            raise DomainError("endpoint must be 'boundary' or 'center'")


def eval_jet(jet, x):
    """Evaluate (y1, y1', y2, y2') at the global coordinate x.

    Only trusted within |local variable| <= 0.1 of the jet's endpoint.
    """
    t = x if jet.endpoint == "boundary" else 1.0 - x
    if abs(t) > TRUST_RADIUS:
        raise DomainError(f"x={x} outside jet trust radius {TRUST_RADIUS}")
    sgn = 1.0 if jet.endpoint == "boundary" else -1.0
    n = jet.order + 1
    y1 = seval(jet.coeffs_y1, t)
    y2 = seval(jet.coeffs_y2, t)
    d1 = sgn * seval(sderiv(jet.coeffs_y1, n), t)
    d2 = sgn * seval(sderiv(jet.coeffs_y2, n), t)
    return y1, d1, y2, d2


# ---------------------------------------------------------------------------
# residual series of the Berger equations, cleared of singular denominators
# ---------------------------------------------------------------------------

def _poly_in_local(endpoint):
    """Polynomials (x, 1-x^2) written in the local variable."""
    if endpoint == "boundary":
        return np.array([0.0, 1.0]), np.array([1.0, 0.0, -1.0])
    # x = 1 - s, 1 - x^2 = 2s - s^2
    return np.array([1.0, -1.0]), np.array([0.0, 2.0, -1.0])


def _berger_residual_series(y1c, y2c, endpoint, n):
    """Series of eq01 * x(1-x^2), eq02 * x(1-x^2)^2 and eq03 * x(1-x^2)^2."""
    X, OM = _poly_in_local(endpoint)
    sgn = 1.0 if endpoint == "boundary" else -1.0  # d/dx = sgn * d/dt
    XOM = smul(X, OM, n)
    XOM2 = smul(XOM, OM, n)
    # 1+3x^2, (5+7x^2)(1-x^2) and 2(1+2x^2)(1-x^2) in the local variable
    if endpoint == "boundary":
        one_p_3x2 = trim([1.0, 0.0, 3.0], n)
        p57 = smul([5.0, 0.0, 7.0], OM, n)
        p2_12 = smul([2.0, 0.0, 4.0], OM, n)
    else:
        one_p_3x2 = trim([4.0, -6.0, 3.0], n)
        p57 = smul([12.0, -14.0, 7.0], OM, n)
        p2_12 = smul([6.0, -8.0, 4.0], OM, n)

    d1 = sgn * sderiv(y1c, n)
    d2 = sgn * sderiv(y2c, n)
    dd1 = sderiv(sderiv(y1c, n + 1), n)  # second derivative: sign cancels
    dd2 = sderiv(sderiv(y2c, n + 1), n)

    e_k13 = sexp(-trim(y1c, n) / 3.0, n)          # K^(-1/3)
    e_p13 = sexp(-trim(y2c, n) / 3.0, n)          # phi^(-1/3)
    e_p43 = sexp(-4.0 * trim(y2c, n) / 3.0, n)    # phi^(-4/3)

    r1 = (
        smul(XOM, dd1, n)
        - smul(one_p_3x2, d1, n)
        + smul(XOM, smul(d1, d1, n) / 6.0 + smul(d2, d2, n) / 3.0, n)
    )
    src2 = 6.0 * trim([1.0], n) - 8.0 * smul(e_k13, e_p13, n) + 2.0 * smul(e_k13, e_p43, n)
    r2 = (
        smul(XOM2, dd1, n)
        + 0.5 * smul(XOM2, smul(d1, d1, n), n)
        - smul(p57, d1, n)
        + 8.0 * smul(X, src2, n)
    )
    src3 = smul(e_k13, e_p43 - e_p13, n)
    r3 = (
        smul(XOM2, dd2, n)
        + 0.5 * smul(XOM2, smul(d1, d2, n), n)
        - smul(p2_12, d2, n)
        + 32.0 * smul(X, src3, n)
    )
    return r1, r2, r3


def _pin_coefficient(y1c, y2c, endpoint, which, k, eq_index, extract_order, n):
    """Solve the order-k coefficient of y1 or y2 from one residual series."""
    target = y1c if which == 1 else y2c

    def coeff():
        r = _berger_residual_series(y1c, y2c, endpoint, n)[eq_index]
        return r[extract_order]

    target[k] = 0.0
    base = coeff()
    target[k] = 1.0
    slope = coeff() - base
    if abs(slope) < 1e-10:
        raise DomainError(f"degenerate recursion at order {k} (y{which})")
    target[k] = -base / slope


def berger_boundary_jet(bd, order=DEFAULT_ORDER):
    """Boundary (x=0) jet of the Berger system for given (phi0, K0, a).

    The pinned low-order coefficients use the closed forms
      y1''(0) = 4(3 - 4 K0^(-1/3) phi0^(-1/3) + K0^(-1/3) phi0^(-4/3)),
      y2^(2)  = 16 K0^(-1/3) phi0^(-4/3) (1 - phi0),
      y2^(3)  = 12 (K0 phi0)^(-1/3) a,
    with y1^(1) = y2^(1) = y1^(3) = 0; everything above order 3 comes from
    the order-by-order recursion on eq01 and eq03.
    """
    if order < 5:
        raise DomainError("boundary jet order must be >= 5")
    n = order + 1
    k0, p0, a = bd.K0, bd.phi0, bd.a
    y1c = np.zeros(n)
    y2c = np.zeros(n)
    y1c[0] = np.log(k0)
    y2c[0] = np.log(p0)
    y1c[2] = 2.0 * (3.0 - 4.0 * (k0 * p0) ** (-1.0 / 3.0)
                    + k0 ** (-1.0 / 3.0) * p0 ** (-4.0 / 3.0))
    y2c[2] = 16.0 * k0 ** (-1.0 / 3.0) * p0 ** (-4.0 / 3.0) * (1.0 - p0)
    y2c[3] = 12.0 * (k0 * p0) ** (-1.0 / 3.0) * a
    y1c[3] = 0.0  # trace-free nonlocal term
    for k in range(4, order + 1):
        _pin_coefficient(y1c, y2c, "boundary", 2, k, 2, k - 1, n)
        _pin_coefficient(y1c, y2c, "boundary", 1, k, 0, k - 1, n)
    return Jet(endpoint="boundary", coeffs_y1=y1c, coeffs_y2=y2c, order=order)


def berger_center_jet(q, order=DEFAULT_ORDER):
    """Center (x=1) jet with the single free parameter q = y2''(1).

    In s = 1-x: y2 = (q/2) s^2 + O(s^3) and y1 = O(s^3); the s^2
    coefficient of y1 is forced to vanish by the leading balance of the
    scalar equation at the center.
    """
    if order < 4:
        raise DomainError("center jet order must be >= 4")
    n = order + 1
    y1c = np.zeros(n)
    y2c = np.zeros(n)
    y2c[2] = 0.5 * q
    for k in range(2, order + 1):
        if k >= 3:
            _pin_coefficient(y1c, y2c, "center", 2, k, 2, k, n)
        _pin_coefficient(y1c, y2c, "center", 1, k, 0, k - 1, n)
    return Jet(endpoint="center", coeffs_y1=y1c, coeffs_y2=y2c, order=order)


# ---------------------------------------------------------------------------
# Fefferman-Graham g^(2)
# ---------------------------------------------------------------------------

def g2_from_boundary_metric(ghat):
    """Second expansion coefficient g^(2) of a boundary metric on S^3.

    g^(2)_ij = R_ghat ghat_ij / (2(n-1)(n-2)) - R_ij(ghat)/(n-2) with n=3.
    """
    ghat = np.asarray(ghat, dtype=float)
    check_positive_definite(ghat)
    ric = ricci_invariant(ghat)
    scal = np.trace(inv3(ghat) @ ric)
    return scal * ghat / 4.0 - ric
