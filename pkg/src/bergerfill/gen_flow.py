"""Three-variable generalization of the Berger flow.

State is (y1, y2, y3, w2, w3) with y1 = log K, y2 = log phi1, y3 = log phi2
and w_i the derivatives of y2, y3.  The invariant-metric eigenvalues are
I1 = (K phi1^(-2) phi2^(-1))^(1/3), I2 = (K phi1 phi2^(-1))^(1/3),
I3 = (K phi1 phi2^2)^(1/3); the two-variable system is the slice phi2 = 1.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BranchDomainError, DomainError, StiffnessError
from .flow import DEFAULT_ATOL, DEFAULT_RTOL, RADICAND_CLAMP, _sample_grid
from .jets import TRUST_RADIUS, Jet, _poly_in_local, berger_boundary_jet
from .series import sderiv, seval, sexp, smul, trim


@dataclass(frozen=True)
class GenBergerState:
    x: float
    y1: float
    y2: float
    y3: float
    w2: float
    w3: float

    def as_array(self):
        return np.array([self.y1, self.y2, self.y3, self.w2, self.w3])


@dataclass(frozen=True)
class GenBergerBoundaryData:
    """Boundary data (phi1_0, phi2_0, K0) with free third-order pair (a2, a3).

    The third-order metric coefficient is diagonal with entries
    (g3_11, a2, a2 + a3); g3_11 is fixed by the trace-free condition
    against the boundary metric, so (phi2_0, a3) = (1, 0) reduces to the
    two-variable data (phi0, K0, a) with a = a2.
    """

    phi1_0: float
    phi2_0: float
    K0: float
    a2: float = 0.0
    a3: float = 0.0

    def __post_init__(self):
        if self.phi1_0 <= 0 or self.phi2_0 <= 0 or self.K0 <= 0:
            raise DomainError("phi1_0, phi2_0 and K0 must be positive")

    def eigenvalues0(self):
        k, p1, p2 = self.K0, self.phi1_0, self.phi2_0
        i1 = (k / (p1 * p1 * p2)) ** (1.0 / 3.0)
        i2 = (k * p1 / p2) ** (1.0 / 3.0)
        i3 = (k * p1 * p2 * p2) ** (1.0 / 3.0)
        return i1, i2, i3

    def g3_diagonal(self):
        """Trace-free third-order diagonal (g3_11, g3_22, g3_33)."""
        i1, i2, i3 = self.eigenvalues0()
        g22 = self.a2
        g33 = self.a2 + self.a3
        g11 = -i1 * (g22 / i2 + g33 / i3)
        return g11, g22, g33


# exponent tables: each bracket is K^(-1/3) * sum_k c_k phi1^p_k phi2^q_k
_B2_TERMS = (
    (1.0, 2.0 / 3.0, 1.0 / 3.0),
    (-1.0, -1.0 / 3.0, 1.0 / 3.0),
    (-1.0, 2.0 / 3.0, -2.0 / 3.0),
    (1.0, -4.0 / 3.0, -2.0 / 3.0),
)
_B3_TERMS = (
    (1.0, -1.0 / 3.0, 1.0 / 3.0),
    (-1.0, -1.0 / 3.0, -2.0 / 3.0),
    (-1.0, 2.0 / 3.0, 4.0 / 3.0),
    (1.0, 2.0 / 3.0, -2.0 / 3.0),
)
# G = 3 - sum of these K^(-1/3) phi1^p phi2^q terms
_GAP_TERMS = (
    (2.0, 2.0 / 3.0, 1.0 / 3.0),
    (2.0, -1.0 / 3.0, 1.0 / 3.0),
    (2.0, -1.0 / 3.0, -2.0 / 3.0),
    (-1.0, -4.0 / 3.0, -2.0 / 3.0),
    (-1.0, 2.0 / 3.0, -2.0 / 3.0),
    (-1.0, 2.0 / 3.0, 4.0 / 3.0),
)


def _bracket(terms, y1, y2, y3):
    return sum(c * np.exp(-y1 / 3.0 + p * y2 + q * y3) for c, p, q in terms)


def curvature_combo_gen(y1, y2, y3):
    """The scalar G with 48(1-x^2)^(-2) G appearing in the first integral."""
    return 3.0 - _bracket(_GAP_TERMS, y1, y2, y3)


def residuals_gen(x, y1, y1p, y1pp, y2, y2p, y2pp, y3, y3p, y3pp):
    """Left-hand sides of the five three-variable equations, verbatim."""
    if not 0.0 < x < 1.0:
        raise DomainError("x must lie in (0,1)")
    om = 1.0 - x * x
    Q = y2p * y2p + y2p * y3p + y3p * y3p
    G = curvature_combo_gen(y1, y2, y3)
    r1 = y1pp - (1.0 + 3.0 * x * x) / (x * om) * y1p + y1p * y1p / 6.0 + Q / 3.0
    r2 = (
        y1pp
        - (5.0 + 7.0 * x * x) / (x * om) * y1p
        + 0.5 * y1p * y1p
        + 16.0 / (om * om) * G
    )
    r3 = (
        y2pp
        - 2.0 * (1.0 + 2.0 * x * x) / (x * om) * y2p
        + 0.5 * y1p * y2p
        + 32.0 / (om * om) * _bracket(_B2_TERMS, y1, y2, y3)
    )
    r4 = (
        y3pp
        - 2.0 * (1.0 + 2.0 * x * x) / (x * om) * y3p
        + 0.5 * y1p * y3p
        + 32.0 / (om * om) * _bracket(_B3_TERMS, y1, y2, y3)
    )
    r5 = (
        y1p * y1p
        - Q
        - 12.0 * (1.0 + x * x) / (x * om) * y1p
        + 48.0 / (om * om) * G
    )
    return np.array([r1, r2, r3, r4, r5])


def y1prime_algebraic_gen(x, y1, y2, y3, w2, w3):
    """Minus branch of the first-integral quadratic; y1'(0) = 0."""
    om = 1.0 - x * x
    Q = w2 * w2 + w2 * w3 + w3 * w3
    gap = _bracket(_GAP_TERMS, y1, y2, y3)  # = 3 - G
    rad = om * om * (1.0 + x * x * Q / 36.0) + (4.0 / 3.0) * x * x * gap
    if rad < 0.0:
        if rad < RADICAND_CLAMP:
            raise BranchDomainError(x, -rad)
        rad = 0.0
    num = (4.0 / 3.0) * (3.0 - gap) - om * om * Q / 36.0
    return 6.0 * x / om * num / (1.0 + x * x + np.sqrt(rad))


def rhs_gen(x, y):
    """Right-hand side of the reduced system d(y1, y2, y3, w2, w3)/dx."""
    y1, y2, y3, w2, w3 = y
    d1 = y1prime_algebraic_gen(x, y1, y2, y3, w2, w3)
    om = 1.0 - x * x
    lin = 2.0 * (1.0 + 2.0 * x * x) / (x * om)
    dw2 = lin * w2 - 0.5 * d1 * w2 - 32.0 / (om * om) * _bracket(_B2_TERMS, y1, y2, y3)
    dw3 = lin * w3 - 0.5 * d1 * w3 - 32.0 / (om * om) * _bracket(_B3_TERMS, y1, y2, y3)
    return np.array([d1, w2, w3, dw2, dw3])


# ---------------------------------------------------------------------------
# endpoint jets
# ---------------------------------------------------------------------------

def _sexp_bracket(terms, y1c, y2c, y3c, n):
    out = np.zeros(n)
    for c, p, q in terms:
        out = out + c * sexp(-trim(y1c, n) / 3.0 + p * trim(y2c, n) + q * trim(y3c, n), n)
    return out


def _gen_residual_series(y1c, y2c, y3c, endpoint, n):
    """Series of eq01 * x(1-x^2), eq03/eq04 * x(1-x^2)^2 in the local variable."""
    X, OM = _poly_in_local(endpoint)
    sgn = 1.0 if endpoint == "boundary" else -1.0
    XOM = smul(X, OM, n)
    XOM2 = smul(XOM, OM, n)
    if endpoint == "boundary":
        one_p_3x2 = trim([1.0, 0.0, 3.0], n)
        p2_12 = smul([2.0, 0.0, 4.0], OM, n)
    else:
        one_p_3x2 = trim([4.0, -6.0, 3.0], n)
        p2_12 = smul([6.0, -8.0, 4.0], OM, n)

    d1 = sgn * sderiv(y1c, n)
    d2 = sgn * sderiv(y2c, n)
    d3 = sgn * sderiv(y3c, n)
    dd1 = sderiv(sderiv(y1c, n + 1), n)
    dd2 = sderiv(sderiv(y2c, n + 1), n)
    dd3 = sderiv(sderiv(y3c, n + 1), n)

    Q = smul(d2, d2, n) + smul(d2, d3, n) + smul(d3, d3, n)
    r1 = smul(XOM, dd1, n) - smul(one_p_3x2, d1, n) + smul(
        XOM, smul(d1, d1, n) / 6.0 + Q / 3.0, n
    )
    b2 = _sexp_bracket(_B2_TERMS, y1c, y2c, y3c, n)
    b3 = _sexp_bracket(_B3_TERMS, y1c, y2c, y3c, n)
    r3 = (
        smul(XOM2, dd2, n)
        + 0.5 * smul(XOM2, smul(d1, d2, n), n)
        - smul(p2_12, d2, n)
        + 32.0 * smul(X, b2, n)
    )
    r4 = (
        smul(XOM2, dd3, n)
        + 0.5 * smul(XOM2, smul(d1, d3, n), n)
        - smul(p2_12, d3, n)
        + 32.0 * smul(X, b3, n)
    )
    return r1, r3, r4


def _pin_gen(coeffs, which, k, eq_index, extract_order, endpoint, n):
    target = coeffs[which]

    def value():
        r = _gen_residual_series(coeffs[0], coeffs[1], coeffs[2], endpoint, n)
        return r[eq_index][extract_order]

    target[k] = 0.0
    base = value()
    target[k] = 1.0
    slope = value() - base
    if abs(slope) < 1e-10:
        raise DomainError(f"degenerate recursion at order {k}")
    target[k] = -base / slope


def gen_boundary_jet(bd, order=8):
    """Boundary (x=0) jet of the three-variable system.

    Second-order coefficients come from the leading balance of the two
    evolution equations and the scalar equation; third-order coefficients
    encode the trace-free diagonal (a2, a3) through the eigenvalue ratios.
    """
    if order < 4:
        raise DomainError("boundary jet order must be >= 4")
    n = order + 1
    y1c = np.zeros(n)
    y2c = np.zeros(n)
    y3c = np.zeros(n)
    y1c[0] = np.log(bd.K0)
    y2c[0] = np.log(bd.phi1_0)
    y3c[0] = np.log(bd.phi2_0)
    y1c[2] = 2.0 * curvature_combo_gen(y1c[0], y2c[0], y3c[0])
    y2c[2] = 16.0 * _bracket(_B2_TERMS, y1c[0], y2c[0], y3c[0])
    y3c[2] = 16.0 * _bracket(_B3_TERMS, y1c[0], y2c[0], y3c[0])
    i1, i2, i3 = bd.eigenvalues0()
    g11, g22, g33 = bd.g3_diagonal()
    y2c[3] = 4.0 * (g22 / i2 - g11 / i1)
    y3c[3] = 4.0 * (g33 / i3 - g22 / i2)
    y1c[3] = 4.0 * (g11 / i1 + g22 / i2 + g33 / i3)  # zero by trace-freeness
    coeffs = [y1c, y2c, y3c]
    for k in range(4, order + 1):
        _pin_gen(coeffs, 1, k, 1, k - 1, "boundary", n)
        _pin_gen(coeffs, 2, k, 2, k - 1, "boundary", n)
        _pin_gen(coeffs, 0, k, 0, k - 1, "boundary", n)
    return Jet(endpoint="boundary", coeffs_y1=y1c, coeffs_y2=y2c,
               coeffs_y3=y3c, order=order)


def gen_center_jet(q2, q3, order=8):
    """Center (x=1) jet with the two free parameters q2 = y2''(1), q3 = y3''(1)."""
    if order < 4:
        raise DomainError("center jet order must be >= 4")
    n = order + 1
    y1c = np.zeros(n)
    y2c = np.zeros(n)
    y3c = np.zeros(n)
    y2c[2] = 0.5 * q2
    y3c[2] = 0.5 * q3
    coeffs = [y1c, y2c, y3c]
    for k in range(2, order + 1):
        if k >= 3:
            _pin_gen(coeffs, 1, k, 1, k, "center", n)
            _pin_gen(coeffs, 2, k, 2, k, "center", n)
        _pin_gen(coeffs, 0, k, 0, k - 1, "center", n)
    return Jet(endpoint="center", coeffs_y1=y1c, coeffs_y2=y2c,
               coeffs_y3=y3c, order=order)


def eval_gen_jet(jet, x):
    """Evaluate (y1, y1', y2, y2', y3, y3') at the global coordinate x."""
    if jet.coeffs_y3 is None:
        raise DomainError("jet has no y3 component")
    t = x if jet.endpoint == "boundary" else 1.0 - x
    if abs(t) > TRUST_RADIUS:
        raise DomainError(f"x={x} outside jet trust radius {TRUST_RADIUS}")
    sgn = 1.0 if jet.endpoint == "boundary" else -1.0
    n = jet.order + 1
    vals = []
    for c in (jet.coeffs_y1, jet.coeffs_y2, jet.coeffs_y3):
        vals.append(seval(c, t))
        vals.append(sgn * seval(sderiv(c, n), t))
    return tuple(vals)


def integrate_gen(start, x_end, tol=DEFAULT_RTOL, atol=DEFAULT_ATOL, n_out=240):
    """Integrate the reduced three-variable flow; returns (x, states) arrays."""
    x0 = start.x
    if x0 == x_end:
        raise ValueError("empty integration interval")
    t_eval = _sample_grid(x0, x_end, n_out)
    from .flow import _blowup_event

    sol = solve_ivp(
        rhs_gen,
        (x0, x_end),
        start.as_array(),
        method="DOP853",
        rtol=tol,
        atol=atol,
        t_eval=t_eval,
        events=_blowup_event,
    )
    if sol.status == 1:
        err = StiffnessError("solution norm blew up before the endpoint")
        err.x_last = float(sol.t_events[0][0])
        raise err
    if not sol.success:
        err = StiffnessError(f"integration failed: {sol.message}")
        err.x_last = float(sol.t[-1]) if len(sol.t) else float(x0)
        raise err
    xs, ys = sol.t, sol.y
    if x_end < x0:
        xs = xs[::-1]
        ys = ys[:, ::-1]
    return xs.copy(), ys.copy()


def berger_jet_from_gen_data(bd):
    """Two-variable boundary jet for reduced data (phi2_0 = 1, a3 = 0)."""
    from .jets import BergerBoundaryData

    return berger_boundary_jet(
        BergerBoundaryData(phi0=bd.phi1_0, K0=bd.K0, a=bd.a2)
    )
