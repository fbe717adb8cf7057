"""Reduced first-order Berger flow on x in (0,1).

State is (y1, y2, w) with y1 = log K, y2 = log phi, w = y2'.  The first
derivative y1' is taken from the minus branch of the quadratic constraint,
which enforces the first integral by construction; y2'' comes from the
evolution equation.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BranchDomainError, StiffnessError

RADICAND_CLAMP = -1e-13
DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
MIN_STEP = 1e-14
MAX_STEPS = 10 ** 6


@dataclass(frozen=True)
class BergerState:
    x: float
    y1: float
    y2: float
    w: float

    def as_array(self):
        return np.array([self.y1, self.y2, self.w])


def curvature_combo(y1, y2):
    """3 - 4(phi K)^(-1/3) + K^(-1/3) phi^(-4/3), the positivity quantity."""
    return (
        3.0
        - 4.0 * np.exp(-(y1 + y2) / 3.0)
        + np.exp(-(y1 + 4.0 * y2) / 3.0)
    )


def _radicand(x, y1, y2, w):
    # second (stable) form: (1-x^2)^2 + x^2(1-x^2)^2 w^2/36
    #                       + (4/3) x^2 K^(-1/3) phi^(-4/3) (4 phi - 1)
    om = 1.0 - x * x
    gap = np.exp(-(y1 + 4.0 * y2) / 3.0) * (4.0 * np.exp(y2) - 1.0)
    return om * om * (1.0 + x * x * w * w / 36.0) + (4.0 / 3.0) * x * x * gap


def y1prime_algebraic(x, y1, y2, w):
    """Minus branch of the constraint quadratic, y1'(0) = 0.

    Evaluated in a form free of the 1+x^2 - sqrt cancellation near x = 0.
    """
    rad = _radicand(x, y1, y2, w)
    if rad < 0.0:
        if rad < RADICAND_CLAMP:
            raise BranchDomainError(x, -rad)
        rad = 0.0
    om = 1.0 - x * x
    num = (4.0 / 3.0) * curvature_combo(y1, y2) - om * om * w * w / 36.0
    return 6.0 * x / om * num / (1.0 + x * x + np.sqrt(rad))


def rhs(x, y):
    """Right-hand side of the reduced system d(y1, y2, w)/dx."""
    y1, y2, w = y
    d1 = y1prime_algebraic(x, y1, y2, w)
    om = 1.0 - x * x
    source = 32.0 / (om * om) * np.exp(-(y1 + y2) / 3.0) * (np.exp(-y2) - 1.0)
    dw = 2.0 * (1.0 + 2.0 * x * x) / (x * om) * w - 0.5 * d1 * w - source
    return np.array([d1, w, dw])


def constraint_phi(x, y1, y2, w, y1p=None):
    """First integral Phi; zero in exact arithmetic when y1' is the branch."""
    if y1p is None:
        y1p = y1prime_algebraic(x, y1, y2, w)
    om = 1.0 - x * x
    return (
        y1p * y1p
        - w * w
        - 12.0 * (1.0 + x * x) / (x * om) * y1p
        + 48.0 / (om * om) * curvature_combo(y1, y2)
    )


def full_residuals(x, y1, y1p, y1pp, y2, y2p, y2pp):
    """Left-hand sides of the four Berger equations, evaluated verbatim."""
    om = 1.0 - x * x
    k13 = np.exp(-y1 / 3.0)
    p13 = np.exp(-y2 / 3.0)
    p43 = np.exp(-4.0 * y2 / 3.0)
    r1 = y1pp + y1p * y1p / 6.0 + y2p * y2p / 3.0 - (1.0 + 3.0 * x * x) / (x * om) * y1p
    r2 = (
        y1pp
        + 0.5 * y1p * y1p
        - (5.0 + 7.0 * x * x) / (x * om) * y1p
        + 8.0 / (om * om) * (6.0 - 8.0 * k13 * p13 + 2.0 * k13 * p43)
    )
    r3 = (
        y2pp
        + 0.5 * y1p * y2p
        - 2.0 * (1.0 + 2.0 * x * x) / (x * om) * y2p
        + 32.0 / (om * om) * k13 * p13 * (np.exp(-y2) - 1.0)
    )
    r4 = (
        y1p * y1p
        - y2p * y2p
        - 12.0 * (1.0 + x * x) / (x * om) * y1p
        + 48.0 / (om * om) * curvature_combo(y1, y2)
    )
    return np.array([r1, r2, r3, r4])


def y1_second_derivative(x, y1, y2, w, step=1e-6):
    """d/dx of the algebraic y1' along the flow, by chain rule.

    Partials of the branch are taken by central differences; the state
    derivatives come from the flow itself.
    """
    d1, d2, dw = rhs(x, np.array([y1, y2, w]))
    hx = step * max(1.0, abs(x))

    def f(xx, a, b, c):
        return y1prime_algebraic(xx, a, b, c)

    dfdx = (f(x + hx, y1, y2, w) - f(x - hx, y1, y2, w)) / (2.0 * hx)
    h1 = step * max(1.0, abs(y1))
    dfd1 = (f(x, y1 + h1, y2, w) - f(x, y1 - h1, y2, w)) / (2.0 * h1)
    h2 = step * max(1.0, abs(y2))
    dfd2 = (f(x, y1, y2 + h2, w) - f(x, y1, y2 - h2, w)) / (2.0 * h2)
    hw = step * max(1.0, abs(w))
    dfdw = (f(x, y1, y2, w + hw) - f(x, y1, y2, w - hw)) / (2.0 * hw)
    return dfdx + dfd1 * d1 + dfd2 * d2 + dfdw * dw


@dataclass
class SolutionProfile:
    """Sampled trajectory with its parameters and constraint diagnostics."""

    x: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    w: np.ndarray
    params: dict = field(default_factory=dict)
    max_abs_phi: float = 0.0

    def __post_init__(self):
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("profile samples must have strictly increasing x")

    def derived(self):
        """Per-sample derived arrays: y1', y2'', K, phi, I1, I2, Phi, residuals."""
        y1p = np.array([
            y1prime_algebraic(x, a, b, c)
            for x, a, b, c in zip(self.x, self.y1, self.y2, self.w)
        ])
        dws = np.array([
            rhs(x, np.array([a, b, c]))[2]
            for x, a, b, c in zip(self.x, self.y1, self.y2, self.w)
        ])
        y1pp = np.array([
            y1_second_derivative(x, a, b, c)
            for x, a, b, c in zip(self.x, self.y1, self.y2, self.w)
        ])
        K = np.exp(self.y1)
        phi = np.exp(self.y2)
        I2 = (K * phi) ** (1.0 / 3.0)
        I1 = (K / phi ** 2) ** (1.0 / 3.0)
        phi_c = np.array([
            constraint_phi(x, a, b, c)
            for x, a, b, c in zip(self.x, self.y1, self.y2, self.w)
        ])
        res = np.array([
            full_residuals(x, a, p, pp, b, c, dw)
            for x, a, p, pp, b, c, dw in zip(
                self.x, self.y1, y1p, y1pp, self.y2, self.w, dws
            )
        ])
        return {
            "y1p": y1p,
            "y2pp": dws,
            "y1pp": y1pp,
            "K": K,
            "phi": phi,
            "I1": I1,
            "I2": I2,
            "Phi": phi_c,
            "residuals": res,
        }


def _sample_grid(x0, x1, n):
    """Output grid clustered toward whichever endpoint is singular."""
    lo, hi = (x0, x1) if x0 < x1 else (x1, x0)
    pts = [np.linspace(lo, hi, n // 2)]
    if lo < 0.1:
        pts.append(np.geomspace(lo, min(hi, 0.1), n // 4))
    if hi > 0.9:
        pts.append(1.0 - np.geomspace(1.0 - hi, min(1.0 - lo, 0.1), n // 4))
    grid = np.unique(np.concatenate(pts))
    grid = grid[(grid >= lo) & (grid <= hi)]
    return grid if x0 < x1 else grid[::-1]


BLOWUP_BOUND = 40.0


def _blowup_event(t, y):
    return BLOWUP_BOUND - np.max(np.abs(y))


_blowup_event.terminal = True
_blowup_event.direction = -1.0


def integrate(start, x_end, tol=DEFAULT_RTOL, atol=DEFAULT_ATOL, n_out=240):
    """Adaptive Dormand-Prince (8th order) integration of the reduced flow.

    Returns a SolutionProfile segment sampled on >= 200 points, with the
    running max |Phi| recorded.  Branch exits raise BranchDomainError with
    the x at which they occurred; step-size underflow or norm blow-up
    raises StiffnessError carrying the last x reached.
    """
    x0 = start.x
    if x0 == x_end:
        raise ValueError("empty integration interval")
    t_eval = _sample_grid(x0, x_end, n_out)
    sol = solve_ivp(
        rhs,
        (x0, x_end),
        start.as_array(),
        method="DOP853",
        rtol=tol,
        atol=atol,
        t_eval=t_eval,
        events=_blowup_event,
        dense_output=False,
    )
    if sol.status == 1:
        err = StiffnessError("solution norm blew up before the endpoint")
        err.x_last = float(sol.t_events[0][0])
        raise err
    if not sol.success:
        err = StiffnessError(f"integration failed: {sol.message}")
        err.x_last = float(sol.t[-1]) if len(sol.t) else float(x0)
        raise err
    xs = sol.t
    ys = sol.y
    if x_end < x0:
        xs = xs[::-1]
        ys = ys[:, ::-1]
    prof = SolutionProfile(x=xs.copy(), y1=ys[0].copy(), y2=ys[1].copy(), w=ys[2].copy())
    phi_vals = [
        abs(constraint_phi(x, a, b, c))
        for x, a, b, c in zip(prof.x, prof.y1, prof.y2, prof.w)
    ]
    prof.max_abs_phi = float(max(phi_vals))
    return prof


def concatenate_profiles(forward, backward, params=None):
    """Join a forward and a backward segment meeting at the match point."""
    xs = np.concatenate([forward.x, backward.x])
    y1 = np.concatenate([forward.y1, backward.y1])
    y2 = np.concatenate([forward.y2, backward.y2])
    w = np.concatenate([forward.w, backward.w])
    order = np.argsort(xs)
    xs, y1, y2, w = xs[order], y1[order], y2[order], w[order]
    keep = np.concatenate([[True], np.diff(xs) > 0])
    prof = SolutionProfile(
        x=xs[keep], y1=y1[keep], y2=y2[keep], w=w[keep], params=params or {}
    )
    prof.max_abs_phi = max(forward.max_abs_phi, backward.max_abs_phi)
    return prof


def diagnostics(profile, slack=1e-9):
    """Monotonicity, bound and conserved-form checks on a solved profile.

    Violations are reported (counted), never raised.
    """
    d = profile.derived()
    x = profile.x
    y1p, w = d["y1p"], profile.w
    K, phi = d["K"], d["phi"]
    phi0 = profile.params.get("phi0", float(phi[0]))
    om = 1.0 - x * x

    trivial = abs(phi0 - 1.0) < 1e-12

    report = {}
    if trivial:
        report["y1p_positive_violations"] = 0
        report["y2p_sign_violations"] = 0
        report["phi_between_violations"] = 0
        report["K_below_one_violations"] = 0
    else:
        report["y1p_positive_violations"] = int(np.sum(y1p <= -slack))
        sgn = np.sign(1.0 - phi0)
        report["y2p_sign_violations"] = int(np.sum(sgn * w <= -slack))
        lo, hi = min(phi0, 1.0), max(phi0, 1.0)
        report["phi_between_violations"] = int(
            np.sum((phi < lo - slack) | (phi > hi + slack))
        )
        report["K_below_one_violations"] = int(np.sum(K >= 1.0 + slack))

    report["y1p_upper_bound_violations"] = int(
        np.sum(y1p >= 12.0 * x / om + slack)
    )
    combo = curvature_combo(profile.y1, profile.y2)
    report["combo_inequality_violations"] = int(
        np.sum(combo <= x * x * om * om * w * w / 36.0 - slack)
    )

    # M(x) = x^{-1}(1-x^2)^2 y1' must be non-increasing
    M = om * om * y1p / x
    report["M_monotone_violations"] = int(np.sum(np.diff(M) > slack))

    # N(x) = x^{-2}(1-x^2)^3 K^{1/2} y2' satisfies
    # N' = -32 x^{-2}(1-x^2) K^{1/6} phi^{-4/3}(1-phi); checked by
    # centered differences at a loose tolerance
    N = om ** 3 * np.sqrt(K) * w / x ** 2
    Nrhs = -32.0 * om * K ** (1.0 / 6.0) * phi ** (-4.0 / 3.0) * (1.0 - phi) / x ** 2
    if len(x) > 2:
        dN = (N[2:] - N[:-2]) / (x[2:] - x[:-2])
        mid = Nrhs[1:-1]
        scale = np.maximum(np.abs(mid), 1.0)
        rel = np.abs(dN - mid) / scale
        # interior comparison only; FD error is O(grid^2)
        interior = (x[1:-1] > 0.02) & (x[1:-1] < 0.98)
        report["N_identity_max_relerr"] = float(np.max(rel[interior])) if interior.any() else 0.0
    else:
        report["N_identity_max_relerr"] = 0.0

    report["max_abs_Phi"] = float(np.max(np.abs(d["Phi"])))
    report["max_full_residual"] = float(np.max(np.abs(d["residuals"])))
    report["violation_count"] = int(
        sum(v for k, v in report.items() if k.endswith("_violations"))
    )
    return report
