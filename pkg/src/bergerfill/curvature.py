"""Curvature of the filled-in 4-metric g = dr^2 + sum_i f_i(r)^2 sigma_i^2.

All tensors are computed in the orthonormal frame {e_0 = d/dr,
e_i = Y_i / f_i}; there the frame brackets close on the structure
constants and the connection follows from the Koszul formula.  Einstein
normalization here is Ric(g) = -3 g.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .invariant_geometry import _levi_civita

_EPS3 = _levi_civita()


@dataclass
class MetricProfile4D:
    """Warping functions f_i(r) = sinh(r) sqrt(I_i(e^(-r))) with derivatives."""

    r_grid: np.ndarray
    f: np.ndarray      # shape (n, 3)
    fp: np.ndarray     # df/dr
    fpp: np.ndarray    # d^2f/dr^2
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.r_grid) <= 0):
            raise DomainError("r_grid must be strictly increasing")
        if np.any(self.f <= 0):
            raise DomainError("warping functions must be positive")


@dataclass(frozen=True)
class CurvatureReport:
    einstein_residual: float
    sec_min: float
    sec_max: float
    flag_nonpositive: bool


def _eigenvalue_exponents():
    """I_i = exp(c1 y1 + c2 y2) with (c1, c2) per eigenvalue (I3 = I2)."""
    return ((1.0 / 3.0, -2.0 / 3.0),
            (1.0 / 3.0, 1.0 / 3.0),
            (1.0 / 3.0, 1.0 / 3.0))


def assemble(profile):
    """Build the 4-metric warping data from a solved two-variable profile.

    First derivatives come from the state itself (w and the algebraic y1'
    branch, chain-ruled to r).  Second derivatives are spline derivatives
    of those first-derivative samples: deriving them from the evolution
    equations instead would make the Einstein residual vanish identically
    for any state, killing its value as a check.
    """
    from scipy.interpolate import CubicSpline

    from .flow import y1prime_algebraic

    x = profile.x
    r = -np.log(x)
    n = len(x)
    if n < 4:
        raise DomainError("profile too short to differentiate")
    f = np.empty((n, 3))
    fp = np.empty((n, 3))
    fpp = np.empty((n, 3))
    d1_arr = np.array([
        y1prime_algebraic(x[i], profile.y1[i], profile.y2[i], profile.w[i])
        for i in range(n)
    ])
    dd1_arr = CubicSpline(x, d1_arr)(x, 1)
    dw_arr = CubicSpline(x, profile.w)(x, 1)
    for i in range(n):
        xi, y1, y2, w = x[i], profile.y1[i], profile.y2[i], profile.w[i]
        d1 = d1_arr[i]
        dd1 = dd1_arr[i]
        dw = dw_arr[i]
        sh, ch = np.sinh(r[i]), np.cosh(r[i])
        for j, (c1, c2) in enumerate(_eigenvalue_exponents()):
            I = np.exp(c1 * y1 + c2 * y2)
            lx = c1 * d1 + c2 * w          # (log I)'
            lxx = c1 * dd1 + c2 * dw       # (log I)''
            Ix = I * lx
            Ixx = I * (lx * lx + lxx)
            Ir = -xi * Ix
            Irr = xi * Ix + xi * xi * Ixx
            u = np.sqrt(I)
            ur = Ir / (2.0 * u)
            urr = Irr / (2.0 * u) - Ir * Ir / (4.0 * I * u)
            f[i, j] = sh * u
            fp[i, j] = ch * u + sh * ur
            fpp[i, j] = sh * u + 2.0 * ch * ur + sh * urr
    order = np.argsort(r)
    return MetricProfile4D(
        r_grid=r[order], f=f[order], fp=fp[order], fpp=fpp[order],
        meta=dict(profile.params),
    )


def _structure(f, fp):
    """Frame bracket coefficients c_ab^c and their r-derivatives' pieces."""
    c = np.zeros((4, 4, 4))
    for i in range(3):
        c[0, i + 1, i + 1] = -fp[i] / f[i]
        c[i + 1, 0, i + 1] = fp[i] / f[i]
    for i in range(3):
        for j in range(3):
            for k in range(3):
                if _EPS3[i, j, k] != 0.0:
                    c[i + 1, j + 1, k + 1] = (
                        2.0 * _EPS3[i, j, k] * f[k] / (f[i] * f[j])
                    )
    return c


def _structure_prime(f, fp, fpp):
    cp = np.zeros((4, 4, 4))
    for i in range(3):
        d = fpp[i] / f[i] - (fp[i] / f[i]) ** 2
        cp[0, i + 1, i + 1] = -d
        cp[i + 1, 0, i + 1] = d
    for i in range(3):
        for j in range(3):
            for k in range(3):
                if _EPS3[i, j, k] != 0.0:
                    val = f[k] / (f[i] * f[j])
                    dval = val * (fp[k] / f[k] - fp[i] / f[i] - fp[j] / f[j])
                    cp[i + 1, j + 1, k + 1] = 2.0 * _EPS3[i, j, k] * dval
    return cp


def _gamma_from_c(c):
    # orthonormal frame: Gamma_ab^c = (c_ab^c - c_bc^a + c_ca^b) / 2
    # note transpose(2,0,1)[a,b,c] = c_bc^a and transpose(1,2,0)[a,b,c] = c_ca^b
    return 0.5 * (c - np.transpose(c, (2, 0, 1)) + np.transpose(c, (1, 2, 0)))


def riemann_at(f, fp, fpp):
    """Frame components R_abcd = g(R(e_a,e_b)e_c, e_d) at one grid point."""
    c = _structure(f, fp)
    G = _gamma_from_c(c)
    Gp = _gamma_from_c(_structure_prime(f, fp, fpp))
    R = np.zeros((4, 4, 4, 4))
    # e_a(Gamma_bc^d) is nonzero only for a = 0 (radial direction)
    R[0] += Gp
    R[:, 0] -= Gp
    R += np.einsum("aed,bce->abcd", G, G)
    R -= np.einsum("bed,ace->abcd", G, G)
    R -= np.einsum("abe,ecd->abcd", c, G)
    return R


def ricci_at(f, fp, fpp):
    R = riemann_at(f, fp, fpp)
    return np.einsum("abca->bc", R)


def einstein_residual_4d(m):
    """Sup over the grid of the frame-component max of Ric(g) + 3 g."""
    worst = 0.0
    for i in range(len(m.r_grid)):
        ric = ricci_at(m.f[i], m.fp[i], m.fpp[i])
        worst = max(worst, float(np.max(np.abs(ric + 3.0 * np.eye(4)))))
    return worst


def sectional(f, fp, fpp, u, v):
    """Sectional curvature of span(u, v) (orthonormalized internally)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u = u / np.linalg.norm(u)
    v = v - np.dot(u, v) * u
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        raise DomainError("plane vectors are parallel")
    v = v / nv
    R = riemann_at(f, fp, fpp)
    return float(np.einsum("abcd,a,b,c,d->", R, u, v, v, u))


def sectional_range(m, plane_samples=200, seed=0):
    """Sampled extremes of the sectional curvature.

    Frame 2-planes at every grid point, plus plane_samples random planes
    at seeded random grid points; the result is a sampled range, not a
    certified optimum over the Grassmannian.
    """
    if plane_samples < 100:
        raise DomainError("plane_samples must be >= 100")
    sec_min, sec_max = np.inf, -np.inf
    n = len(m.r_grid)
    basis = np.eye(4)
    for i in range(n):
        R = riemann_at(m.f[i], m.fp[i], m.fpp[i])
        for a in range(4):
            for b in range(a + 1, 4):
                k = float(R[a, b, b, a])
                sec_min = min(sec_min, k)
                sec_max = max(sec_max, k)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=plane_samples)
    for i in idx:
        u = rng.normal(size=4)
        v = rng.normal(size=4)
        k = sectional(m.f[i], m.fp[i], m.fpp[i], u, v)
        sec_min = min(sec_min, k)
        sec_max = max(sec_max, k)
    return float(sec_min), float(sec_max)


def curvature_report(profile, plane_samples=200, seed=0):
    """Full curvature check of a solved profile."""
    m = assemble(profile)
    res = einstein_residual_4d(m)
    lo, hi = sectional_range(m, plane_samples=plane_samples, seed=seed)
    return CurvatureReport(
        einstein_residual=res,
        sec_min=lo,
        sec_max=hi,
        flag_nonpositive=bool(hi <= 0.0),
    )


def hyperbolic_profile(n=200, eps=1e-4):
    """The round solution sampled like a solved profile (for self-checks)."""
    from .flow import SolutionProfile

    x = np.linspace(eps, 1.0 - eps, n)
    z = np.zeros(n)
    return SolutionProfile(x=x, y1=z.copy(), y2=z.copy(), w=z.copy(),
                           params={"phi0": 1.0, "K0": 1.0, "a": 0.0, "q": 0.0})
