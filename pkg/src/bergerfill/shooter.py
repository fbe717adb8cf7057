"""Two-point solvers for the squashed-sphere filling problem.

Double shooting: the boundary jet is evaluated at x = eps and integrated
forward to the match point, the center jet at x = 1 - eps and integrated
backward; Newton iteration drives the (y1, y2, y2') mismatch at x = 0.5
to zero over the free parameters (K0, a, q).  An independent Chebyshev
collocation solver provides a cross-check on the same problem.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .errors import (
    BranchDomainError,
    ConvergenceFailure,
    DomainError,
    StiffnessError,
)
from .flow import (
    BergerState,
    SolutionProfile,
    concatenate_profiles,
    diagnostics,
    integrate,
    y1prime_algebraic,
)
from .gen_flow import (
    GenBergerBoundaryData,
    GenBergerState,
    eval_gen_jet,
    gen_boundary_jet,
    gen_center_jet,
    integrate_gen,
)
from .jets import (
    BergerBoundaryData,
    berger_boundary_jet,
    berger_center_jet,
    eval_jet,
    min_admissible_K0,
)

MATCH_X = 0.5
DEFAULT_EPS = 1e-4
DEFAULT_ORDER = 8
PENALTY = 1.0e6
CLUSTER_RADIUS = 1e-6
THEOREM_RANGE = (0.25, 4.0)


@dataclass(frozen=True)
class ShootingParams:
    K0: float
    a: float
    q: float

    def as_array(self):
        return np.array([self.K0, self.a, self.q])


@dataclass
class BvpSolution:
    params: ShootingParams
    profile: SolutionProfile
    match_defect: float
    oracle_defect: float | None = None
    phi0: float = 1.0
    diagnostics: dict = field(default_factory=dict)


def _trajectories(phi0, p, eps, order):
    bd = BergerBoundaryData(phi0=phi0, K0=p.K0, a=p.a)
    bj = berger_boundary_jet(bd, order)
    y1, _, y2, d2 = eval_jet(bj, eps)
    fwd = integrate(BergerState(eps, y1, y2, d2), MATCH_X)
    cj = berger_center_jet(p.q, order)
    y1, _, y2, d2 = eval_jet(cj, 1.0 - eps)
    bwd = integrate(BergerState(1.0 - eps, y1, y2, d2), MATCH_X)
    return fwd, bwd


def shooting_residual(phi0, p, eps=DEFAULT_EPS, order=DEFAULT_ORDER):
    """Mismatch (dy1, dy2, dy2') at the match point x = 0.5.

    Parameter values that leave the domain of the flow are encoded as a
    large penalty rather than an exception, keeping Newton's Jacobian
    finite.
    """
    if p.K0 <= 0.0:
        return np.full(3, PENALTY * (1.0 + abs(p.K0)))
    try:
        fwd, bwd = _trajectories(phi0, p, eps, order)
    except BranchDomainError as exc:
        depth = abs(exc.depth) + abs(exc.x - MATCH_X)
        return np.full(3, PENALTY * (1.0 + depth))
    except StiffnessError as exc:
        # grade by how far short of the match point the leg survived, so
        # the penalty region still has downhill structure
        depth = abs(getattr(exc, "x_last", 0.0) - MATCH_X)
        return np.full(3, PENALTY * (1.0 + depth))
    except (DomainError, OverflowError, FloatingPointError):
        return np.full(3, PENALTY)
    res = np.array([
        fwd.y1[-1] - bwd.y1[0],
        fwd.y2[-1] - bwd.y2[0],
        fwd.w[-1] - bwd.w[0],
    ])
    if not np.all(np.isfinite(res)):
        return np.full(3, PENALTY)
    return res


def damped_newton(fun, x0, tol=1e-9, max_iter=100, fd_step=1e-6,
                  max_halvings=20):
    """Newton iteration with forward-difference Jacobian and backtracking.

    Returns (x, residual, converged, iterations); keeps the best iterate.
    """
    x = np.asarray(x0, dtype=float).copy()
    r = fun(x)
    best_x, best_r = x.copy(), r.copy()
    for it in range(max_iter):
        if np.max(np.abs(r)) < tol:
            return x, r, True, it
        m, n = len(r), len(x)
        J = np.empty((m, n))
        for j in range(n):
            h = fd_step * max(1.0, abs(x[j]))
            xp = x.copy()
            xp[j] += h
            J[:, j] = (fun(xp) - r) / h
        try:
            step = np.linalg.solve(J, -r) if m == n else \
                np.linalg.lstsq(J, -r, rcond=None)[0]
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        lam = 1.0
        r_norm = np.linalg.norm(r)
        accepted = False
        for _ in range(max_halvings):
            xt = x + lam * step
            rt = fun(xt)
            if np.linalg.norm(rt) < (1.0 - 1e-4 * lam) * r_norm:
                x, r = xt, rt
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
        if np.linalg.norm(r) < np.linalg.norm(best_r):
            best_x, best_r = x.copy(), r.copy()
    if np.max(np.abs(r)) < tol:
        return x, r, True, max_iter
    return best_x, best_r, False, max_iter


def _warn_range(phi0):
    if not THEOREM_RANGE[0] < phi0 < THEOREM_RANGE[1]:
        import warnings

        warnings.warn(
            f"phi0={phi0} lies outside the uniqueness range (1/4, 4); "
            "results are exploratory",
            stacklevel=3,
        )


def _solve_newton(phi0, guess, tol, eps, order):
    def fun(v):
        return shooting_residual(phi0, ShootingParams(*v), eps, order)

    return damped_newton(fun, guess, tol=tol)


def _continued_guess(phi0, tol, eps, order):
    """Walk phi0 from 1 with adaptive steps; returns a parameter array.

    The matching problem is stiff in the parameters (trajectories blow up
    at the match point away from the solution), so cold starts far from
    phi0 = 1 rarely converge directly.
    """
    history = [(1.0, np.array([1.0, 0.0, 0.0]))]
    current, z = history[-1]
    step = 0.1 if phi0 >= 1.0 else -0.1
    while current != phi0:
        nxt = current + step
        if (step > 0 and nxt >= phi0) or (step < 0 and nxt <= phi0):
            nxt = phi0
        if len(history) >= 2:
            (p0, z0), (p1, z1) = history[-2], history[-1]
            g = z1 + (z1 - z0) * (nxt - p1) / (p1 - p0)
        else:
            g = z
        zi, ri, ok, _ = _solve_newton(nxt, g, tol, eps, order)
        if not ok:
            step *= 0.5
            if abs(step) < 1e-3:
                raise ConvergenceFailure(
                    f"continuation toward phi0={phi0} stalled at {nxt}",
                    best_params=ShootingParams(*zi),
                    best_residual=float(np.max(np.abs(ri))),
                )
            continue
        history.append((nxt, zi))
        z, current = zi, nxt
        step = min(abs(step) * 2.0, 0.2) * (1.0 if phi0 >= 1.0 else -1.0)
    return z


def solve(phi0, guess=None, tol=1e-9, eps=DEFAULT_EPS, order=DEFAULT_ORDER):
    """Solve the two-point problem at squashing phi0 by double shooting.

    With no guess, parameter continuation from the round solution at
    phi0 = 1 supplies the starting point.
    """
    _warn_range(phi0)
    if guess is None:
        z0 = _continued_guess(phi0, tol, eps, order)
    else:
        z0 = guess.as_array()
    x, r, ok, _ = _solve_newton(phi0, z0, tol, eps, order)
    if not ok:
        raise ConvergenceFailure(
            f"shooting did not converge at phi0={phi0}",
            best_params=ShootingParams(*x),
            best_residual=float(np.max(np.abs(r))),
        )
    p = ShootingParams(*x)
    fwd, bwd = _trajectories(phi0, p, eps, order)
    profile = concatenate_profiles(
        fwd, bwd, params={"phi0": phi0, "K0": p.K0, "a": p.a, "q": p.q}
    )
    sol = BvpSolution(
        params=p,
        profile=profile,
        match_defect=float(np.max(np.abs(r))),
        phi0=phi0,
    )
    sol.diagnostics = diagnostics(profile)
    return sol


def continuation_scan(phi_grid, tol=1e-9, eps=DEFAULT_EPS, order=DEFAULT_ORDER):
    """Solve across a grid of phi0 values, stepping outward from 1.

    Guesses use linear extrapolation of (K0, a, q) from the previous two
    solutions on the same side of 1; failures are recorded, not raised.
    """
    grid = sorted(float(v) for v in phi_grid)
    if not grid:
        return []
    upper = [v for v in grid if v >= 1.0]
    lower = [v for v in grid if v < 1.0][::-1]

    rows = {}

    def run_branch(values):
        history = [(1.0, np.array([1.0, 0.0, 0.0]))]
        for v in values:
            if len(history) >= 2:
                (p0, z0), (p1, z1) = history[-2], history[-1]
                if p1 != p0:
                    z = z1 + (z1 - z0) * (v - p1) / (p1 - p0)
                else:
                    z = z1
            else:
                z = history[-1][1]
            row = {"phi0": v, "converged": False, "K0": np.nan,
                   "a": np.nan, "q": np.nan, "match_defect": np.nan,
                   "diagnostics": {}}
            try:
                try:
                    sol = solve(v, ShootingParams(*z), tol=tol, eps=eps,
                                order=order)
                except ConvergenceFailure:
                    # extrapolated guess not good enough: retry with the
                    # adaptive continuation built into solve()
                    sol = solve(v, tol=tol, eps=eps, order=order)
            except ConvergenceFailure as exc:
                row["match_defect"] = exc.best_residual
            else:
                p = sol.params
                row.update(
                    converged=True, K0=p.K0, a=p.a, q=p.q,
                    match_defect=sol.match_defect,
                    diagnostics=sol.diagnostics,
                )
                history.append((v, p.as_array()))
            rows[v] = row

    run_branch(upper)
    run_branch(lower)
    return [rows[v] for v in grid]


def uniqueness_probe(phi0, n_starts=20, spread=0.5, seed=0, tol=1e-8,
                     eps=DEFAULT_EPS, order=DEFAULT_ORDER):
    """Multi-start dispersion test for additional solution branches.

    Launches solve from n_starts Latin-hypercube points in the admissible
    box and clusters the converged parameter triples with max-norm radius
    1e-6.  A report with one cluster corroborates uniqueness; it does not
    certify it.
    """
    if n_starts < 8:
        raise DomainError("n_starts must be >= 8")
    _warn_range(phi0)
    k_min = min_admissible_K0(phi0)
    k_lo = k_min + 0.05 * (1.0 - k_min)
    sampler = qmc.LatinHypercube(d=3, seed=seed)
    u = sampler.random(n_starts)
    starts = np.column_stack([
        k_lo + u[:, 0] * (1.0 - k_lo),
        -spread + 2.0 * spread * u[:, 1],
        -spread + 2.0 * spread * u[:, 2],
    ])

    converged = []
    failures = 0
    for idx in range(n_starts):
        try:
            sol = solve(phi0, ShootingParams(*starts[idx]), tol=tol,
                        eps=eps, order=order)
        except ConvergenceFailure:
            failures += 1
            continue
        converged.append((idx, sol.params.as_array()))

    clusters = []
    for idx, z in converged:
        for cl in clusters:
            if np.max(np.abs(z - cl["center"])) < CLUSTER_RADIUS:
                cl["members"].append(idx)
                cl["points"].append(z)
                break
        else:
            clusters.append({"center": z.copy(), "members": [idx],
                             "points": [z]})
    for cl in clusters:
        pts = np.array(cl["points"])
        cl["K0"], cl["a"], cl["q"] = (float(v) for v in pts.mean(axis=0))
        del cl["points"]
        cl["center"] = [float(v) for v in cl["center"]]
    return {
        "phi0": phi0,
        "seed": seed,
        "n_starts": n_starts,
        "n_converged": len(converged),
        "n_failed": failures,
        "clusters": clusters,
        "n_clusters": len(clusters),
    }


# ---------------------------------------------------------------------------
# collocation oracle
# ---------------------------------------------------------------------------

def _cheb(n):
    """Chebyshev-Lobatto points (descending) and differentiation matrix."""
    if n == 0:
        return np.zeros((1, 1)), np.array([1.0])
    t = np.cos(np.pi * np.arange(n + 1) / n)
    c = np.hstack([2.0, np.ones(n - 1), 2.0]) * (-1.0) ** np.arange(n + 1)
    X = np.tile(t, (n + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return D, t


def _branch_clamped(x, y1, y2, w):
    """y1' branch with the radicand floored at zero (oracle-internal)."""
    om = 1.0 - x * x
    gap = np.exp(-(y1 + 4.0 * y2) / 3.0) * (4.0 * np.exp(y2) - 1.0)
    rad = om * om * (1.0 + x * x * w * w / 36.0) + (4.0 / 3.0) * x * x * gap
    rad = np.maximum(rad, 0.0)
    combo = (3.0 - 4.0 * np.exp(-(y1 + y2) / 3.0)
             + np.exp(-(y1 + 4.0 * y2) / 3.0))
    num = (4.0 / 3.0) * combo - om * om * w * w / 36.0
    return 6.0 * x / om * num / (1.0 + x * x + np.sqrt(rad))


class _Collocation:
    """Square nonlinear system for the global-polynomial discretization."""

    def __init__(self, phi0, degree, grid_size, eps):
        self.phi0 = phi0
        self.degree = degree
        self.eps = eps
        n = grid_size - 1
        Dt, t = _cheb(n)
        lo, hi = eps, 1.0 - eps
        # map descending t in [-1,1] to ascending x in [lo,hi]
        self.x = lo + (hi - lo) * (1.0 - t) / 2.0
        self.D = -2.0 / (hi - lo) * Dt
        self.D2 = self.D @ self.D
        self.m = grid_size

    def pack(self, Y1, Y2, K0, a, q):
        return np.concatenate([Y1, Y2, [K0, a, q]])

    def unpack(self, z):
        m = self.m
        return z[:m], z[m:2 * m], z[2 * m], z[2 * m + 1], z[2 * m + 2]

    def residual(self, z):
        m, x, D, D2 = self.m, self.x, self.D, self.D2
        Y1, Y2, K0, a, q = self.unpack(z)
        if K0 <= 0.0:
            return np.full(2 * m + 3, PENALTY)
        dY1 = D @ Y1
        dY2 = D @ Y2
        ddY2 = D2 @ Y2
        om = 1.0 - x * x
        # evolution equation multiplied by x(1-x^2)^2, interior nodes
        src = 32.0 * np.exp(-(Y1 + Y2) / 3.0) * (np.exp(-Y2) - 1.0)
        r_evo = (
            x * om * om * ddY2
            + 0.5 * x * om * om * dY1 * dY2
            - 2.0 * (1.0 + 2.0 * x * x) * om * dY2
            + x * src
        )[1:-1]
        # first-order branch relation, all nodes but the left endpoint
        r_branch = (dY1 - _branch_clamped(x, Y1, Y2, dY2))[1:]
        # jet closures at both ends
        try:
            bj = berger_boundary_jet(
                BergerBoundaryData(phi0=self.phi0, K0=K0, a=a), self.degree
            )
            cj = berger_center_jet(q, self.degree)
        except DomainError:
            return np.full(2 * m + 3, PENALTY)
        b1, _, b2, bd2 = eval_jet(bj, x[0])
        c1, _, c2, cd2 = eval_jet(cj, x[-1])
        r_bc = np.array([
            Y1[0] - b1, Y2[0] - b2, dY2[0] - bd2,
            Y1[-1] - c1, Y2[-1] - c2, dY2[-1] - cd2,
        ])
        return np.concatenate([r_bc, r_evo, r_branch])


def _collocation_solve_at(phi0, z0, degree, grid_size, eps, tol):
    sys = _Collocation(phi0, degree, grid_size, eps)
    z, r, ok, _ = damped_newton(sys.residual, z0, tol=tol, max_iter=60)
    if not ok:
        raise ConvergenceFailure(
            f"collocation did not converge at phi0={phi0}",
            best_residual=float(np.max(np.abs(r))),
        )
    return sys, z, float(np.max(np.abs(r)))


def collocation_oracle(phi0, degree=DEFAULT_ORDER, grid_size=40,
                       eps=0.02, tol=1e-10):
    """Independent global-collocation solution of the same two-point problem.

    Continuation in phi0 starts from the exact round solution at phi0 = 1
    and never consults the shooting path.
    """
    if degree < 8:
        raise DomainError("degree must be >= 8")
    _warn_range(phi0)
    m = grid_size
    z = np.concatenate([np.zeros(2 * m), [1.0, 0.0, 0.0]])
    current = 1.0
    step = 0.25 if phi0 >= 1.0 else -0.25
    sys = None
    defect = 0.0
    if phi0 == 1.0:
        sys, z, defect = _collocation_solve_at(phi0, z, degree, m, eps, tol)
    while current != phi0:
        nxt = current + step
        if (step > 0 and nxt >= phi0) or (step < 0 and nxt <= phi0):
            nxt = phi0
        try:
            sys, z_new, defect = _collocation_solve_at(
                nxt, z, degree, m, eps, tol
            )
        except ConvergenceFailure:
            step *= 0.5
            if abs(step) < 1e-3:
                raise
            continue
        z, current = z_new, nxt
    Y1, Y2, K0, a, q = sys.unpack(z)
    w = sys.D @ Y2
    profile = SolutionProfile(
        x=sys.x.copy(), y1=Y1.copy(), y2=Y2.copy(), w=w.copy(),
        params={"phi0": phi0, "K0": float(K0), "a": float(a), "q": float(q)},
    )
    return BvpSolution(
        params=ShootingParams(K0=float(K0), a=float(a), q=float(q)),
        profile=profile,
        match_defect=defect,
        phi0=phi0,
    )


# ---------------------------------------------------------------------------
# generalized (three-variable) shooting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenShootingParams:
    K0: float
    a2: float
    a3: float
    q2: float
    q3: float

    def as_array(self):
        return np.array([self.K0, self.a2, self.a3, self.q2, self.q3])


def gen_shooting_residual(phi1_0, phi2_0, p, eps=DEFAULT_EPS,
                          order=DEFAULT_ORDER):
    """Mismatch (dy1, dy2, dy3, dy2', dy3') at x = 0.5 for the 3-variable flow."""
    if p.K0 <= 0.0:
        return np.full(5, PENALTY * (1.0 + abs(p.K0)))
    try:
        bd = GenBergerBoundaryData(phi1_0=phi1_0, phi2_0=phi2_0, K0=p.K0,
                                   a2=p.a2, a3=p.a3)
        bj = gen_boundary_jet(bd, order)
        y1, _, y2, d2, y3, d3 = eval_gen_jet(bj, eps)
        xs_f, yf = integrate_gen(
            GenBergerState(eps, y1, y2, y3, d2, d3), MATCH_X
        )
        cj = gen_center_jet(p.q2, p.q3, order)
        y1, _, y2, d2, y3, d3 = eval_gen_jet(cj, 1.0 - eps)
        xs_b, yb = integrate_gen(
            GenBergerState(1.0 - eps, y1, y2, y3, d2, d3), MATCH_X
        )
    except BranchDomainError as exc:
        depth = abs(exc.depth) + abs(exc.x - MATCH_X)
        return np.full(5, PENALTY * (1.0 + depth))
    except StiffnessError as exc:
        depth = abs(getattr(exc, "x_last", 0.0) - MATCH_X)
        return np.full(5, PENALTY * (1.0 + depth))
    except (DomainError, OverflowError, FloatingPointError):
        return np.full(5, PENALTY)
    res = np.array([
        yf[0, -1] - yb[0, 0],
        yf[1, -1] - yb[1, 0],
        yf[2, -1] - yb[2, 0],
        yf[3, -1] - yb[3, 0],
        yf[4, -1] - yb[4, 0],
    ])
    if not np.all(np.isfinite(res)):
        return np.full(5, PENALTY)
    return res


def gen_solve(phi1_0, phi2_0, guess=None, tol=1e-9, eps=DEFAULT_EPS,
              order=DEFAULT_ORDER):
    """Solve the three-variable two-point problem.

    With no guess, continuation walks phi2_0 from the two-variable slice
    (phi2 = 1, seeded by the Berger solve) out to the requested value.
    """
    if guess is None:
        base = solve(phi1_0, tol=tol, eps=eps, order=order) if phi1_0 != 1.0 \
            else None
        if base is None:
            z = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
        else:
            p = base.params
            z = np.array([p.K0, p.a, 0.0, p.q, 0.0])
        current = 1.0
        step = 0.2 if phi2_0 >= 1.0 else -0.2
        while current != phi2_0:
            nxt = current + step
            if (step > 0 and nxt >= phi2_0) or (step < 0 and nxt <= phi2_0):
                nxt = phi2_0
            zi, ri, ok, _ = damped_newton(
                lambda v: gen_shooting_residual(
                    phi1_0, nxt, GenShootingParams(*v), eps, order
                ),
                z, tol=tol,
            )
            if not ok:
                step *= 0.5
                if abs(step) < 1e-3:
                    raise ConvergenceFailure(
                        f"gen continuation stalled at phi2_0={nxt}",
                        best_params=GenShootingParams(*zi),
                        best_residual=float(np.max(np.abs(ri))),
                    )
                continue
            z, current = zi, nxt
        z_fin, r_fin = z, gen_shooting_residual(
            phi1_0, phi2_0, GenShootingParams(*z), eps, order
        )
    else:
        z_fin, r_fin, ok, _ = damped_newton(
            lambda v: gen_shooting_residual(
                phi1_0, phi2_0, GenShootingParams(*v), eps, order
            ),
            guess.as_array(), tol=tol,
        )
        if not ok:
            raise ConvergenceFailure(
                f"gen shooting did not converge at ({phi1_0}, {phi2_0})",
                best_params=GenShootingParams(*z_fin),
                best_residual=float(np.max(np.abs(r_fin))),
            )
    p = GenShootingParams(*z_fin)
    bd = GenBergerBoundaryData(phi1_0=phi1_0, phi2_0=phi2_0, K0=p.K0,
                               a2=p.a2, a3=p.a3)
    bj = gen_boundary_jet(bd, order)
    y1, _, y2, d2, y3, d3 = eval_gen_jet(bj, eps)
    xs_f, yf = integrate_gen(GenBergerState(eps, y1, y2, y3, d2, d3), MATCH_X)
    cj = gen_center_jet(p.q2, p.q3, order)
    y1, _, y2, d2, y3, d3 = eval_gen_jet(cj, 1.0 - eps)
    xs_b, yb = integrate_gen(
        GenBergerState(1.0 - eps, y1, y2, y3, d2, d3), MATCH_X
    )
    xs = np.concatenate([xs_f, xs_b[1:]])
    ys = np.concatenate([yf, yb[:, 1:]], axis=1)
    return {
        "phi1_0": phi1_0,
        "phi2_0": phi2_0,
        "params": p,
        "match_defect": float(np.max(np.abs(r_fin))),
        "x": xs,
        "y1": ys[0],
        "y2": ys[1],
        "y3": ys[2],
        "w2": ys[3],
        "w3": ys[4],
    }
