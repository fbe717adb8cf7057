"""Command-line front end: solve, scan, probe, curvature, gen-solve,
validate-profile.

Outputs are a profile CSV (full double precision) and a summary JSON with
sorted keys; the timestamp is a single separate field so that repeated
runs with the same configuration and seed are otherwise byte-identical.
"""

import argparse
import csv
import json
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .errors import ConvergenceFailure, DomainError, StiffnessError

OUTPUT_DIR_ENV = "BERGERFILL_OUTPUT_DIR"
EXIT_OK = 0
EXIT_NOCONV = 2
EXIT_INVALID = 3

_CONFIG_KEYS = {
    "solve": {"phi0", "tol", "jet_order", "eps", "output_dir"},
    "scan": {"from", "to", "step", "tol", "jet_order", "eps", "output_dir"},
    "probe": {"phi0", "starts", "seed", "spread", "tol", "jet_order",
              "eps", "output_dir"},
    "curvature": {"input", "plane_samples", "seed", "output_dir"},
    "gen-solve": {"phi1", "phi2", "tol", "jet_order", "eps", "output_dir"},
    "validate-profile": {"input", "threshold", "output_dir"},
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 by default; config/usage problems are
    # validation errors here (status 3), status 2 is reserved for
    # non-convergence
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _fmt(v):
    return format(float(v), ".17g")


def _out_dir(args):
    env = os.environ.get(OUTPUT_DIR_ENV)
    d = env if env else (args.output_dir or ".")
    os.makedirs(d, exist_ok=True)
    return d


def _write_json(path, payload):
    payload = dict(payload)
    payload["timestamp"] = datetime.now(timezone.utc).isoformat()
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _load_config(path, mode, line_hint=True):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")
    if not isinstance(cfg, dict):
        raise DomainError(f"{path}:1: config must be a JSON object")
    allowed = _CONFIG_KEYS[mode] | {"mode"}
    for key in cfg:
        if key not in allowed:
            raise DomainError(f"{path}: unknown config key '{key}'")
    if cfg.get("mode", mode) != mode:
        raise DomainError(f"{path}: config mode '{cfg.get('mode')}' does not "
                          f"match subcommand '{mode}'")
    return cfg


def _merge(args, cfg, names):
    """Config supplies values only where the command line left defaults."""
    for cli_name, cfg_name in names.items():
        if getattr(args, cli_name) is None and cfg_name in cfg:
            setattr(args, cli_name, cfg[cfg_name])


def _profile_rows(profile):
    from .flow import y1prime_algebraic

    d = profile.derived()
    rows = []
    for i, x in enumerate(profile.x):
        res = d["residuals"][i]
        rows.append([
            x, -np.log(x), profile.y1[i], profile.y2[i], profile.w[i],
            d["K"][i], d["phi"][i], d["I1"][i], d["I2"][i], d["Phi"][i],
            res[0], res[1], res[2], res[3],
        ])
    return rows


PROFILE_COLUMNS = ["x", "r", "y1", "y2", "dy2", "K", "phi", "I1", "I2",
                   "Phi", "res1", "res2", "res3", "res4"]


def write_profile_csv(path, profile):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(PROFILE_COLUMNS)
        for row in _profile_rows(profile):
            wr.writerow([_fmt(v) for v in row])
    return path


def read_profile_csv(path):
    from .flow import SolutionProfile

    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        need = {"x", "y1", "y2", "dy2"}
        if rd.fieldnames is None or not need.issubset(rd.fieldnames):
            raise DomainError(f"{path}: profile CSV must contain columns {sorted(need)}")
        cols = {k: [] for k in need}
        for row in rd:
            for k in need:
                cols[k].append(float(row[k]))
    return SolutionProfile(
        x=np.array(cols["x"]), y1=np.array(cols["y1"]),
        y2=np.array(cols["y2"]), w=np.array(cols["dy2"]),
    )


def _diag_payload(diag):
    out = {}
    for k, v in diag.items():
        if isinstance(v, (bool, int)):
            out[k] = int(v)
        else:
            out[k] = float(v)
    return out


def _cmd_solve(args):
    from .shooter import ShootingParams, solve

    guess = None
    if args.guess:
        guess = ShootingParams(*(float(v) for v in args.guess.split(",")))
    sol = solve(args.phi0, guess=guess, tol=args.tol, eps=args.eps,
                order=args.jet_order)
    out = _out_dir(args)
    csv_path = os.path.join(out, f"profile_phi0_{args.phi0:g}.csv")
    write_profile_csv(csv_path, sol.profile)
    summary = {
        "mode": "solve",
        "phi0": args.phi0,
        "K0": sol.params.K0,
        "a": sol.params.a,
        "q": sol.params.q,
        "match_defect": sol.match_defect,
        "diagnostics": _diag_payload(sol.diagnostics),
        "profile_csv": os.path.basename(csv_path),
    }
    path = _write_json(os.path.join(out, "summary.json"), summary)
    print(f"solved phi0={args.phi0}: K0={sol.params.K0:.12g} "
          f"a={sol.params.a:.12g} q={sol.params.q:.12g} -> {path}")
    return EXIT_OK


def _cmd_scan(args):
    from .shooter import continuation_scan

    if args.step <= 0 or args.to < getattr(args, "from"):
        raise DomainError("scan requires step > 0 and to >= from")
    lo = getattr(args, "from")
    n = int(round((args.to - lo) / args.step))
    grid = [lo + i * args.step for i in range(n + 1)]
    for v in grid:
        if v <= 0:
            raise DomainError("phi0 grid must be positive")
    rows = continuation_scan(grid, tol=args.tol, eps=args.eps,
                             order=args.jet_order)
    out = _out_dir(args)
    scan_path = os.path.join(out, "scan.csv")
    with open(scan_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["phi0", "converged", "K0", "a", "q", "match_defect",
                     "violation_count"])
        for row in rows:
            wr.writerow([
                _fmt(row["phi0"]), int(row["converged"]), _fmt(row["K0"]),
                _fmt(row["a"]), _fmt(row["q"]), _fmt(row["match_defect"]),
                row["diagnostics"].get("violation_count", ""),
            ])
    summary = {
        "mode": "scan",
        "grid": grid,
        "n_rows": len(rows),
        "n_converged": sum(1 for r in rows if r["converged"]),
        "rows": [
            {"phi0": r["phi0"], "converged": bool(r["converged"]),
             "K0": None if np.isnan(r["K0"]) else r["K0"],
             "a": None if np.isnan(r["a"]) else r["a"],
             "q": None if np.isnan(r["q"]) else r["q"]}
            for r in rows
        ],
        "scan_csv": os.path.basename(scan_path),
    }
    path = _write_json(os.path.join(out, "summary.json"), summary)
    n_ok = summary["n_converged"]
    print(f"scan: {n_ok}/{len(rows)} converged -> {path}")
    return EXIT_OK if n_ok == len(rows) else EXIT_NOCONV


def _cmd_probe(args):
    from .shooter import uniqueness_probe

    report = uniqueness_probe(args.phi0, n_starts=args.starts,
                              spread=args.spread, seed=args.seed,
                              tol=args.tol, eps=args.eps,
                              order=args.jet_order)
    out = _out_dir(args)
    summary = {"mode": "probe", **report}
    path = _write_json(os.path.join(out, "summary.json"), summary)
    print(f"probe phi0={args.phi0}: {report['n_clusters']} cluster(s), "
          f"{report['n_converged']}/{report['n_starts']} converged -> {path}")
    return EXIT_OK if report["n_converged"] > 0 else EXIT_NOCONV


def _cmd_curvature(args):
    from .curvature import curvature_report

    profile = read_profile_csv(args.input)
    rep = curvature_report(profile, plane_samples=args.plane_samples,
                           seed=args.seed)
    out = _out_dir(args)
    summary = {
        "mode": "curvature",
        "input": os.path.basename(args.input),
        "einstein_residual": rep.einstein_residual,
        "sec_min": rep.sec_min,
        "sec_max": rep.sec_max,
        "flag_nonpositive": rep.flag_nonpositive,
    }
    path = _write_json(os.path.join(out, "summary.json"), summary)
    print(f"curvature: einstein_residual={rep.einstein_residual:.3e} "
          f"sec in [{rep.sec_min:.6f}, {rep.sec_max:.6f}] -> {path}")
    return EXIT_OK


def _cmd_gen_solve(args):
    from .shooter import gen_solve

    res = gen_solve(args.phi1, args.phi2, tol=args.tol, eps=args.eps,
                    order=args.jet_order)
    out = _out_dir(args)
    p = res["params"]
    csv_path = os.path.join(
        out, f"gen_profile_{args.phi1:g}_{args.phi2:g}.csv"
    )
    with open(csv_path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "y1", "y2", "y3", "dy2", "dy3"])
        for i in range(len(res["x"])):
            wr.writerow([_fmt(res[k][i])
                         for k in ("x", "y1", "y2", "y3", "w2", "w3")])
    summary = {
        "mode": "gen-solve",
        "phi1_0": args.phi1,
        "phi2_0": args.phi2,
        "K0": p.K0,
        "a2": p.a2,
        "a3": p.a3,
        "q2": p.q2,
        "q3": p.q3,
        "match_defect": res["match_defect"],
        "profile_csv": os.path.basename(csv_path),
    }
    path = _write_json(os.path.join(out, "summary.json"), summary)
    print(f"gen-solve ({args.phi1}, {args.phi2}): K0={p.K0:.12g} -> {path}")
    return EXIT_OK


def validate_profile(path, threshold=1e-6):
    """Check a user-supplied (x, I1, I2) table against the Einstein system."""
    from scipy.interpolate import CubicSpline

    from .curvature import MetricProfile4D, einstein_residual_4d
    from .flow import full_residuals

    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        need = {"x", "I1", "I2"}
        if rd.fieldnames is None or not need.issubset(rd.fieldnames):
            raise DomainError(f"{path}: table must contain columns x, I1, I2")
        xs, i1s, i2s = [], [], []
        for row in rd:
            try:
                xs.append(float(row["x"]))
                i1s.append(float(row["I1"]))
                i2s.append(float(row["I2"]))
            except (TypeError, ValueError):
                raise DomainError(f"{path}: non-numeric entry in row {len(xs)+2}")
    x = np.array(xs)
    if len(x) < 8 or np.any(np.diff(x) <= 0) or x[0] <= 0 or x[-1] >= 1:
        raise DomainError(f"{path}: need >= 8 rows with strictly increasing "
                          "x in (0,1)")
    I1 = np.array(i1s)
    I2 = np.array(i2s)
    if np.any(I1 <= 0) or np.any(I2 <= 0):
        raise DomainError(f"{path}: eigenvalues must be positive")
    s1 = CubicSpline(x, np.log(I1))
    s2 = CubicSpline(x, np.log(I2))
    # y1 = log K = log(I1 I2^2), y2 = log(I2/I1)
    xi = x[1:-1]
    y1, y1p, y1pp = (s1(xi) + 2.0 * s2(xi), s1(xi, 1) + 2.0 * s2(xi, 1),
                     s1(xi, 2) + 2.0 * s2(xi, 2))
    y2, y2p, y2pp = (s2(xi) - s1(xi), s2(xi, 1) - s1(xi, 1),
                     s2(xi, 2) - s1(xi, 2))
    res = np.array([
        full_residuals(xi[i], y1[i], y1p[i], y1pp[i], y2[i], y2p[i], y2pp[i])
        for i in range(len(xi))
    ])
    max_ode = float(np.max(np.abs(res)))

    r = -np.log(xi)
    f = np.empty((len(xi), 3))
    fp = np.empty_like(f)
    fpp = np.empty_like(f)
    for j, spl in enumerate((s1, s2, s2)):
        if j == 0:
            L, Lx, Lxx = s1(xi), s1(xi, 1), s1(xi, 2)
        else:
            L, Lx, Lxx = s2(xi), s2(xi, 1), s2(xi, 2)
        I = np.exp(L)
        Ir = -xi * I * Lx
        Irr = xi * I * Lx + xi * xi * I * (Lx * Lx + Lxx)
        u = np.sqrt(I)
        ur = Ir / (2.0 * u)
        urr = Irr / (2.0 * u) - Ir * Ir / (4.0 * I * u)
        sh, ch = np.sinh(r), np.cosh(r)
        f[:, j] = sh * u
        fp[:, j] = ch * u + sh * ur
        fpp[:, j] = sh * u + 2.0 * ch * ur + sh * urr
    order = np.argsort(r)
    m = MetricProfile4D(r_grid=r[order], f=f[order], fp=fp[order],
                        fpp=fpp[order])
    max_frame = einstein_residual_4d(m)
    return {
        "rows": len(x),
        "max_ode_residual": max_ode,
        "max_einstein_residual": float(max_frame),
        "threshold": threshold,
        "einstein": bool(max_ode < threshold and max_frame < threshold),
    }


def _cmd_validate(args):
    report = validate_profile(args.input, threshold=args.threshold)
    out = _out_dir(args)
    summary = {"mode": "validate-profile",
               "input": os.path.basename(args.input), **report}
    path = _write_json(os.path.join(out, "summary.json"), summary)
    print(f"validate-profile: einstein={report['einstein']} "
          f"(ode {report['max_ode_residual']:.3e}, frame "
          f"{report['max_einstein_residual']:.3e}) -> {path}")
    return EXIT_OK


def build_parser():
    p = _Parser(prog="bergerfill",
                description="Einstein fillings of squashed three-spheres")
    sub = p.add_subparsers(dest="mode", required=True)

    def common(sp):
        sp.add_argument("--config", default=None,
                        help="JSON config file (unknown keys are errors)")
        sp.add_argument("--output-dir", default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--jet-order", type=int, default=None)
        sp.add_argument("--eps", type=float, default=None)

    sp = sub.add_parser("solve", parents=[], help="solve at one phi0")
    sp.add_argument("--phi0", type=float, default=None)
    sp.add_argument("--guess", default=None,
                    help="comma-separated K0,a,q starting point")
    common(sp)
    sp.set_defaults(func=_cmd_solve)

    sp = sub.add_parser("scan", help="continuation scan over a phi0 grid")
    sp.add_argument("--from", dest="from", type=float, default=None)
    sp.add_argument("--to", type=float, default=None)
    sp.add_argument("--step", type=float, default=None)
    common(sp)
    sp.set_defaults(func=_cmd_scan)

    sp = sub.add_parser("probe", help="multi-start uniqueness probe")
    sp.add_argument("--phi0", type=float, default=None)
    sp.add_argument("--starts", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--spread", type=float, default=None)
    common(sp)
    sp.set_defaults(func=_cmd_probe)

    sp = sub.add_parser("curvature", help="curvature report for a profile CSV")
    sp.add_argument("--input", required=False, default=None)
    sp.add_argument("--plane-samples", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--config", default=None)
    sp.add_argument("--output-dir", default=None)
    sp.set_defaults(func=_cmd_curvature)

    sp = sub.add_parser("gen-solve", help="three-variable solve")
    sp.add_argument("--phi1", type=float, default=None)
    sp.add_argument("--phi2", type=float, default=None)
    common(sp)
    sp.set_defaults(func=_cmd_gen_solve)

    sp = sub.add_parser("validate-profile",
                        help="check an (x, I1, I2) table for the Einstein "
                             "condition")
    sp.add_argument("input", nargs="?", default=None)
    sp.add_argument("--threshold", type=float, default=None)
    sp.add_argument("--config", default=None)
    sp.add_argument("--output-dir", default=None)
    sp.set_defaults(func=_cmd_validate)
    return p


_DEFAULTS = {
    "tol": 1e-9,
    "jet_order": 8,
    "eps": 1e-4,
    "starts": 20,
    "seed": 0,
    "spread": 0.5,
    "plane_samples": 200,
    "threshold": 1e-6,
}

_CFG_MAP = {
    "solve": {"phi0": "phi0", "tol": "tol", "jet_order": "jet_order",
              "eps": "eps", "output_dir": "output_dir"},
    "scan": {"from": "from", "to": "to", "step": "step", "tol": "tol",
             "jet_order": "jet_order", "eps": "eps",
             "output_dir": "output_dir"},
    "probe": {"phi0": "phi0", "starts": "starts", "seed": "seed",
              "spread": "spread", "tol": "tol", "jet_order": "jet_order",
              "eps": "eps", "output_dir": "output_dir"},
    "curvature": {"input": "input", "plane_samples": "plane_samples",
                  "seed": "seed", "output_dir": "output_dir"},
    "gen-solve": {"phi1": "phi1", "phi2": "phi2", "tol": "tol",
                  "jet_order": "jet_order", "eps": "eps",
                  "output_dir": "output_dir"},
    "validate-profile": {"input": "input", "threshold": "threshold",
                         "output_dir": "output_dir"},
}

_REQUIRED = {
    "solve": ["phi0"],
    "scan": ["from", "to", "step"],
    "probe": ["phi0"],
    "curvature": ["input"],
    "gen-solve": ["phi1", "phi2"],
    "validate-profile": ["input"],
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            cfg = _load_config(args.config, args.mode)
            _merge(args, cfg, _CFG_MAP[args.mode])
        for name in _REQUIRED[args.mode]:
            if getattr(args, name) is None:
                raise DomainError(f"missing required option '{name}' for "
                                  f"mode {args.mode}")
        for name, default in _DEFAULTS.items():
            if hasattr(args, name) and getattr(args, name) is None:
                setattr(args, name, default)
        for name in ("tol", "eps", "threshold"):
            if getattr(args, name, 1.0) <= 0:
                raise DomainError(f"'{name}' must be positive")
        return args.func(args)
    except (DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceFailure, StiffnessError) as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NOCONV


if __name__ == "__main__":
    sys.exit(main())
