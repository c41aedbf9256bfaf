"""Command-line front end.

Subcommands:
  kernels    point evaluation of the boundary kernel constant (JSON to stdout)
  solve      elliptic Dirichlet solve driven by a TOML/JSON config
  parabolic  implicit-Euler parabolic solve driven by a config
  mc         killed-path Monte Carlo estimates driven by a config
  verify     run a named verification campaign (CSV + JSON artifacts)
  report     render campaign artifacts as a summary table

The default output directory is taken from STABLELAB_OUT (else ./out).
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .geometry import Disk, HalfLine, Interval, Square
from .harness import default_out_dir
from .kernels import K_alpha_beta, kernel_sign, pv_kernel_oracle
from .levy import LevyFamily, SpectralMeasure, axis_measure, measure_from_json
from .norms import WeightedNormSpec, estimate_ratio, parabolic_estimate_ratio, weighted_Lp
from .operators import StableOperator
from .solve import (
    EllipticProblem,
    ParabolicProblem,
    boundary_exponent_fit,
    bump,
    solve_elliptic,
    solve_parabolic,
)
from .stable_mc import PathConfig, elliptic_representation


def _read_table(path):
    p = Path(path)
    if not p.exists():
        raise SystemExit(f"config file not found: {path}")
    if p.suffix == ".json":
        return json.loads(p.read_text())
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(p, "rb") as fh:
        return tomllib.load(fh)


def _measure_from_table(tab):
    alpha = float(tab["alpha"])
    dim = int(tab.get("dim", 1))
    if "atoms" in tab:
        return measure_from_json(json.dumps({
            "alpha": alpha, "dim": dim, "atoms": tab["atoms"],
            "density": tab.get("density", {"kind": "none"}),
        }))
    if "axis_weights" in tab:
        return axis_measure(alpha, dim, tab["axis_weights"])
    return axis_measure(alpha, dim)


def _domain_from_table(tab):
    kind = tab.get("kind", "interval")
    if kind == "interval":
        return Interval(float(tab.get("a", -1.0)), float(tab.get("b", 1.0)))
    if kind == "square":
        return Square(float(tab.get("side", 1.0)))
    if kind == "disk":
        return Disk(float(tab.get("radius", 1.0)))
    if kind == "halfline":
        return HalfLine()
    raise SystemExit(f"unknown domain kind {kind!r}")


def _f_from_table(tab, domain):
    """Symbolic right-hand-side presets: const, power (of the distance), bump."""
    preset = tab.get("preset", "const")
    value = float(tab.get("value", -1.0))
    if preset == "const":
        if domain.dim == 1:
            return lambda x: value * np.ones_like(np.asarray(x, dtype=float))
        return lambda X, Y: value * np.ones_like(X)
    if preset == "power":
        e = float(tab.get("exponent", -0.5))
        if domain.dim == 1:
            return lambda x: value * domain.dist(x) ** e
        return lambda X, Y: value * domain.dist(np.stack([X, Y], axis=-1)) ** e
    if preset == "bump":
        a, b = float(tab.get("a", 0.25)), float(tab.get("b", 0.75))
        g = bump(a, b)
        if domain.dim == 1:
            return lambda x: value * g(x)
        return lambda X, Y: value * g(X) * g(Y)
    raise SystemExit(f"unknown f preset {preset!r}")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(harness._fmt(v) for v in r))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _solution_rows(u):
    if u.domain.dim == 1:
        d = u.dist_nodes()
        return (["x", "dist", "u"],
                [(float(x), float(dd), float(v))
                 for x, dd, v in zip(u.nodes, d, u.values)])
    xn, yn = u.nodes
    d = u.dist_nodes()
    rows = []
    for i, x in enumerate(xn):
        for j, y in enumerate(yn):
            rows.append((float(x), float(y), float(d[i, j]), float(u.values[i, j])))
    return ["x", "y", "dist", "u"], rows


def cmd_kernels(args):
    out = {
        "alpha": args.alpha,
        "beta": args.beta,
        "normalization": args.normalization,
        "closed_form": K_alpha_beta(args.alpha, args.beta, args.normalization),
        "sign": kernel_sign(args.alpha, args.beta).name,
    }
    if args.oracle:
        out["oracle"] = pv_kernel_oracle(args.alpha, args.beta,
                                         normalization=args.normalization)
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def cmd_solve(args):
    cfg = _read_table(args.config)
    domain = _domain_from_table(cfg.get("domain", {}))
    if domain.kind not in ("interval", "square"):
        raise SystemExit("solve supports interval and square domains")
    measure = _measure_from_table(cfg["measure"])
    normalization = cfg["measure"].get("normalization", "raw")
    n = int(cfg.get("grid", {}).get("n", 512))
    f = _f_from_table(cfg.get("f", {}), domain)
    op = StableOperator(measure, normalization=normalization)
    u = solve_elliptic(EllipticProblem.build(op, domain, n, f))
    out_dir = Path(args.out or default_out_dir())
    out_dir.mkdir(parents=True, exist_ok=True)
    header, rows = _solution_rows(u)
    _write_csv(out_dir / "solve.csv", header, rows)
    est = cfg.get("estimate", {})
    norm_rows = []
    fv = (f(u.nodes) if domain.dim == 1
          else f(*np.meshgrid(*u.nodes, indexing="ij")))
    for p in [float(q) for q in est.get("ps", [2.0])]:
        for theta in [float(t) for t in est.get("thetas", [domain.dim - 1.0 + p / 2.0])]:
            spec = WeightedNormSpec(p, theta, 0.0, domain)
            row = {"p": p, "theta": theta, "u_norm": weighted_Lp(u, spec)}
            if domain.dim == 1:
                row["ratio"] = estimate_ratio(u, fv, p, theta, measure.alpha, domain,
                                              allow_outside_window=True)
            norm_rows.append(row)
    summary = {"domain": domain.kind, "n": n, "normalization": normalization,
               "norms": norm_rows, "sup_u": float(np.max(np.abs(u.values))),
               "csv": str(out_dir / "solve.csv")}
    try:
        fit = boundary_exponent_fit(u, domain)
        summary["boundary_fit"] = {k: fit[k] for k in ("slope", "stderr", "n_points")}
    except ValueError as e:
        summary["boundary_fit"] = {"error": str(e)}
    _write_json(out_dir / "solve.json", summary)
    print(f"wrote {out_dir / 'solve.csv'} and {out_dir / 'solve.json'}")
    return 0


def _default_envelope(pieces):
    base = pieces[0]
    w = base.weights.copy()
    for piece in pieces[1:]:
        for i, d in enumerate(base.directions):
            j = int(np.argmin(np.linalg.norm(piece.directions - d, axis=1)))
            w[i] = min(w[i], piece.weights[j])
    return SpectralMeasure(base.alpha, base.dim, base.directions.copy(), w)


def cmd_parabolic(args):
    cfg = _read_table(args.config)
    domain = _domain_from_table(cfg.get("domain", {}))
    if domain.kind not in ("interval", "square"):
        raise SystemExit("parabolic supports interval and square domains")
    time_tab = cfg.get("time", {})
    T = float(time_tab.get("T", 1.0))
    dt = float(time_tab.get("dt", T / 16.0))
    pieces = [_measure_from_table(cfg["measure"])]
    breakpoints = [0.0, T]
    if "measure_b" in cfg:
        switch = float(time_tab.get("switch", T / 2.0))
        pieces.append(_measure_from_table(cfg["measure_b"]))
        breakpoints = [0.0, switch, T]
    envelope = (_measure_from_table(cfg["envelope"]) if "envelope" in cfg
                else _default_envelope(pieces))
    family = LevyFamily(breakpoints, pieces, envelope)
    normalization = cfg["measure"].get("normalization", "raw")
    n = int(cfg.get("grid", {}).get("n", 32))
    f_space = _f_from_table(cfg.get("f", {}), domain)
    f = lambda t, *xy: f_space(*xy)
    P = ParabolicProblem(family, domain, n, f, None, T, dt, normalization)
    sol = solve_parabolic(P)
    out_dir = Path(args.out or default_out_dir())
    out_dir.mkdir(parents=True, exist_ok=True)
    header, rows = _solution_rows(sol.snapshots[-1])
    _write_csv(out_dir / "parabolic.csv", header, rows)
    est = cfg.get("estimate", {})
    ratio_rows = []
    for p in [float(q) for q in est.get("ps", [2.0])]:
        for theta in [float(t) for t in est.get("thetas", [float(domain.dim)])]:
            rep = parabolic_estimate_ratio(sol.snapshots[1:], sol.f_snapshots,
                                           sol.snapshots[0], dt, p, theta,
                                           family.alpha)
            ratio_rows.append({"p": p, "theta": theta, **rep})
    summary = {
        "domain": domain.kind, "n": n, "T": T, "dt": dt,
        "pieces": len(pieces),
        "sup_u": [float(np.max(np.abs(s.values))) for s in sol.snapshots],
        "ratios": ratio_rows,
        "csv": str(out_dir / "parabolic.csv"),
    }
    _write_json(out_dir / "parabolic.json", summary)
    print(f"wrote {out_dir / 'parabolic.csv'} and {out_dir / 'parabolic.json'}")
    return 0


def cmd_mc(args):
    cfg = _read_table(args.config)
    domain = _domain_from_table(cfg.get("domain", {}))
    measure = _measure_from_table(cfg["measure"])
    normalization = cfg["measure"].get("normalization", "raw")
    mc_tab = cfg.get("mc", {})
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    pc = PathConfig(measure, float(mc_tab.get("dt", 1e-3)), seed,
                    int(mc_tab.get("n_paths", 10_000)), domain, normalization)
    f = _f_from_table(cfg.get("f", {}), domain)
    xs = mc_tab.get("xs", [0.0])
    t_max = float(mc_tab.get("t_max", 50.0))
    det = None
    if "reference" in cfg and domain.kind in ("interval", "square"):
        n_det = int(cfg["reference"].get("n", 1023))
        op = StableOperator(measure, normalization=normalization)
        det = solve_elliptic(EllipticProblem.build(op, domain, n_det, f))
    rows = []
    for x in xs:
        rep = elliptic_representation(pc, f, x, t_max=t_max)
        row = [x if domain.dim == 1 else str(x), rep["estimate"], rep["stderr"],
               rep["estimate"] - 1.96 * rep["stderr"],
               rep["estimate"] + 1.96 * rep["stderr"],
               rep["kappa_mean"], rep["kappa_sq_mean"], rep["truncated_fraction"]]
        if det is not None and domain.dim == 1:
            i = int(round((float(x) - domain.a) / det.h)) - 1
            i = min(max(i, 0), len(det.values) - 1)
            row += [float(det.values[i]), abs(rep["estimate"] - float(det.values[i]))]
        rows.append(row)
    header = ["x", "estimate", "stderr", "ci95_lo", "ci95_hi",
              "kappa_mean", "kappa_sq_mean", "truncated_fraction"]
    if det is not None and domain.dim == 1:
        header += ["deterministic", "abs_diff"]
    out_dir = Path(args.out or default_out_dir())
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(out_dir / "mc.csv", header, rows)
    _write_json(out_dir / "mc.json", {
        "seed": seed, "n_paths": pc.n_paths, "dt": pc.dt,
        "normalization": normalization, "t_max": t_max,
        "csv": str(out_dir / "mc.csv"),
    })
    print(f"wrote {out_dir / 'mc.csv'} and {out_dir / 'mc.json'}")
    return 0


def _find_campaign_config(campaign):
    name = campaign.replace("-", "_") + ".toml"
    for root in (Path.cwd(), Path(__file__).resolve().parents[2]):
        cand = root / "configs" / name
        if cand.exists():
            return cand
    raise SystemExit(
        f"no config given and configs/{name} not found; pass --config"
    )


def cmd_verify(args):
    path = args.config or _find_campaign_config(args.campaign)
    cfg = harness.load_config(path)
    if cfg.campaign != args.campaign:
        raise SystemExit(
            f"config {path} declares campaign {cfg.campaign!r}, not {args.campaign!r}"
        )
    code = harness.run(cfg, out=args.out, jobs=args.jobs, seed=args.seed)
    out_dir = args.out or cfg.out or default_out_dir()
    text, _ = harness.report([Path(out_dir) / f"{cfg.campaign}.csv"])
    sys.stdout.write(text)
    return code


def cmd_report(args):
    paths = args.paths or [default_out_dir()]
    text, code = harness.report(paths)
    sys.stdout.write(text)
    return code


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="stablelab",
        description="numerical laboratory for stable nonlocal Dirichlet problems",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    k = sub.add_parser("kernels", help="evaluate the boundary kernel constant")
    k.add_argument("--alpha", type=float, required=True)
    k.add_argument("--beta", type=float, required=True)
    k.add_argument("--oracle", action="store_true",
                   help="also run the quadrature oracle")
    k.add_argument("--normalization", choices=("unit", "raw"), default="unit")
    k.set_defaults(fn=cmd_kernels)

    s = sub.add_parser("solve", help="elliptic Dirichlet solve from a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_solve)

    pb = sub.add_parser("parabolic", help="parabolic solve from a config")
    pb.add_argument("--config", required=True)
    pb.add_argument("--out")
    pb.set_defaults(fn=cmd_parabolic)

    m = sub.add_parser("mc", help="killed-path Monte Carlo from a config")
    m.add_argument("--config", required=True)
    m.add_argument("--out")
    m.add_argument("--seed", type=int)
    m.set_defaults(fn=cmd_mc)

    v = sub.add_parser("verify", help="run a verification campaign")
    v.add_argument("campaign", choices=harness.CAMPAIGNS)
    v.add_argument("--config")
    v.add_argument("--out")
    v.add_argument("--seed", type=int)
    v.add_argument("--jobs", type=int, default=1)
    v.set_defaults(fn=cmd_verify)

    r = sub.add_parser("report", help="summarize campaign artifacts")
    r.add_argument("paths", nargs="*")
    r.set_defaults(fn=cmd_report)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
