"""Command-line front end.

Subcommands: ``mesh``, ``spectrum``, ``solve``, ``nonlinear``, ``verify``,
``convergence``.  Every report embeds the exact run configuration so a run
can be replayed; identical command line + seed gives byte-identical output
in single-threaded mode.

Exit codes: 0 all gating checks pass, 1 usage error, 2 solver failure,
3 theorem-check failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import mesh as meshmod
from . import nonlinear, spectral, verify
from .errors import ConvexLabError
from .mesh import SimplicialMesh, dumps_17g

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_CHECK = 3


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _set_threads(n: int):
    os.environ["CONVEXLAB_THREADS"] = str(n)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(n)
    except Exception:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _add_domain_flags(p):
    p.add_argument("--domain", required=True,
                   choices=["ball", "ellipsoid", "cap", "torus", "support"])
    p.add_argument("--dim", type=int, default=3, help="intrinsic dimension (ball, cap)")
    p.add_argument("--refine", type=int, default=2, help="refinement level")
    p.add_argument("--radius", type=float, default=1.0, help="ball radius")
    p.add_argument("--axes", default="0.9,0.85,0.82",
                   help="ellipsoid semi-axes, comma separated")
    p.add_argument("--cap-radius", type=float, default=1.0,
                   help="geodesic radius of the spherical cap")
    p.add_argument("--length", type=float, default=5.0, help="solid torus length L")
    p.add_argument("--coeffs", default="{}",
                   help='support coefficients as JSON, e.g. \'{"2,0": 0.05}\'')
    p.add_argument("--h0", type=float, default=1.0, help="support function constant term")


def _build_mesh(args) -> SimplicialMesh:
    if args.domain == "ball":
        return meshmod.unit_ball(args.dim, args.refine, radius=args.radius)
    if args.domain == "ellipsoid":
        axes = [float(t) for t in args.axes.split(",")]
        return meshmod.ellipsoid(axes, args.refine)
    if args.domain == "cap":
        return meshmod.spherical_cap(args.dim, args.cap_radius, args.refine)
    if args.domain == "torus":
        return meshmod.solid_torus(args.length, args.refine)
    coeffs = {tuple(int(t) for t in k.split(",")): float(v)
              for k, v in json.loads(args.coeffs).items()}
    return meshmod.support_body(coeffs, args.refine, h0=args.h0)


def _load_mesh(path: str) -> SimplicialMesh:
    with open(path) as fh:
        return SimplicialMesh.from_json(fh.read())


def _write(out, text: str):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _wrap(config: dict, result_json: str) -> str:
    return dumps_17g({"config": config, "result": json.loads(result_json)})


def build_parser() -> _Parser:
    top = _Parser(prog="convexlab", description=__doc__.splitlines()[0])
    top.add_argument("--threads", type=int,
                     default=int(os.environ.get("CONVEXLAB_THREADS", "1")))
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="generate a test-domain mesh")
    _add_domain_flags(p)
    p.add_argument("--out", help="output mesh JSON path")

    p = sub.add_parser("spectrum", help="Steklov or boundary Laplacian spectrum")
    p.add_argument("mesh", help="mesh JSON file")
    p.add_argument("--which", choices=["steklov", "boundary-laplacian"],
                   default="steklov")
    p.add_argument("-k", type=int, default=8, help="number of nonzero eigenvalues")
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("solve", help="semilinear boundary problem (Newton)")
    p.add_argument("mesh")
    p.add_argument("--q", type=float, default=3.0,
                   help="boundary exponent (3D power form)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--start", choices=["constant", "random"], default="constant")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")

    p = sub.add_parser("nonlinear", help="multi-start trace-quotient minimization")
    p.add_argument("mesh")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="run a verification suite on a mesh")
    p.add_argument("mesh")
    p.add_argument("--suite", default="all",
                   choices=["all", "spectral", "inequalities", "topology", "nonlinear"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"], default="json")

    p = sub.add_parser("convergence", help="refinement study of one quantity")
    _add_domain_flags(p)
    p.add_argument("--levels", default="1,2,3", help="comma-separated refinement levels")
    p.add_argument("--quantity", required=True,
                   choices=["volume", "boundary-area", "steklov1", "constant-energy"])
    p.add_argument("--out")
    return top


# -- convergence -----------------------------------------------------------


def _unit_ball_volume(n: int, r: float) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r ** n


def _analytic_value(args, quantity: str) -> float:
    if quantity == "constant-energy":
        return 0.0
    if args.domain != "ball":
        raise _Usage(f"analytic reference for {quantity!r} needs --domain ball")
    n, r = args.dim, args.radius
    if quantity == "volume":
        return _unit_ball_volume(n, r)
    if quantity == "boundary-area":
        return n * _unit_ball_volume(n, r) / r
    return 1.0 / r  # steklov1


def _measured_value(m: SimplicialMesh, quantity: str) -> float:
    if quantity == "volume":
        return meshmod.measure(m)["volume"]
    if quantity == "boundary-area":
        return meshmod.measure(m)["boundary_area"]
    if quantity == "steklov1":
        return float(spectral.steklov_spectrum(m, 1).eigenvalues[1])
    from .fem import DtNOperator

    S = DtNOperator(m).dense()
    ones = np.ones(S.shape[0])
    return float(ones @ S @ ones)


def convergence_table(args) -> dict:
    levels = sorted(int(t) for t in args.levels.split(","))
    if len(levels) < 2:
        raise _Usage("convergence needs at least two levels")
    exact = _analytic_value(args, args.quantity)
    rows = []
    for lvl in levels:
        a = argparse.Namespace(**vars(args))
        a.refine = lvl
        m = _build_mesh(a)
        val = _measured_value(m, args.quantity)
        rows.append({"level": lvl, "h": m.mesh_size(), "value": val,
                     "error": abs(val - exact), "observed_order": None})
    for prev, row in zip(rows, rows[1:]):
        if row["error"] > 0 and prev["error"] > 0:
            row["observed_order"] = math.log2(prev["error"] / row["error"])
    return {"quantity": args.quantity, "analytic": exact, "rows": rows}


# -- dispatch --------------------------------------------------------------


def _config_of(args, skip=("out", "threads")) -> dict:
    cfg = {"command": args.command}
    for k in sorted(vars(args)):
        if k in skip or k == "command":
            continue
        v = getattr(args, k)
        if v is not None:
            cfg[k] = v
    return cfg


def _print_summary(lines):
    for line in lines:
        print(line)


def _dispatch(args) -> int:
    cfg = _config_of(args)

    if args.command == "mesh":
        m = _build_mesh(args)
        _write(args.out, m.to_json())
        mm = meshmod.measure(m)
        _print_summary([
            f"mesh {args.domain} level {args.refine}: "
            f"{len(m.vertices)} vertices, {len(m.cells)} cells, h = {m.mesh_size():.4g}",
            f"volume = {mm['volume']:.6g}, boundary area = {mm['boundary_area']:.6g}",
        ])
        return EXIT_OK

    if args.command == "spectrum":
        m = _load_mesh(args.mesh)
        if args.which == "steklov":
            res = spectral.steklov_spectrum(m, args.k)
        else:
            res = spectral.boundary_laplacian_spectrum(m, args.k)
        if args.format == "csv":
            body = "index,eigenvalue,residual\n" + "".join(
                f"{i},{ev:.17g},{r:.17g}\n"
                for i, (ev, r) in enumerate(zip(res.eigenvalues, res.residuals))
            )
            _write(args.out, body)
        else:
            _write(args.out, _wrap(cfg, res.to_json()))
        _print_summary([f"{res.which} eigenvalues: "
                        + ", ".join(f"{v:.6g}" for v in res.eigenvalues)])
        return EXIT_OK

    if args.command == "solve":
        m = _load_mesh(args.mesh)
        seed = args.seed
        if args.start == "random" and seed is None:
            seed = 0
            print("no --seed given for a stochastic start; using seed 0")
        cfg["seed"] = seed
        if args.start == "random":
            rng = np.random.default_rng(seed)
            start = np.exp(rng.normal(0.0, 1.0, len(m.vertices)))
            if m.intrinsic_dim == 2:
                start = np.log(start)
        else:
            start = "constant"
        if m.intrinsic_dim == 2:
            run = nonlinear.solve_exp_disc(m, args.lam, start)
        else:
            run = nonlinear.solve_semilinear(m, args.q, args.lam, start)
        _write(args.out, _wrap(cfg, run.to_json()))
        _print_summary([
            f"solve: {run.classification}, residual {run.residual:.3e}, "
            f"constancy ratio {run.constancy_ratio:.3e} "
            f"after {run.iterations} iterations",
        ])
        return EXIT_OK

    if args.command == "nonlinear":
        m = _load_mesh(args.mesh)
        seed = args.seed
        if seed is None:
            seed = 0
            print("no --seed given for a stochastic command; using seed 0")
        cfg["seed"] = seed
        run = nonlinear.minimize_quotient(m, args.q, starts=args.starts, seed=seed)
        _write(args.out, _wrap(cfg, run.to_json()))
        _print_summary([
            f"nonlinear q = {args.q}: {run.classification}, "
            f"quotient {run.quotient_value:.6g}, "
            f"constancy ratio {run.constancy_ratio:.3e}",
        ])
        return EXIT_OK

    if args.command == "verify":
        m = _load_mesh(args.mesh)
        rep = verify.run_suite(m, args.suite, seed=args.seed)
        # reports must be byte-reproducible: timing goes to stdout only
        wall = rep.wall_time
        rep.wall_time = 0.0
        rep.timestamp = ""
        if args.format == "csv":
            _write(args.out, "# config: " + dumps_17g(cfg) + "\n" + rep.to_csv())
        else:
            _write(args.out, _wrap(cfg, rep.to_json()))
        lines = [f"suite {args.suite} on {rep.mesh_family} "
                 f"level {rep.refinement_level}: {len(rep.checks)} checks "
                 f"in {wall:.2f} s"]
        for c in rep.checks:
            mark = "pass" if c.passed else "FAIL"
            lines.append(f"  [{mark}] {c.check_id:32s} slack = {c.slack:+.3e}")
        lines.append("all gating checks pass" if rep.all_pass
                     else "GATING CHECK FAILED")
        _print_summary(lines)
        return EXIT_OK if rep.all_pass else EXIT_CHECK

    if args.command == "convergence":
        table = convergence_table(args)
        _write(args.out, _wrap(cfg, dumps_17g(table)))
        lines = [f"{args.quantity}: analytic {table['analytic']:.8g}",
                 f"{'level':>5} {'h':>10} {'value':>14} {'error':>12} {'order':>7}"]
        for r in table["rows"]:
            order = "-" if r["observed_order"] is None else f"{r['observed_order']:.2f}"
            lines.append(f"{r['level']:>5} {r['h']:>10.4g} {r['value']:>14.8g} "
                         f"{r['error']:>12.4e} {order:>7}")
        _print_summary(lines)
        return EXIT_OK

    raise _Usage(f"unknown command {args.command!r}")


def parse_and_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _set_threads(args.threads)
    try:
        return _dispatch(args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvexLabError as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
