"""Command-line entry points.

    polyvem run --config case.json [--out results] [--global-stress]
    polyvem mesh-gen --shape rect --lx 2 --ly 1 --nx 2 --ny 1 --out mesh.json
    polyvem check-tangent --config case.json [--directions 10]

run executes the arc-length analysis and writes steps.csv plus VTK field
files at the configured stride.  mesh-gen writes a generated mesh as a JSON
mesh file.  check-tangent takes one committed step of the configured
problem, then compares the assembled tangent against central finite
differences of the internal force along random directions and prints the
worst relative error (a consistency diagnostic).
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .analysis import FESystem, run_analysis
from .config import ConfigError, parse_config
from .continuation import ArcLengthStepper, PathError
from .materials import ConstitutiveError
from .mesh import MeshError, generate_mesh, save_mesh
from .output import write_run_outputs

logger = logging.getLogger(__name__)


def _add_run(sub):
    p = sub.add_parser("run", help="execute an analysis from a JSON config")
    p.add_argument("--config", required=True, help="path to the run configuration")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument(
        "--global-stress",
        action="store_true",
        help="also emit stresses rotated to the global frame",
    )


def _add_mesh_gen(sub):
    p = sub.add_parser("mesh-gen", help="generate a benchmark mesh file")
    p.add_argument("--shape", required=True, choices=["rect", "annulus", "arch"])
    p.add_argument("--out", required=True, help="output mesh file (JSON)")
    p.add_argument("--lx", type=float, help="rect: width")
    p.add_argument("--ly", type=float, help="rect: height")
    p.add_argument("--nx", type=int, help="rect/arch: x subdivisions")
    p.add_argument("--ny", type=int, help="rect/arch: y subdivisions")
    p.add_argument("--grade-x", type=float, help="rect: last/first column width ratio")
    p.add_argument("--span", type=float, help="arch: span")
    p.add_argument("--depth", type=float, help="arch: strip depth")
    p.add_argument("--r-inner", type=float, help="annulus: inner radius")
    p.add_argument("--r-outer", type=float, help="annulus: outer radius")
    p.add_argument("--n-circ", type=int, help="annulus: circumferential subdivisions")
    p.add_argument("--n-rad", type=int, help="annulus: radial subdivisions")
    p.add_argument("--load-width", type=int, help="annulus: top set node count (odd)")
    p.add_argument("--support-width", type=int, help="annulus: bottom set node count (odd)")


def _add_check_tangent(sub):
    p = sub.add_parser("check-tangent", help="finite-difference tangent consistency check")
    p.add_argument("--config", required=True, help="path to the run configuration")
    p.add_argument("--directions", type=int, default=10, help="random probe directions")
    p.add_argument("--seed", type=int, default=0)


_SHAPE_KEYS = {
    "rect": ["lx", "ly", "nx", "ny", "grade_x"],
    "arch": ["span", "depth", "nx", "ny"],
    "annulus": ["r_inner", "r_outer", "n_circ", "n_rad", "load_width", "support_width"],
}


def _cmd_mesh_gen(args) -> int:
    spec = {"shape": args.shape}
    for key in _SHAPE_KEYS[args.shape]:
        val = getattr(args, key)
        if val is not None:
            spec[key] = val
    mesh = generate_mesh(spec)
    save_mesh(mesh, args.out)
    print(f"wrote {args.out}: {mesh.n_nodes} vertices, {mesh.n_elements} polygons")
    return 0


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    result = run_analysis(cfg.problem(), cfg.solver, field_stride=cfg.out_stride)
    paths = write_run_outputs(result, args.out, include_global_stress=args.global_stress)
    last = result.history[-1]
    print(
        f"completed {last.step} steps: lambda {float(last.lam)!r}, "
        f"monitor ({float(last.monitor[0])!r}, {float(last.monitor[1])!r})"
    )
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_check_tangent(args) -> int:
    cfg = parse_config(args.config)
    problem = cfg.problem()
    from .assembly import CorotModel

    model = CorotModel(
        problem.mesh,
        problem.material,
        thickness=problem.thickness,
        stabilization=cfg.solver.stabilization(),
        include_g1b=cfg.solver.include_g1b,
    )
    system = FESystem(model, problem)
    stepper = ArcLengthStepper(system, cfg.solver.arc_config())
    stepper.step()

    u = stepper.u
    lam = stepper.lam
    K, _, _, _ = system.assemble(u, lam)
    K = K.toarray()
    rng = np.random.default_rng(args.seed)
    scale = float(np.max(np.abs(problem.mesh.vertices)))
    h = 1.0e-7 * max(scale, 1.0)
    worst = 0.0
    for _ in range(args.directions):
        d = rng.standard_normal(u.size)
        d /= np.linalg.norm(d)
        _, fp, _, _ = system.assemble(u + h * d, lam)
        _, fm, _, _ = system.assemble(u - h * d, lam)
        fd = (fp - fm) / (2.0 * h)
        ref = np.linalg.norm(K @ d)
        worst = max(worst, float(np.linalg.norm(fd - K @ d) / ref))
    print(f"max relative finite-difference tangent error over {args.directions} "
          f"directions: {worst:.3e}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="polyvem",
        description="polygonal virtual elements in a co-rotational nonlinear solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    _add_mesh_gen(sub)
    _add_check_tangent(sub)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "mesh-gen":
            return _cmd_mesh_gen(args)
        if args.command == "check-tangent":
            return _cmd_check_tangent(args)
    except (ConfigError, MeshError, PathError, ConstitutiveError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
