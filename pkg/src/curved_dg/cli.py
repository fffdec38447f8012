"""Command line entry point: ``curved-dg``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import geometry, physics, reference, study


def _add_mesh_args(p):
    p.add_argument("--element", "--kind", dest="element", default="tri", choices=("tri", "quad"))
    p.add_argument("--kg", type=int, default=1, help="geometry order")
    p.add_argument("--level", type=int, default=0)
    p.add_argument("--ar", type=float, default=1.0, help="target aspect ratio")
    p.add_argument("--domain", default="quarter", choices=("quarter", "full"))
    p.add_argument("--n-base", type=int, default=2)


def _domain(name):
    return geometry.QuarterAnnulus() if name == "quarter" else geometry.FullAnnulus()


def cmd_study(args):
    cfg = study.load_config(args.config)
    if args.output_dir:
        cfg.output_dir = args.output_dir
    if args.over_integrate is not None:
        cfg.over_integrate = args.over_integrate

    def progress(row, cell):
        state = "failed" if cell.get("failed") else f"N={cell.get('n_elements')}"
        print(f"k={cell['k']} k_G={cell['k_g']} level={cell['level']}: {state} "
              f"({cell['wall_time']:.1f} s)", file=sys.stderr, flush=True)

    table = study.run_study(cfg, progress=progress)
    print(study.render_table(table, args.format))
    return 0


def cmd_run(args):
    cfg = study.StudyConfig(case=args.case, element=args.element, k=[args.k], kg_policy=args.kg,
                            ar=args.ar, levels=1, start_level=args.level, n_base=args.n_base,
                            mu=args.mu, normal_mode=args.normal_mode,
                            over_integrate=args.over_integrate or 0)
    case = study.make_case(cfg.case, mu=cfg.mu)
    try:
        mesh, _, report, errors = study.run_cell(cfg, case, args.k, args.level)
    except study.NewtonFailure as exc:
        print(f"solve failed: {exc}", file=sys.stderr)
        return 2
    out = {"n_elements": errors.n_elements, "h": errors.h, "ar_realized": errors.ar_realized,
           "errors": errors.errors, "solve": report.as_dict()}
    print(json.dumps(out, indent=2))
    return 0


def cmd_mesh(args):
    mesh = geometry.generate_tobecurved_annulus(args.element, args.kg, args.level, args.ar,
                                                _domain(args.domain), n_base=args.n_base)
    print(f"elements      {mesh.num_elements}")
    print(f"grid          {mesh.n_rho} x {mesh.n_theta}")
    print(f"h             {geometry.mesh_size_h(mesh):.4e}")
    print(f"AR realized   {mesh.ar_realized:.3f}")
    print(f"area error    {abs(geometry.discrete_area(mesh) - mesh.domain.area) :.3e}")
    print(f"arc error     {geometry.boundary_geometry_error(mesh):.3e}")
    if args.svg:
        with open(args.svg, "w") as fh:
            fh.write(geometry.mesh_svg(mesh))
    if args.out:
        with open(args.out, "w") as fh:
            geometry.write_mesh(mesh, fh)
    return 0


def cmd_verify_exact(args):
    failed = False
    tol = args.tol if args.tol is not None else (1e-8 if args.case == study.NS_COUETTE else 1e-7)
    if args.case == study.NS_COUETTE:
        params = physics.CouetteParams()
        gas = physics.GasModel(mu=args.mu)
        radii = np.linspace(params.r_i, params.r_o, args.radii + 2)[1:-1]
        worst = {}
        for r in radii:
            res = physics.cylindrical_equation_residuals(params, gas, r=r)
            for key, val in res.items():
                worst[key] = max(worst.get(key, 0.0), abs(val))
        for key, val in worst.items():
            ok = val <= tol
            failed |= not ok
            print(f"{key:24s} max |res| = {val:.3e}  {'ok' if ok else 'FAIL'}")
    else:
        params = physics.VortexParams()
        gas = physics.GasModel()
        rng = np.random.default_rng(0)
        r = rng.uniform(params.r_i + 0.01, params.r_o - 0.01, args.radii)
        t = rng.uniform(0.05, np.pi / 2 - 0.05, args.radii)
        x = np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)
        h = 1e-3
        div = np.zeros((len(r), 4))
        for d in range(2):
            e = np.zeros(2)
            e[d] = h
            for c, j in ((1, -2), (-8, -1), (8, 1), (-1, 2)):
                W = physics.vortex_state(x + j * e, params, gas)
                div += c * physics.inviscid_flux(W, gas)[..., d] / (12 * h)
        val = float(np.abs(div).max())
        ok = val <= tol
        failed |= not ok
        print(f"steady Euler divergence  max |res| = {val:.3e}  {'ok' if ok else 'FAIL'}")
    return 1 if failed else 0


def cmd_refel(args):
    ref = reference.build_reference_element(args.kind, args.k, args.strength)
    sys.stdout.write(ref.dump_csv())
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="curved-dg", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("study", help="run a refinement study from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir")
    p.add_argument("--format", default="markdown", choices=("markdown", "csv"))
    p.add_argument("--over-integrate", type=int, default=None,
                   help="raise cubature strength to 2k + N")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("run", help="single solve on one mesh")
    p.add_argument("--case", required=True, choices=study.CASES)
    p.add_argument("--element", default="tri", choices=("tri", "quad"))
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--kg", default="iso", help="sub, iso, super or an integer")
    p.add_argument("--level", type=int, default=0)
    p.add_argument("--ar", type=float, default=1.0)
    p.add_argument("--n-base", type=int, default=None)
    p.add_argument("--mu", type=float, default=1e-3)
    p.add_argument("--normal-mode", default=geometry.FROM_GEOMETRY,
                   choices=(geometry.FROM_GEOMETRY, geometry.EXACT_ANNULUS))
    p.add_argument("--over-integrate", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("mesh", help="generate a curved annulus mesh")
    _add_mesh_args(p)
    p.add_argument("--svg")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("verify-exact", help="check an exact solution against its equations")
    p.add_argument("--case", default=study.NS_COUETTE, choices=(study.NS_COUETTE, study.EULER_VORTEX))
    p.add_argument("--radii", type=int, default=20)
    p.add_argument("--mu", type=float, default=1e-3)
    p.add_argument("--tol", type=float, default=None)
    p.set_defaults(func=cmd_verify_exact)

    p = sub.add_parser("refel", help="reference element utilities")
    rs = p.add_subparsers(dest="refel_command", required=True)
    d = rs.add_parser("dump", help="print nodes and cubature as CSV")
    d.add_argument("--kind", default="tri", choices=("tri", "quad"))
    d.add_argument("--k", type=int, default=1)
    d.add_argument("--strength", type=int, default=None)
    d.set_defaults(func=cmd_refel)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (study.ConfigError, geometry.MeshConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
