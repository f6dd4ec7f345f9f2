"""Command-line entry point.

    cascade-stokes SUBCOMMAND [-c CONFIG] [--set section.key=value ...]

Subcommands: mesh, solve, mms, lift-check, divsolve-check, norms,
stability-probe.  Exit status is 0 on success, 1 for invalid input and 2
for a failed computation.  Artifacts are staged and only moved into the
output directory once the subcommand has finished, so a failed run leaves
no partial files behind.
"""

import argparse
import os
import shutil
import sys
import tempfile

import numpy as np

from . import verify
from .assembly import StokesProblem, TensorForcing
from .config import OUTPUT_ROOT_ENV, load_config
from .divsolve import build_tensor_potential_L3, norm_ratio
from .errors import ConfigError, NumericalError, ValidationError
from .geometry import EllipseProfile, SplineProfile, Tag, build_geometry
from .lift import build_lift, stability_constant
from .mesh import generate_mesh, read_mesh, write_mesh
from .output import write_coefficients, write_csv_rows, write_key_values, write_vtk
from .solver import SolverConfig, solve

SUBCOMMANDS = ("mesh", "solve", "mms", "lift-check", "divsolve-check", "norms", "stability-probe")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def make_parser():
    p = _Parser(
        prog="cascade-stokes",
        description="Stokes flow through one period of a profile cascade (Taylor-Hood P2/P1).",
        epilog=f"Relative output directories resolve against ${OUTPUT_ROOT_ENV} when it is set.",
    )
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("-c", "--config", help="INI configuration file")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one configuration value (repeatable; wins over the file)",
    )
    p.add_argument("-o", "--output", help="output directory (same as --set output.dir=...)")
    return p


# ------------------------------------------------------------ builders


def _profile(spec):
    if not spec:
        return None
    parts = spec.split()
    if parts[0] == "ellipse":
        try:
            vals = [float(v) for v in parts[1:]]
        except ValueError:
            raise ConfigError("ellipse takes numbers: cx cy a b [angle]", "geometry.profile") from None
        if len(vals) not in (4, 5):
            raise ConfigError("ellipse takes cx cy a b [angle]", "geometry.profile")
        return EllipseProfile(vals[:2], vals[2:4], vals[4] if len(vals) == 5 else 0.0)
    from .config import _points

    return SplineProfile(_points(" ".join(parts[1:]), "geometry.profile"))


def build_geometry_from(cfg):
    g = cfg.geometry
    return build_geometry(
        g.tau,
        g.d,
        lower_curve=list(g.lower_curve) if g.lower_curve else None,
        profile=_profile(g.profile),
        delta_margin=g.delta_margin,
    )


def build_case(cfg, geometry):
    """The manufactured case named in the config, or None for 'zero'/'random'."""
    p = cfg.problem
    if p.case in ("zero", "random"):
        return None
    band = p.band or None
    if p.case == "corner-compatible" and band is None and geometry.profile is not None:
        lo, hi = geometry.profile_x1_range()
        pad = 0.5 * geometry.delta_margin
        band = (lo - pad, hi + pad)
    shift = float(geometry.corners["A-"][1])
    return verify.make_case(p.case, nu=p.nu, tau=geometry.tau, d=geometry.d, x2_shift=shift, band=band)


def build_problem(cfg, geometry, mesh, case):
    p = cfg.problem
    if p.case == "zero":
        problem = StokesProblem(p.nu)
    elif p.case == "random":
        problem = verify.random_smooth_data(p.seed, geometry.tau, geometry.d, p.nu)
    else:
        problem = case.problem()
    if p.forcing == "tensor" and problem.forcing is not None:
        F = build_tensor_potential_L3(mesh, problem.forcing.f, geometry=geometry)
        problem = StokesProblem(problem.nu, TensorForcing(F), problem.inflow_g, problem.outflow_h)
    return problem


def build_mesh(cfg, geometry, h=None):
    if cfg.mesh.file and h is None:
        return read_mesh(cfg.mesh.file)
    return generate_mesh(geometry, cfg.mesh.h if h is None else h, kind=cfg.mesh.kind or None)


def solver_config(cfg):
    s = cfg.solver
    return SolverConfig(
        nu=cfg.problem.nu,
        mode=s.mode,
        linear_solver=s.linear_solver,
        tol=s.tol,
        maxiter=s.maxiter,
        r_values=tuple(s.r_values),
    )


# ----------------------------------------------------------- commands


def cmd_mesh(cfg, geometry, case, out):
    mesh = build_mesh(cfg, geometry)
    write_mesh(mesh, os.path.join(out, "mesh.txt"))
    write_vtk(os.path.join(out, "mesh.vtk"), mesh)
    return (
        f"mesh: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles, "
        f"{len(mesh.periodic_pairs)} periodic pairs, h = {mesh.h:.6g}"
    )


def _report_values(cfg, mesh, rep):
    vals = {"case": cfg.problem.case, "mode": cfg.solver.mode, "n_vertices": mesh.n_vertices}
    vals["n_triangles"] = mesh.n_triangles
    vals["h"] = mesh.h
    vals["tau"] = mesh.tau
    vals.update(rep.scalars())
    return vals


def cmd_solve(cfg, geometry, case, out):
    mesh = build_mesh(cfg, geometry)
    problem = build_problem(cfg, geometry, mesh, case)
    rep = solve(mesh, problem, solver_config(cfg))
    vals = _report_values(cfg, mesh, rep)
    write_key_values(os.path.join(out, "report.txt"), vals)
    write_csv_rows(os.path.join(out, "report.csv"), [vals])
    write_vtk(os.path.join(out, "fields.vtk"), mesh, rep.solution.u, rep.solution.p)
    write_coefficients(os.path.join(out, "coefficients.csv"), mesh, rep.solution.u, rep.solution.p)
    return (
        f"solve: flux_in = {rep.flux_in:.12g}, flux_out = {rep.flux_out:.12g}, "
        f"traction_residual = {rep.traction_residual:.3e}"
    )


def cmd_mms(cfg, geometry, case, out):
    if case is None:
        raise ConfigError("mms needs a manufactured case", "problem.case")
    study = verify.convergence_study(
        case, geometry, cfg.study.h_list, cfg.study.r_values, solver_config(cfg), mesh_kind=cfg.mesh.kind or None
    )
    study.write_csv(os.path.join(out, "rates.csv"))
    study.write_gnuplot(out)
    r = 2.0 if 2.0 in cfg.study.r_values else cfg.study.r_values[0]
    return (
        f"mms: {len(study.rows)} levels, final W1,{r:g} rate {study.final_rate(f'err_u_W1_{r:g}'):.4f}, "
        f"pressure L{r:g} rate {study.final_rate(f'err_p_L{r:g}'):.4f}"
    )


def cmd_lift_check(cfg, geometry, case, out):
    mesh = build_mesh(cfg, geometry)
    problem = build_problem(cfg, geometry, mesh, case)
    lift = build_lift(mesh, problem.inflow_g)
    residuals = lift.residuals()
    rows = []
    for r in cfg.solver.r_values:
        row = {"r": r, "flux": lift.flux, "flux_data": lift.flux_data}
        row.update(residuals)
        row["stability_constant"] = stability_constant(lift, r)
        rows.append(row)
    write_csv_rows(os.path.join(out, "lift_check.csv"), rows)
    invariants = ("inflow_trace", "profile_trace", "periodicity", "outflow_trace", "divergence")
    worst = max(residuals[k] for k in invariants)
    return f"lift-check: max invariant residual {worst:.3e}, C = {rows[0]['stability_constant']:.6g}"


def cmd_divsolve_check(cfg, geometry, case, out):
    mesh = build_mesh(cfg, geometry)
    f = _forcing_field(cfg, geometry, case)
    F = build_tensor_potential_L3(mesh, f, geometry=geometry)
    row = {"mode": F.mode, "delta": F.cutoff.delta, "k1": F.k[0], "k2": F.k[1]}
    row.update(F.residuals())
    for r in cfg.solver.r_values:
        row[f"norm_ratio_r{r:g}"] = norm_ratio(F, r)
    write_csv_rows(os.path.join(out, "divsolve_check.csv"), [row])
    return (
        f"divsolve-check: divergence residual {max(row['divergence_row1'], row['divergence_row2']):.3e}, "
        f"outflow normal trace {row['outflow_normal_trace']:.3e}"
    )


def _forcing_field(cfg, geometry, case):
    if cfg.problem.case == "zero":
        return None
    if cfg.problem.case == "random":
        return verify.random_smooth_data(cfg.problem.seed, geometry.tau, geometry.d, cfg.problem.nu).forcing.f
    return case.f


def cmd_norms(cfg, geometry, case, out):
    mesh = build_mesh(cfg, geometry)
    problem = build_problem(cfg, geometry, mesh, case)
    rep = solve(mesh, problem, solver_config(cfg))
    u, p = rep.solution.u, rep.solution.p
    rows = []
    for r in cfg.solver.r_values:
        for name, field, kind, seg in (
            ("u", u, "Lr", Tag.OUTFLOW),
            ("u", u, "W1r", Tag.OUTFLOW),
            ("p", p, "Lr", Tag.OUTFLOW),
            ("u_inflow", u, "Lr-boundary", Tag.INFLOW),
            ("u_inflow", u, "gagliardo", Tag.INFLOW),
            ("u_outflow", u, "Lr-boundary", Tag.OUTFLOW),
            ("u_outflow", u, "gagliardo", Tag.OUTFLOW),
        ):
            val = verify.error_norm(field, verify.NormSpec(r, kind, seg), mesh)
            rows.append({"quantity": name, "kind": kind, "r": r, "value": val})
        if case is not None:
            eu = verify.error_norm(u, verify.NormSpec(r, "W1r"), mesh, case.u, case.grad_u)
            ep = verify.error_norm(p, verify.NormSpec(r, "Lr"), mesh, case.p)
            rows.append({"quantity": "error_u", "kind": "W1r", "r": r, "value": eu})
            rows.append({"quantity": "error_p", "kind": "Lr", "r": r, "value": ep})
        if problem.inflow_g is not None:
            y0 = float(geometry.corners["A-"][1])
            g = problem.inflow_g

            def w(y, g=g, y0=y0):
                y = np.asarray(y, dtype=float)
                return np.asarray(g(np.stack([np.zeros_like(y), y0 + y], axis=-1)))[..., 0]

            lhs, rhs, ratio = verify.remark_r3_inequality_check(w, r, geometry.tau)
            rows.append({"quantity": "g1_periodic_extension_lhs", "kind": "gagliardo^r", "r": r, "value": lhs})
            rows.append({"quantity": "g1_periodic_extension_rhs", "kind": "gagliardo^r", "r": r, "value": rhs})
            rows.append({"quantity": "g1_periodic_extension_ratio", "kind": "ratio", "r": r, "value": ratio})
    write_csv_rows(os.path.join(out, "norms.csv"), rows)
    return f"norms: {len(rows)} values written"


def cmd_stability_probe(cfg, geometry, case, out):
    seeds = range(cfg.problem.seed, cfg.problem.seed + cfg.study.seeds)
    rows = verify.stability_probe(
        geometry, cfg.study.h_list, seeds, cfg.study.r_values, mesh_kind=cfg.mesh.kind or None
    )
    write_csv_rows(os.path.join(out, "stability.csv"), rows)
    last = max(r["level"] for r in rows)
    growth = max(
        b["max_ratio"] / a["max_ratio"]
        for a in rows
        if a["level"] == 0
        for b in rows
        if b["level"] == last and b["r"] == a["r"]
    )
    return f"stability-probe: {cfg.study.seeds} seeds, {last + 1} levels, max finest/coarsest growth {growth:.4f}"


COMMANDS = {
    "mesh": cmd_mesh,
    "solve": cmd_solve,
    "mms": cmd_mms,
    "lift-check": cmd_lift_check,
    "divsolve-check": cmd_divsolve_check,
    "norms": cmd_norms,
    "stability-probe": cmd_stability_probe,
}


def _publish(staging, target):
    os.makedirs(target, exist_ok=True)
    for name in sorted(os.listdir(staging)):
        shutil.move(os.path.join(staging, name), os.path.join(target, name))


def run(subcommand, config_path=None, overrides=(), output=None):
    """Execute one subcommand; returns (exit status, message)."""
    try:
        if subcommand not in COMMANDS:
            raise ValidationError(f"unknown subcommand {subcommand!r}; expected one of {', '.join(SUBCOMMANDS)}")
        overrides = list(overrides)
        if output:
            overrides.append(f"output.dir={output}")
        cfg = load_config(config_path, overrides)
        if cfg.problem.case in ("zero", "random") and subcommand == "mms":
            raise ConfigError("mms needs a manufactured case", "problem.case")
        geometry = build_geometry_from(cfg)
        case = build_case(cfg, geometry)
        target = cfg.output_dir()
        with tempfile.TemporaryDirectory(prefix="cascade-stokes-") as staging:
            with open(os.path.join(staging, "effective_config.ini"), "w") as fh:
                fh.write(cfg.to_ini())
            message = COMMANDS[subcommand](cfg, geometry, case, staging)
            _publish(staging, target)
        return 0, message
    except ValidationError as exc:
        return 1, f"error: {exc}"
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return 2, f"numerical failure: {exc}"


def main(argv=None):
    args = make_parser().parse_args(argv)
    status, message = run(args.subcommand, args.config, args.set, args.output)
    print(message, file=sys.stderr if status else sys.stdout)
    return status


if __name__ == "__main__":
    sys.exit(main())
