"""Command-line entry point: build, optimize, reconstruct, report.

``shapeopt run <config>`` executes the whole pipeline on a named benchmark
or an INI config; ``shapeopt verify <config>`` runs the independent sanity
oracles (derivative checks, conformal oracle agreement, pull-back
equivalence); ``shapeopt mesh <config>`` only emits the mesh file.

Exit codes: 0 ok, 1 solver non-optimal, 2 config error, 3 internal error.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import cases as cases_mod
from .mesh import (Mesh2D, load_mesh, save_mesh, boundary_components,
                   generate_rectangle, structured_rectangle)
from .fem import FeSpace, FeFunction
from .forward import solve_state
from .builder import build_nlp, extract_solution
from .nlp import solve, SolverOptions, check_derivatives
from .conformal import (reconstruct, harmonic_conjugate, integrate_map,
                        rigid_align)
from . import report as report_mod

__all__ = ["main", "RunConfig", "run", "verify", "emit_mesh", "ConfigError"]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case: str = "example1"
    mesh_vertices: int = 953
    mesh_nx: int | None = None
    mesh_ny: int | None = None
    mesh_file: str | None = None
    label_map: dict = field(default_factory=dict)
    tol: float = 1e-8
    max_iter: int = 500
    epsilon: float | None = None
    alpha_lower: float | None = None
    alpha_upper: float | None = None
    outdir: str = "out"

    def validate(self):
        if self.case not in cases_mod.CASE_NAMES:
            raise ConfigError(f"unknown case {self.case!r}; "
                              f"expected one of {cases_mod.CASE_NAMES}")
        lo = self.alpha_lower if self.alpha_lower is not None else -0.45
        hi = self.alpha_upper if self.alpha_upper is not None else 0.45
        if not lo <= 0.0 <= hi:
            raise ConfigError("alpha bounds must bracket zero "
                              "(key 'alpha_lower'/'alpha_upper')")


_KNOWN_KEYS = {
    "case": {"name"},
    "mesh": {"vertices", "nx", "ny", "file"},
    "solver": {"tol", "max_iter"},
    "problem": {"epsilon", "alpha_lower", "alpha_upper"},
    "output": {"directory"},
    "labels": None,  # free-form: <int> = <kind> <name>
}


def parse_config(path_or_name: str) -> RunConfig:
    """A named case, or an INI file with [case]/[mesh]/[solver]/[problem]/
    [output]/[labels] sections (all optional)."""
    cfg = RunConfig()
    if not os.path.exists(path_or_name):
        cfg.case = path_or_name
        cfg.validate()
        return cfg

    parser = configparser.ConfigParser()
    try:
        read = parser.read(path_or_name)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if not read:
        raise ConfigError(f"cannot read config file {path_or_name!r}")

    def get(section, key, conv, default):
        if not parser.has_option(section, key):
            return default
        raw = parser.get(section, key)
        try:
            return conv(raw)
        except ValueError:
            raise ConfigError(f"bad value for key '{section}.{key}': {raw!r}") from None

    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section '{section}'")
        allowed = _KNOWN_KEYS[section]
        if allowed is not None:
            for key in parser.options(section):
                if key not in allowed:
                    raise ConfigError(f"unknown config key '{section}.{key}'")

    cfg.case = get("case", "name", str, cfg.case)
    cfg.mesh_vertices = get("mesh", "vertices", _vertex_count, cfg.mesh_vertices)
    cfg.mesh_nx = get("mesh", "nx", int, None)
    cfg.mesh_ny = get("mesh", "ny", int, None)
    cfg.mesh_file = get("mesh", "file", str, None)
    cfg.tol = get("solver", "tol", float, cfg.tol)
    cfg.max_iter = get("solver", "max_iter", int, cfg.max_iter)
    cfg.epsilon = get("problem", "epsilon", float, None)
    cfg.alpha_lower = get("problem", "alpha_lower", float, None)
    cfg.alpha_upper = get("problem", "alpha_upper", float, None)
    cfg.outdir = get("output", "directory", str, cfg.outdir)
    if parser.has_section("labels"):
        for key in parser.options("labels"):
            parts = parser.get("labels", key).split()
            if len(parts) != 2 or parts[0] not in ("inflow", "wall"):
                raise ConfigError(f"bad value for key 'labels.{key}': expected "
                                  f"'<inflow|wall> <name>'")
            cfg.label_map[int(key)] = (parts[0], parts[1])
    cfg.validate()
    return cfg


def _vertex_count(raw: str) -> int:
    return int(str(raw).strip().lstrip("~"))


def build_mesh(cfg: RunConfig) -> Mesh2D:
    if cfg.mesh_file:
        with open(cfg.mesh_file) as fh:
            return load_mesh(fh.read(), cfg.label_map or None)
    if cfg.mesh_nx and cfg.mesh_ny:
        if cfg.case == "example4":
            from .mesh import generate_distributor
            return generate_distributor(cfg.mesh_nx, cfg.mesh_ny)
        return generate_rectangle(cfg.mesh_nx, cfg.mesh_ny)
    if cfg.case == "example4":
        return cases_mod.distributor_mesh(cfg.mesh_vertices)
    return cases_mod.rectangle_mesh(cfg.mesh_vertices)


def _reference_solution(mesh, bench_g0=None):
    space = FeSpace(mesh, 2)
    comps = boundary_components(mesh)
    if bench_g0 is None:
        raise ValueError("reference solve needs boundary data")
    gvals = np.zeros(space.ndof)
    for comp in comps:
        dofs = space.component_dofs(comp)
        svals = space.component_dof_arclen(comp)
        gvals[dofs] = bench_g0.eval(mesh, comp, svals)
    return solve_state(mesh, FeFunction.zeros(space), gvals, space=space)


def make_bench(cfg: RunConfig, mesh: Mesh2D):
    """Benchmark + the reference (a = 0) state solution on this mesh."""
    if cfg.case == "example4":
        # the target is built from the reference corner shear on this mesh
        reference = _reference_solution(mesh, cases_mod.distributor_g0())
        bench = cases_mod.make_case("example4", mesh, reference=reference)
    else:
        bench = cases_mod.make_case(cfg.case, mesh)
        reference = _reference_solution(mesh, bench.case.g0)
    overrides = {}
    if cfg.epsilon is not None:
        overrides["epsilon"] = cfg.epsilon
    if cfg.alpha_lower is not None:
        overrides["alpha_lower"] = cfg.alpha_lower
    if cfg.alpha_upper is not None:
        overrides["alpha_upper"] = cfg.alpha_upper
    for key, val in overrides.items():
        setattr(bench.case, key, val)
    bench.case.validate()
    return bench, reference


def run(cfg: RunConfig, log_stream=None) -> int:
    os.makedirs(cfg.outdir, exist_ok=True)
    t_start = time.time()
    mesh = build_mesh(cfg)
    bench, reference = make_bench(cfg, mesh)
    built = build_nlp(mesh, bench.case)
    problem, layout, x0 = built

    log_lines = []
    sol = solve(problem, x0, SolverOptions(tol=cfg.tol, max_iter=cfg.max_iter),
                log=log_lines.append)
    with open(os.path.join(cfg.outdir, "solver.log"), "w") as fh:
        fh.write("\n".join(log_lines) + "\n")
    opt = extract_solution(sol.x, built)
    rec = reconstruct(mesh, opt.alpha)
    wall_time = time.time() - t_start

    activity = built.bound_activity(sol.x)
    payload = {
        "case": bench.case.name,
        "status": sol.status,
        "delta": opt.delta,
        "achieved_sup_misfit": opt.achieved_sup,
        "iterations": sol.iterations,
        "kkt": sol.kkt,
        "objective": sol.objective,
        "mesh": {"vertices": int(mesh.num_vertices),
                 "triangles": int(mesh.num_triangles)},
        "counts": {"variables": int(problem.n),
                   "equalities": int(problem.m_eq),
                   "inequalities": int(problem.m_ineq)},
        "bounds": {"alpha_lower": bench.case.alpha_lower,
                   "alpha_upper": bench.case.alpha_upper,
                   "active_lower": activity["lower"],
                   "active_upper": activity["upper"],
                   "min_gap": activity["min_gap"]},
        "epsilon": bench.case.epsilon,
        "reconstruction": {"residual": rec.residual,
                           "iterations": rec.iterations,
                           "self_overlapping": rec.self_overlapping},
        "wall_time_s": wall_time,
        "partial": sol.status != "optimal",
    }
    report_mod.report_json(os.path.join(cfg.outdir, "report.json"), payload)

    rows = []
    for comp in built.wall_comps:
        s, sig_opt = opt.sigma_wall[comp.name]
        _, sig0 = reference.sigma[comp.name]
        sd = bench.case.sigma_d.eval(mesh, comp, s)
        for k in range(len(s)):
            rows.append((comp.name, s[k], sig0[k], sd[k], sig_opt[k],
                         sd[k] - opt.delta, sd[k] + opt.delta))
    report_mod.wss_csv(os.path.join(cfg.outdir, "wss.csv"), rows)
    report_mod.alpha_csv(os.path.join(cfg.outdir, "alpha.csv"), mesh,
                         opt.alpha.vertex_values())
    report_mod.shape_svg(os.path.join(cfg.outdir, "shape.svg"), mesh, rec.theta,
                         title=f"{bench.case.name}: delta = {opt.delta:.4g}")

    if log_stream is not None:
        log_stream.write(f"{bench.case.name}: status={sol.status} "
                         f"delta={opt.delta:.6g} iters={sol.iterations} "
                         f"({wall_time:.1f}s)\n")
    return 0 if sol.status == "optimal" else 1


def verify(cfg: RunConfig, log_stream=sys.stdout) -> int:
    """Independent sanity oracles at small sizes; prints a pass/fail table."""
    checks = []

    def record(name, ok, detail):
        checks.append((name, ok, detail))
        log_stream.write(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}\n")

    t0 = time.time()
    # 1. mesh geometry identity
    from .mesh import polygon_area
    mesh = cases_mod.rectangle_mesh(min(cfg.mesh_vertices, 300))
    area_err = abs(mesh.triangle_areas().sum() - polygon_area(mesh))
    record("mesh shoelace identity", area_err <= 1e-12, f"error {area_err:.2e}")

    # 2. full derivative check on the richest problem (all nonlinearities)
    bench = cases_mod.rectangle_case(3)
    built = build_nlp(mesh, bench.case)
    problem, layout, x0 = built
    rng = np.random.default_rng(7)
    xp = x0 + 0.01 * rng.standard_normal(problem.n)
    rep = check_derivatives(problem, xp, h=1e-6)
    record("derivative check (gradient/Jacobians)", rep.max_error <= 1e-6,
           f"max rel error {rep.max_error:.2e}")

    # 3. conformal oracle agreement
    msq = structured_rectangle(16, 16, 0.0, 1.0, 0.0, 1.0)
    a = msq.vertices[:, 0]
    rec = reconstruct(msq, a)
    beta = harmonic_conjugate(msq, a)
    T = integrate_map(msq, a, beta)
    _, rms = rigid_align(rec.theta, np.column_stack([T.real, T.imag]))
    record("conformal oracle agreement", rms <= 2e-3, f"rms {rms:.2e}")

    # 4. pull-back equivalence at a small mesh
    m = generate_rectangle(24, 12)
    V = FeSpace(m, 2)
    alpha = FeFunction.from_callable(V, lambda x, y: 0.2 * x)
    g = FeFunction.from_callable(V, cases_mod._rect_g0)
    sref = solve_state(m, alpha, g)
    bvert = harmonic_conjugate(m, 0.2 * m.vertices[:, 0])
    Tm = integrate_map(m, 0.2 * m.vertices[:, 0], bvert)
    m2 = Mesh2D(np.column_stack([Tm.real, Tm.imag]), m.triangles,
                m.boundary_edges, m.boundary_labels, m.label_map)
    V2 = FeSpace(m2, 2)
    sphys = solve_state(m2, FeFunction.zeros(V2), g.coeffs)
    rels = []
    for name, (s, sig) in sref.sigma.items():
        _, sig2 = sphys.sigma[name]
        rels.append(np.abs(sig - sig2).max() / np.abs(sig).max())
    record("pull-back equivalence", max(rels) <= 0.10,
           f"rel Linf {max(rels):.3f}")

    # 5. feasible start
    r0 = np.abs(problem.eq_constraints(x0)).max()
    record("feasible start point", r0 <= 1e-9, f"eq residual {r0:.2e}")

    log_stream.write(f"verify wall time: {time.time() - t0:.1f}s\n")
    return 0 if all(ok for _, ok, _ in checks) else 1


def emit_mesh(cfg: RunConfig) -> int:
    os.makedirs(cfg.outdir, exist_ok=True)
    mesh = build_mesh(cfg)
    with open(os.path.join(cfg.outdir, "mesh.txt"), "w") as fh:
        fh.write(save_mesh(mesh))
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="shapeopt",
        description="Sup-norm wall-shear-stress shape optimization "
                    "(conformal pull-back, interior point)")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "verify", "mesh"):
        p = sub.add_parser(name)
        p.add_argument("config", help="case name (example1..example4) or INI file")
        p.add_argument("--mesh-vertices", default=None,
                       help="approximate vertex count (e.g. 950 or ~950)")
        p.add_argument("--alpha-bound", type=float, default=None,
                       help="symmetric box bound B: -B <= alpha <= B")
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
    args = ap.parse_args(argv)

    try:
        cfg = parse_config(args.config)
        if args.mesh_vertices is not None:
            cfg.mesh_vertices = _vertex_count(args.mesh_vertices)
        if args.alpha_bound is not None:
            cfg.alpha_lower, cfg.alpha_upper = -args.alpha_bound, args.alpha_bound
        if args.epsilon is not None:
            cfg.epsilon = args.epsilon
        if args.tol is not None:
            cfg.tol = args.tol
        if args.max_iter is not None:
            cfg.max_iter = args.max_iter
        if args.out is not None:
            cfg.outdir = args.out
        cfg.validate()
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2

    try:
        if args.command == "run":
            return run(cfg, log_stream=sys.stdout)
        if args.command == "verify":
            return verify(cfg)
        return emit_mesh(cfg)
    except (ConfigError,) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except Exception as exc:  # internal failure
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
