"""Convergence-study driver: refine, assemble, solve, measure, export.

A study walks the refinement hierarchy of a case's domain, solves the
corresponding scheme at every level and collects one :class:`StudyRecord`
per level.  Run-time invariants are checked along the way:

* the per-triangle divergence best-approximation identity (every case),
* the pressure recovery bound e_p <= (sqrt(2)/2) e_sigma and the
  vanishing of the trace constraint and its Lagrange multiplier (Stokes).

With ``strict`` the checks raise; otherwise they emit warnings, which
keeps exploratory runs alive.  A solver failure always aborts the study,
flushing the records gathered so far.
"""

import warnings
from dataclasses import dataclass, field, fields

import numpy as np

from .error import (ErrorCheckFailure, StudyRecord, attach_eoc, div_error,
                    jump_seminorm, pressure_error, sigma_error, u_error)
from .exact import get_case
from .mesh import build_initial_mesh, refine_uniform
from .poisson import assemble_poisson_system
from .solver import SolverError, solve
from .space import DofMap, FieldCR, FieldP0
from .stokes import assemble_stokes_system

CHECK_SCALE_TOL = 1e-8


@dataclass
class StudyConfig:
    """Everything a study run needs; maps 1:1 onto the CLI flags."""

    case: str = "p1"
    kmax: int = 3
    nu: tuple = (1.0,)           # used by the Kovasznay case only
    gamma_scale: float = 1.0
    solver: str = "direct"
    solver_tol: float = 1e-10
    quad_assembly: int = 4
    quad_data_tri: int = 8
    quad_data_edge: int = 15
    quad_err: int = 0            # 0 = per-case default (8 smooth, 10 singular)
    out: str = "out"
    export: tuple = ()           # subset of {"csv", "table", "vtk"}
    strict: bool = False

    def validate(self):
        if self.kmax < 1:
            raise ValueError("kmax must be at least 1")
        if any(n <= 0 for n in self.nu):
            raise ValueError("viscosities must be positive")
        if self.case not in ("p1", "p2", "p3", "s1", "s2", "s3"):
            raise ValueError(f"unknown case {self.case!r}")
        bad = set(self.export) - {"csv", "table", "vtk"}
        if bad:
            raise ValueError(f"unknown export flags {sorted(bad)}")
        return self


def parse_config_file(path):
    """Flat ``key = value`` file; '#' starts a comment."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return config_from_strings(values)


def config_from_strings(values, base=None):
    """Build a config from string-valued settings (file or CLI layer)."""
    cfg = StudyConfig() if base is None else base
    known = {f.name: f.type for f in fields(StudyConfig)}
    for key, val in values.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        if key == "nu":
            cfg.nu = tuple(float(v) for v in str(val).split(","))
        elif key == "export":
            items = [v.strip() for v in str(val).split(",") if v.strip()]
            cfg.export = tuple(items)
        elif key in ("kmax", "quad_assembly", "quad_data_tri",
                     "quad_data_edge", "quad_err"):
            setattr(cfg, key, int(val))
        elif key in ("gamma_scale", "solver_tol"):
            setattr(cfg, key, float(val))
        elif key == "strict":
            cfg.strict = str(val).lower() in ("1", "true", "yes", "on")
        else:
            setattr(cfg, key, str(val))
    return cfg


@dataclass
class LevelResult:
    """Solution artifacts of one level, kept for exports and checks."""

    mesh: object
    sigma_h: FieldCR
    u_h: FieldP0
    report: object
    phi: float = 0.0
    trace: float = 0.0
    rhs_scale: float = 0.0


def _complain(strict, message):
    if strict:
        raise ErrorCheckFailure(message)
    warnings.warn(message, stacklevel=3)


def solve_level(mesh, case, config):
    """Assemble and solve one refinement level of a case."""
    quad = dict(gamma_scale=config.gamma_scale,
                quad_assembly=config.quad_assembly,
                quad_data_edge=config.quad_data_edge,
                quad_data_tri=config.quad_data_tri)
    if case.kind == "poisson":
        system = assemble_poisson_system(mesh, case, **quad)
    else:
        system = assemble_stokes_system(mesh, case, **quad)
    report = solve(system, tol=config.solver_tol, method=config.solver)
    if case.kind == "poisson":
        sig, u = system.split(report.x)
        res = LevelResult(mesh=mesh,
                          sigma_h=FieldCR(DofMap(mesh, "cr", 2), sig),
                          u_h=FieldP0(DofMap(mesh, "p0", 1), u),
                          report=report)
    else:
        sig, u, phi = system.split(report.x)
        res = LevelResult(mesh=mesh,
                          sigma_h=FieldCR(DofMap(mesh, "cr", 4), sig),
                          u_h=FieldP0(DofMap(mesh, "p0", 2), u),
                          report=report, phi=phi,
                          trace=float(system.trace_vec @ sig))
    # data scale ||G|| + ||F|| for the multiplier/trace thresholds
    ns = system.n_sigma
    res.rhs_scale = float(np.linalg.norm(system.rhs[:ns])
                          + np.linalg.norm(system.rhs[ns:ns + system.n_u]))
    return system, res


def measure_level(case, config, result, iteration):
    """All error columns plus the run-time checks for one level."""
    mesh = result.mesh
    err_deg = config.quad_err if config.quad_err else case.err_quad_tri
    e_sigma = sigma_error(mesh, case, result.sigma_h, degree=err_deg)
    identity_tol = max(1e-10, 10.0 * result.report.relres)
    try:
        e_div, _ = div_error(mesh, case, result.sigma_h, degree=err_deg,
                             data_degree=config.quad_data_tri,
                             identity_tol=identity_tol)
    except ErrorCheckFailure as exc:
        if config.strict:
            raise
        warnings.warn(str(exc), stacklevel=2)
        e_div, _ = div_error(mesh, case, result.sigma_h, degree=err_deg,
                             data_degree=config.quad_data_tri, check=False)
    e_jump = jump_seminorm(mesh, result.sigma_h,
                           gamma_scale=config.gamma_scale)
    e_u = u_error(mesh, case, result.u_h, degree=err_deg)

    e_p = None
    extras = {"residual": result.report.relres,
              "solve_time": result.report.wall_time,
              "method": result.report.method}
    if case.kind == "stokes":
        try:
            e_p = pressure_error(mesh, case, result.sigma_h, degree=err_deg,
                                 sigma_err=e_sigma)
        except ErrorCheckFailure as exc:
            if config.strict:
                raise
            warnings.warn(str(exc), stacklevel=2)
            e_p = pressure_error(mesh, case, result.sigma_h, degree=err_deg,
                                 check=False)
        scale = max(result.rhs_scale, 1e-300)
        if abs(result.phi) > CHECK_SCALE_TOL * scale:
            _complain(config.strict,
                      f"Lagrange multiplier |phi| = {abs(result.phi):.3e} "
                      f"exceeds {CHECK_SCALE_TOL:.0e} * {scale:.3e}")
        if abs(result.trace) > CHECK_SCALE_TOL * scale:
            _complain(config.strict,
                      f"trace constraint |int tr sigma_h| = "
                      f"{abs(result.trace):.3e} exceeds "
                      f"{CHECK_SCALE_TOL:.0e} * {scale:.3e}")
        extras.update(phi=result.phi, trace=result.trace)

    if case.kind == "poisson":
        dofs = 2 * mesh.num_edges + mesh.num_triangles
    else:
        dofs = 4 * mesh.num_edges + 2 * mesh.num_triangles + 1
    return StudyRecord(iteration=iteration, dofs=dofs, e_sigma=e_sigma,
                       e_div=e_div, e_jump=e_jump, e_u=e_u, e_p=e_p,
                       eoc={}, extras=extras)


def run_study(config, nu=None, keep_levels=False, vtk_writer=None):
    """Run one case across kmax+1 levels; returns (records, levels).

    ``levels`` holds the per-level artifacts only when ``keep_levels`` or
    a ``vtk_writer`` callback (mesh, sigma_h, u_h, iteration) is present
    for streaming exports.  On solver failure the records gathered so far
    are attached to the raised exception as ``exc.partial_records``.
    """
    config.validate()
    case = get_case(config.case, nu=nu)
    mesh = build_initial_mesh(case.domain)
    records = []
    levels = []
    for k in range(config.kmax + 1):
        try:
            _, result = solve_level(mesh, case, config)
        except SolverError as exc:
            exc.partial_records = attach_eoc(records)
            raise
        records.append(measure_level(case, config, result, k))
        if vtk_writer is not None:
            vtk_writer(result.mesh, result.sigma_h, result.u_h, k)
        if keep_levels:
            levels.append(result)
        if k < config.kmax:
            mesh = refine_uniform(mesh)
    return attach_eoc(records), levels


def format_table(records, case_tag, nu=None):
    """Aligned plain-text table mirroring the published layout."""
    has_p = records and records[0].e_p is not None
    cols = [("e_sigma", "||s-s_h||"), ("e_div", "||div(s-s_h)||"),
            ("e_jump", "||jump(s_h)||"), ("e_u", "||u-u_h||")]
    if has_p:
        cols.append(("e_p", "||p-p_h||"))
    title = f"case {case_tag}"
    if nu is not None:
        title += f", nu = {nu:g}"
    header = ["iter", "DOFs"]
    for _, label in cols:
        header += [label, "EOC"]
    rows = [header]
    for rec in records:
        row = [str(rec.iteration), str(rec.dofs)]
        for key, _ in cols:
            row.append(f"{getattr(rec, key):.4e}")
            e = rec.eoc.get(key)
            row.append("--" if e is None else f"{e:.2f}")
        rows.append(row)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = [title]
    for r in rows:
        lines.append("  ".join(s.rjust(w) for s, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


def format_csv(records):
    """CSV rows (6 significant digits; blank EOC where undefined)."""
    has_p = records and records[0].e_p is not None
    cols = ["e_sigma", "e_div", "e_jump", "e_u"] + (["e_p"] if has_p else [])
    header = "iter,dofs," + ",".join(
        f"{c},eoc_{c.split('_', 1)[1]}" for c in cols)
    lines = [header]
    for rec in records:
        parts = [str(rec.iteration), str(rec.dofs)]
        for c in cols:
            parts.append(f"{getattr(rec, c):.6g}")
            e = rec.eoc.get(c)
            parts.append("" if e is None else f"{e:.6g}")
        lines.append(",".join(parts))
    return "\n".join(lines) + "\n"
