"""Command-line entry point for convergence studies.

Example::

    crmixed --case p1 --kmax 3 --export csv,vtk --out results/

Settings come from an optional flat key-value config file, overridden by
command-line flags.  The text table always goes to standard output; CSV
and VTK files land in the output directory.  Exit status is nonzero on
solver failure, and with ``--assert`` also on any violated run-time
invariant.
"""

import argparse
import os
import sys

from .error import ErrorCheckFailure
from .solver import SolverError
from .study import (StudyConfig, config_from_strings, format_csv,
                    format_table, parse_config_file, run_study)
from .vtkio import solution_vtk


def build_parser():
    parser = argparse.ArgumentParser(
        prog="crmixed",
        description="Convergence studies for the dual-mixed CR/P0 "
                    "discretization of Poisson and Stokes problems.")
    parser.add_argument("--config", help="flat key = value settings file")
    parser.add_argument("--case", choices=["p1", "p2", "p3", "s1", "s2", "s3"])
    parser.add_argument("--kmax", type=int, help="finest refinement level")
    parser.add_argument("--nu", help="comma list of viscosities (case s1)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--solver", choices=["direct", "iterative"])
    parser.add_argument("--solver-tol", type=float, dest="solver_tol")
    parser.add_argument("--quad-err", type=int, dest="quad_err",
                        help="triangle degree for error norms "
                             "(default: 8 smooth, 10 singular)")
    parser.add_argument("--gamma-scale", type=float, dest="gamma_scale",
                        help="scalar multiple of the 1/|e| penalty")
    parser.add_argument("--export", help="comma list from csv,table,vtk")
    parser.add_argument("--assert", action="store_true", dest="strict",
                        help="fail (exit nonzero) on violated invariants")
    return parser


def config_from_args(args):
    cfg = parse_config_file(args.config) if args.config else StudyConfig()
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("config", "strict") and v is not None}
    cfg = config_from_strings({k: str(v) for k, v in overrides.items()},
                              base=cfg)
    if args.strict:
        cfg.strict = True
    return cfg.validate()


def emit_outputs(records, config, nu=None):
    """Write the table to stdout and the requested files; returns paths."""
    written = []
    suffix = f"_nu{nu:g}" if (config.case == "s1" and nu is not None) else ""
    print(format_table(records, config.case, nu=nu), end="")
    if "csv" in config.export or "table" in config.export:
        os.makedirs(config.out, exist_ok=True)
    if "table" in config.export:
        path = os.path.join(config.out, f"table_{config.case}{suffix}.txt")
        with open(path, "w") as fh:
            fh.write(format_table(records, config.case, nu=nu))
        written.append(path)
    if "csv" in config.export:
        path = os.path.join(config.out, f"study_{config.case}{suffix}.csv")
        with open(path, "w") as fh:
            fh.write(format_csv(records))
        written.append(path)
    return written


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    nus = config.nu if config.case == "s1" else (None,)
    status = 0
    for nu in nus:
        vtk_writer = None
        written = []
        if "vtk" in config.export:
            os.makedirs(config.out, exist_ok=True)
            suffix = f"_nu{nu:g}" if nu is not None else ""

            def vtk_writer(mesh, sigma_h, u_h, k, _sfx=suffix):
                path = os.path.join(
                    config.out, f"fields_{config.case}{_sfx}_iter{k}.vtk")
                solution_vtk(path, mesh, sigma_h, u_h,
                             title=f"{config.case}{_sfx} iteration {k}")
                written.append(path)

        try:
            records, _ = run_study(config, nu=nu, vtk_writer=vtk_writer)
        except SolverError as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            partial = getattr(exc, "partial_records", [])
            if partial:
                emit_outputs(partial, config, nu=nu)
            return 1
        except ErrorCheckFailure as exc:
            print(f"invariant violated: {exc}", file=sys.stderr)
            return 1

        written += emit_outputs(records, config, nu=nu)
        for path in written:
            print(f"wrote {path}")
    return status


if __name__ == "__main__":
    sys.exit(main())
