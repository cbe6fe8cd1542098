"""Sparse solvers for the assembled symmetric indefinite systems.

The default path is a sparse LU factorization with fill-reducing column
ordering, which handles every desk-scale system in well under a second.
A MINRES path with a positive diagonal preconditioner cross-checks the
direct solves and scales further; both must meet the same relative
residual contract, and a solve that cannot is reported as an error, never
returned silently.
"""

import time
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, minres, splu


class SolverError(Exception):
    """Factorization breakdown or unconverged iteration, with diagnostics."""


@dataclass
class SolveReport:
    x: np.ndarray
    relres: float
    method: str
    iterations: int
    wall_time: float


def _relres(matrix, x, b):
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return float(np.linalg.norm(matrix @ x))
    return float(np.linalg.norm(matrix @ x - b) / bnorm)


def solve(system, tol=1e-10, method="direct"):
    """Solve an assembled system to relative residual <= tol."""
    matrix = system.matrix.tocsc()
    b = np.asarray(system.rhs, dtype=float)
    if not np.isfinite(b).all():
        raise SolverError("right-hand side contains non-finite entries")
    if method == "direct":
        return _solve_direct(matrix, b, tol)
    if method == "iterative":
        return _solve_minres(matrix, b, tol)
    raise ValueError(f"unknown solver method {method!r}")


def _solve_direct(matrix, b, tol):
    start = time.perf_counter()
    try:
        lu = splu(matrix)
        x = lu.solve(b)
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed for "
                          f"{matrix.shape[0]}x{matrix.shape[1]} system: "
                          f"{exc}") from exc
    res = _relres(matrix, x, b)
    if not np.isfinite(x).all() or res > tol:
        raise SolverError(f"direct solve residual {res:.3e} exceeds "
                          f"tolerance {tol:.1e} (n = {matrix.shape[0]})")
    return SolveReport(x=x, relres=res, method="direct", iterations=0,
                       wall_time=time.perf_counter() - start)


def _solve_minres(matrix, b, tol):
    start = time.perf_counter()
    n = matrix.shape[0]
    diag = np.abs(matrix.diagonal())
    scale = diag.max() if diag.size else 1.0
    diag[diag < 1e-14 * max(scale, 1.0)] = 1.0
    precond = LinearOperator((n, n), matvec=lambda r: r / diag)

    count = [0]

    def cb(_):
        count[0] += 1

    maxiter = 20 * n
    # The scipy stopping test sees the preconditioned residual, which can
    # sit a few orders above the true one; tighten until the contract on
    # the true residual holds.
    x = None
    info = 0
    res = np.inf
    for rtol in (0.1 * tol, 1e-3 * tol, 1e-5 * tol, 1e-7 * tol):
        left = maxiter - count[0]
        if left <= 0:
            break
        x, info = minres(matrix, b, x0=x, rtol=rtol, maxiter=left,
                         M=precond, callback=cb)
        res = _relres(matrix, x, b)
        if res <= tol:
            break
    if x is None or res > tol:
        raise SolverError(f"MINRES stalled at residual {res:.3e} after "
                          f"{count[0]} iterations (cap {maxiter}, "
                          f"info={info})")
    return SolveReport(x=x, relres=res, method="iterative",
                       iterations=count[0],
                       wall_time=time.perf_counter() - start)
