"""Error norms, the exactly-checkable divergence identity, and the EOC.

All norms are plain element/edge quadrature loops, computed column by
column as in the study tables:

* ``sigma_error``    L2 norm of the flux/pseudostress error
* ``div_error``      L2 norm of the element-wise divergence error; per
  triangle this must equal the best-approximation error of the data,
  because the discrete divergence is the local mean of the exact one
* ``jump_seminorm``  penalty-weighted normal jumps over interior edges
  (the crack lips are boundary and excluded)
* ``u_error``        L2 norm of the primal/velocity error
* ``pressure_error`` recovers p_h = -tr(sigma_h)/2 and satisfies
  ||p - p_h|| <= (sqrt(2)/2) ||sigma - sigma_h||

The empirical order of convergence between consecutive refinement levels
is EOC(e_k) = -2 log(e_k / e_{k-1}) / log(DOFs_k / DOFs_{k-1}).
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .quadrature import map_tri_to_physical, tri_rule
from .space import edge_quad_points


class ErrorCheckFailure(Exception):
    """A runtime identity (divergence or pressure bound) was violated."""


def _tri_quad(mesh, degree):
    v = mesh.vertices[mesh.triangles]
    return map_tri_to_physical(tri_rule(degree), v[:, 0], v[:, 1], v[:, 2])


def _eval_field(mesh, fld, pts):
    tris = np.broadcast_to(np.arange(mesh.num_triangles)[:, None],
                           pts.shape[:2])
    return fld.eval_at(tris, pts)


def l2_error(mesh, exact, fld, degree=8):
    """Element-wise quadrature of |exact - fld|^2, square-rooted."""
    pts, w = _tri_quad(mesh, degree)
    ex = np.asarray(exact(pts), dtype=float)
    if ex.ndim == pts.ndim - 1:
        ex = ex[..., None]
    num = _eval_field(mesh, fld, pts)
    return float(np.sqrt((w[..., None] * (ex - num) ** 2).sum()))


def sigma_error(mesh, case, sigma_h, degree=None):
    deg = case.err_quad_tri if degree is None else degree
    return l2_error(mesh, case.sigma, sigma_h, degree=deg)


def u_error(mesh, case, u_h, degree=None):
    deg = case.err_quad_tri if degree is None else degree
    return l2_error(mesh, case.u, u_h, degree=deg)


def div_error(mesh, case, sigma_h, degree=None, data_degree=8,
              identity_tol=1e-10, check=True):
    """Global divergence error plus the per-triangle identity check.

    The discrete divergence is constant per triangle and the scheme forces
    it to the mean of the exact divergence taken with the assembly data
    quadrature (``data_degree``); the identity

        ||div(sigma - sigma_h)||_T = ||f - P0 f||_T

    therefore holds to solver accuracy when both sides use the same error
    rule.  ``identity_tol`` should be max(1e-10, 10 * solver residual
    scaled by the data); violations raise with the worst triangle id.
    """
    deg = case.err_quad_tri if degree is None else degree
    pts, w = _tri_quad(mesh, deg)
    ex = np.asarray(case.div_sigma(pts), dtype=float)
    if ex.ndim == pts.ndim - 1:
        ex = ex[..., None]
    div_h = np.asarray(sigma_h.tri_divergence(), dtype=float)
    if div_h.ndim == 1:
        div_h = div_h[:, None]
    per_tri_sq = (w[..., None] * (ex - div_h[:, None, :]) ** 2).sum(axis=(1, 2))
    total = float(np.sqrt(per_tri_sq.sum()))
    if not check:
        return total, np.sqrt(per_tri_sq)

    # best-approximation side: P0 projection with the data quadrature
    dpts, dw = _tri_quad(mesh, data_degree)
    dex = np.asarray(case.div_sigma(dpts), dtype=float)
    if dex.ndim == dpts.ndim - 1:
        dex = dex[..., None]
    means = np.einsum("tq,tqc->tc", dw, dex) / mesh.tri_area[:, None]
    best_sq = (w[..., None] * (ex - means[:, None, :]) ** 2).sum(axis=(1, 2))

    lhs = np.sqrt(per_tri_sq)
    rhs = np.sqrt(best_sq)
    gap = np.abs(lhs - rhs)
    worst = int(np.argmax(gap))
    if gap[worst] > identity_tol:
        raise ErrorCheckFailure(
            f"divergence best-approximation identity violated on triangle "
            f"{worst}: |{lhs[worst]:.6e} - {rhs[worst]:.6e}| = "
            f"{gap[worst]:.3e} > {identity_tol:.3e}")
    return total, lhs


def jump_seminorm(mesh, fld, gamma_scale=1.0, degree=4):
    """Penalty-weighted normal-jump seminorm over interior edges.

    Works for vector fields (scalar jump) and tensor fields (one jump
    component per row).
    """
    ie = mesh.interior_edges
    if len(ie) == 0:
        return 0.0
    pts, w = edge_quad_points(mesh, ie, degree)
    tr0 = fld.eval_at(mesh.edge_tris[ie, 0][:, None], pts)
    tr1 = fld.eval_at(mesh.edge_tris[ie, 1][:, None], pts)
    diff = tr0 - tr1
    nu = mesh.edge_normal[ie]
    ncomp = fld.dofmap.ncomp
    if ncomp == 2:
        jumps = np.einsum("eqc,ec->eq", diff, nu)[..., None]
    elif ncomp == 4:
        jumps = np.stack([
            diff[..., 0] * nu[:, None, 0] + diff[..., 1] * nu[:, None, 1],
            diff[..., 2] * nu[:, None, 0] + diff[..., 3] * nu[:, None, 1]],
            axis=-1)
    else:
        raise ValueError("jump seminorm needs a vector or tensor field")
    gamma = gamma_scale / mesh.edge_len[ie]
    return float(np.sqrt(np.einsum("e,eq,eqk->", gamma, w, jumps ** 2)))


def pressure_error(mesh, case, sigma_h, degree=None, sigma_err=None,
                   check=True):
    """L2 error of the recovered pressure p_h = -tr(sigma_h)/2.

    When ``sigma_err`` is supplied the bound
    e_p <= (sqrt(2)/2) e_sigma is asserted (it holds pointwise at the
    quadrature nodes, so only roundoff slack is allowed).
    """
    if case.p is None:
        raise ValueError(f"case {case.tag} has no pressure")
    deg = case.err_quad_tri if degree is None else degree
    pts, w = _tri_quad(mesh, deg)
    num = _eval_field(mesh, sigma_h, pts)
    p_h = -0.5 * (num[..., 0] + num[..., 3])
    e_p = float(np.sqrt((w * (case.p(pts) - p_h) ** 2).sum()))
    if check and sigma_err is not None:
        bound = (math.sqrt(2.0) / 2.0) * sigma_err
        if e_p > bound * (1.0 + 1e-10) + 1e-14:
            raise ErrorCheckFailure(
                f"pressure bound violated: {e_p:.6e} > sqrt(2)/2 * "
                f"{sigma_err:.6e}")
    return e_p


@dataclass
class StudyRecord:
    """One table row: errors at a refinement level plus its EOC values."""

    iteration: int
    dofs: int
    e_sigma: float
    e_div: float
    e_jump: float
    e_u: float
    e_p: Optional[float] = None
    eoc: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    ERROR_COLUMNS = ("e_sigma", "e_div", "e_jump", "e_u", "e_p")

    def energy(self, nu=None):
        """Combined energy norm of the component columns.

        For Stokes the flux part carries 1/nu and the velocity part nu,
        matching the scheme's natural norm.
        """
        if nu is None:
            return math.sqrt(self.e_sigma ** 2 + self.e_div ** 2
                             + self.e_jump ** 2 + self.e_u ** 2)
        return math.sqrt((self.e_sigma ** 2 + self.e_div ** 2
                          + self.e_jump ** 2) / nu + nu * self.e_u ** 2)


def eoc_value(e_prev, e_curr, dofs_prev, dofs_curr):
    """EOC between two levels; None when it is undefined."""
    if e_prev is None or e_curr is None:
        return None
    if e_prev <= 0.0 or e_curr <= 0.0:
        return None
    return -2.0 * math.log(e_curr / e_prev) / math.log(dofs_curr / dofs_prev)


def attach_eoc(records):
    """Fill the per-column EOC of each record from its predecessor."""
    for prev, curr in zip(records, records[1:]):
        if curr.dofs <= prev.dofs:
            raise ValueError("DOF counts must increase between levels")
        for col in StudyRecord.ERROR_COLUMNS:
            v = eoc_value(getattr(prev, col), getattr(curr, col),
                          prev.dofs, curr.dofs)
            if v is not None:
                curr.eoc[col] = v
    return records
