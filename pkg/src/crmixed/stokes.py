"""Assembly of the practical Stokes pseudostress scheme.

Unknowns are the tensor pseudostress in the CR space (4E dofs, components
s11, s12, s21, s22), the velocity in P0 (2T dofs) and one scalar Lagrange
multiplier enforcing the zero-mean trace.  The symmetric system is

    [[A_nu, B^T, t],  [[sigma],   [[G],
     [B,    0,   0],   [u    ], =  [F],
     [t^T,  0,   0]]   [phi  ]]    [0]]

with A_nu = (1/nu)(deviatoric mass + jump penalty), B the row-wise
divergence coupling, t[dof] = (1/nu) int_Omega tr(basis) (nonzero only on
the diagonal components s11, s22), G(tau) = int_Gamma (tau n).g and
F(v) = -int_Omega f.v.  At the solution the multiplier vanishes, which is
checked at run time.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ._forms import (boundary_data_vector, cr_mass_lumped, divergence_matrix,
                     dump_system, penalty_matrix, volume_data_vector)
from .space import edge_quad_points

__all__ = ["StokesSystem", "deviator", "assemble_a_h", "assemble_b_h",
           "trace_functional", "assemble_stokes_system", "dump_system"]


def deviator(tau):
    """Trace-free part tau - (tr tau / 2) I of (..., 2, 2) tensors."""
    tau = np.asarray(tau, dtype=float)
    tr = tau[..., 0, 0] + tau[..., 1, 1]
    out = tau.copy()
    out[..., 0, 0] -= 0.5 * tr
    out[..., 1, 1] -= 0.5 * tr
    return out


@dataclass
class StokesSystem:
    """Assembled practical scheme with the trace multiplier row."""

    matrix: sparse.csr_matrix
    rhs: np.ndarray
    n_sigma: int
    n_u: int
    nu: float
    gamma: np.ndarray
    a_block: sparse.csr_matrix
    b_block: sparse.csr_matrix
    trace_vec: np.ndarray        # int_Omega tr(basis), without the 1/nu
    meta: dict = field(default_factory=dict)

    @property
    def ndof(self):
        return self.n_sigma + self.n_u + 1

    def split(self, x):
        """Split a solution vector into (sigma, u, multiplier)."""
        return (x[:self.n_sigma],
                x[self.n_sigma:self.n_sigma + self.n_u],
                float(x[self.n_sigma + self.n_u]))


def _deviatoric_mass(mesh):
    """int_Omega dev(sigma):dev(tau) over the tensor CR space (4E x 4E).

    With the scalar CR mass diagonal m_e, the integrand
    dev(s):dev(t) = (s11-s22)(t11-t22)/2 + s12 t12 + s21 t21
    gives per-edge 4x4 blocks coupling only the diagonal components.
    """
    m = cr_mass_lumped(mesh)
    E = mesh.num_edges
    eid = np.arange(E)
    rows, cols, vals = [], [], []
    for ca, cb, w in [(0, 0, 0.5), (0, 3, -0.5), (3, 0, -0.5), (3, 3, 0.5),
                      (1, 1, 1.0), (2, 2, 1.0)]:
        rows.append(ca * E + eid)
        cols.append(cb * E + eid)
        vals.append(w * m)
    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(4 * E, 4 * E)).tocsr()


def _rowwise(mat_vec, E):
    """Lift a vector-CR operator to both rows of the tensor space."""
    return sparse.block_diag([mat_vec, mat_vec], format="csr")


def assemble_a_h(mesh, nu, gamma_scale=1.0, quad_degree=4):
    """Block A_nu = (1/nu) (deviatoric mass + vector jump penalty)."""
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    pen = penalty_matrix(mesh, degree=quad_degree, gamma_scale=gamma_scale)
    A = _deviatoric_mass(mesh) + _rowwise(pen, mesh.num_edges)
    return (A / nu).tocsr()


def assemble_b_h(mesh):
    """Block B: b_h(tau, v) = int v . div_h(tau), row-wise (2T x 4E)."""
    return _rowwise(divergence_matrix(mesh), mesh.num_edges)


def trace_functional(mesh):
    """int_Omega tr(basis) per tensor dof, shape (4E,).

    Nonzero exactly on the diagonal components: the entry of an s11/s22
    dof is the sum of |T|/3 over the edge's neighbor triangles.
    """
    m = cr_mass_lumped(mesh)
    E = mesh.num_edges
    t = np.zeros(4 * E)
    t[0:E] = m
    t[3 * E:4 * E] = m
    return t


def boundary_compatibility(mesh, case, degree=15):
    """(integral of g.n over the boundary, L2 norm of g on the boundary).

    Uses the highest edge rule by default: on the coarsest meshes the
    compatibility defect of exactly divergence-free data is pure
    quadrature error, which the spare digits push below the warning
    threshold.
    """
    be = mesh.boundary_edges
    pts, w = edge_quad_points(mesh, be, degree, side_aware=case.side_aware)
    g = np.asarray(case.g(pts), dtype=float)
    flux = np.einsum("eq,eqc,ec->", w, g, mesh.edge_normal[be])
    norm = np.sqrt(np.einsum("eq,eqc,eqc->", w, g, g))
    return flux, norm


def assemble_stokes_system(mesh, case, nu=None, gamma_scale=1.0,
                           quad_assembly=4, quad_data_edge=15,
                           quad_data_tri=8):
    """Full practical-scheme system for a Stokes manufactured case."""
    if case.kind != "stokes":
        raise ValueError(f"case {case.tag} is not a Stokes case")
    if case.domain != mesh.domain:
        raise ValueError(f"case {case.tag} lives on {case.domain}, "
                         f"mesh is {mesh.domain}")
    nu = case.nu if nu is None else nu
    if nu <= 0:
        raise ValueError("viscosity must be positive")

    flux, gnorm = boundary_compatibility(mesh, case)
    if abs(flux) > 1e-8 * max(gnorm, 1e-300):
        warnings.warn(f"boundary data not compatible: int g.n = {flux:.3e} "
                      f"(|g| = {gnorm:.3e})", stacklevel=2)

    E = mesh.num_edges
    A = assemble_a_h(mesh, nu, gamma_scale=gamma_scale,
                     quad_degree=quad_assembly)
    B = assemble_b_h(mesh)
    tvec = trace_functional(mesh) / nu

    G = np.concatenate([
        boundary_data_vector(mesh, lambda p, r=r: case.g(p)[..., r],
                             degree=quad_data_edge,
                             side_aware=case.side_aware)
        for r in range(2)])
    F = -volume_data_vector(mesh, case.f, ncomp=2, degree=quad_data_tri)

    t_col = sparse.csr_matrix(tvec[:, None])
    M = sparse.bmat([[A, B.T, t_col],
                     [B, None, None],
                     [t_col.T, None, None]], format="csr")
    rhs = np.concatenate([G, F, [0.0]])
    gamma = gamma_scale / mesh.edge_len[mesh.interior_edges]
    return StokesSystem(matrix=M, rhs=rhs, n_sigma=4 * E,
                        n_u=2 * mesh.num_triangles, nu=nu, gamma=gamma,
                        a_block=A, b_block=B, trace_vec=nu * tvec,
                        meta={"case": case.tag, "level": mesh.level,
                              "quad_data_tri": quad_data_tri})
