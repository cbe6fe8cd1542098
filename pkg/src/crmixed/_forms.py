"""Shared element/edge machinery behind the Poisson and Stokes assemblies.

Everything here works on the *vector* CR space (two components, dofs
numbered comp * E + edge).  The Stokes assembly reuses these pieces per
tensor row, because the normal jump, the row-wise divergence and the
boundary functional of a tensor field all act row by row.
"""

import numpy as np
from scipy import sparse

from .quadrature import map_tri_to_physical, tri_rule
from .space import barycentric, cr_phi, edge_quad_points, lambda_grads


def cr_mass_lumped(mesh):
    """Diagonal of the scalar CR mass matrix, shape (E,).

    The element CR mass matrix is exactly (|T|/3) * I, so the global
    matrix is diagonal with entry sum(|T|/3) over the neighbors of the
    edge.  The same numbers are the integrals of the basis functions,
    since int_T phi_i = |T|/3 as well.
    """
    diag = np.zeros(mesh.num_edges)
    np.add.at(diag, mesh.tri_edges.ravel(),
              np.repeat(mesh.tri_area / 3.0, 3))
    return diag


def vector_mass_matrix(mesh):
    """Mass matrix of the vector CR space (2E x 2E, diagonal)."""
    diag = cr_mass_lumped(mesh)
    return sparse.diags(np.concatenate([diag, diag])).tocsr()


def edge_jump_table(mesh, degree):
    """Jump traces of all vector CR basis functions on interior edges.

    Returns ``(ie, wgamma, jump, cols)`` where for each interior edge the
    12 local dofs are ordered (side, component, local edge):

    * ``jump[e, q, k]`` is the contribution of local dof k to the scalar
      normal jump at quadrature point q,
    * ``cols[e, k]`` is its global vector-CR dof,
    * ``wgamma[e, q]`` is the quadrature weight times gamma_e = 1/|e|.

    The shared edge dof appears once per side with traces +1 and -1, so
    its net jump cancels when the coordinate triplets are summed.
    """
    ie = mesh.interior_edges
    pts, w = edge_quad_points(mesh, ie, degree)
    t0 = mesh.edge_tris[ie, 0]
    t1 = mesh.edge_tris[ie, 1]
    phi0 = cr_phi(barycentric(mesh, t0[:, None], pts))   # (n, q, 3)
    phi1 = cr_phi(barycentric(mesh, t1[:, None], pts))
    nu = mesh.edge_normal[ie]                            # (n, 2)
    n_e, n_q = pts.shape[:2]

    jump = np.empty((n_e, n_q, 12))
    cols = np.empty((n_e, 12), dtype=np.int64)
    E = mesh.num_edges
    for side, (tt, phi, sign) in enumerate([(t0, phi0, 1.0),
                                            (t1, phi1, -1.0)]):
        loc_edges = mesh.tri_edges[tt]                   # (n, 3)
        for c in range(2):
            k = 6 * side + 3 * c
            jump[:, :, k:k + 3] = sign * nu[:, None, c, None] * phi
            cols[:, k:k + 3] = c * E + loc_edges
    wgamma = w / mesh.edge_len[ie][:, None]
    return ie, wgamma, w, jump, cols


def penalty_matrix(mesh, degree=4, gamma_scale=1.0):
    """Interior-edge normal-jump penalty on the vector CR space.

    Assembles sum over interior edges of int_e gamma <jump sigma, jump tau>
    with gamma = gamma_scale / |e|; boundary edges (crack lips included)
    contribute nothing.
    """
    _, wgamma, _, jump, cols = edge_jump_table(mesh, degree)
    local = np.einsum("eq,eqk,eql->ekl", gamma_scale * wgamma, jump, jump)
    rows = np.broadcast_to(cols[:, :, None], local.shape)
    cls = np.broadcast_to(cols[:, None, :], local.shape)
    n = 2 * mesh.num_edges
    return sparse.coo_matrix(
        (local.ravel(), (rows.ravel(), cls.ravel())), shape=(n, n)).tocsr()


def divergence_matrix(mesh):
    """Coupling int_T div(tau) per triangle: shape (T, 2E), exact.

    Row t, column (c*E + e_i) holds |T| * d(phi_i)/dx_c, which is the
    exact integral because CR divergences are constant per element.
    """
    grads = -2.0 * lambda_grads(mesh)                    # (T, 3, 2)
    T, E = mesh.num_triangles, mesh.num_edges
    rows = np.repeat(np.arange(T), 6)
    cols = np.empty((T, 2, 3), dtype=np.int64)
    vals = np.empty((T, 2, 3))
    for c in range(2):
        cols[:, c, :] = c * E + mesh.tri_edges
        vals[:, c, :] = mesh.tri_area[:, None] * grads[:, :, c]
    return sparse.coo_matrix(
        (vals.ravel(), (rows, cols.ravel())), shape=(T, 2 * E)).tocsr()


def boundary_data_vector(mesh, gfun, degree=15, side_aware=False):
    """Boundary functional int_Gamma g (tau . n) on the vector CR space.

    ``gfun`` is scalar boundary data; every basis function of the single
    neighbor triangle leaves a trace on the edge, so each boundary edge
    contributes to six vector dofs.
    """
    be = mesh.boundary_edges
    pts, w = edge_quad_points(mesh, be, degree, side_aware=side_aware)
    gvals = np.asarray(gfun(pts), dtype=float)
    if not np.isfinite(gvals).all():
        bad = int(be[np.argwhere(~np.isfinite(gvals))[0][0]])
        raise ValueError(f"non-finite boundary data on edge {bad}")
    t0 = mesh.edge_tris[be, 0]
    phi = cr_phi(barycentric(mesh, t0[:, None], pts))    # (n, q, 3)
    nu = mesh.edge_normal[be]
    E = mesh.num_edges
    out = np.zeros(2 * E)
    for c in range(2):
        contrib = np.einsum("eq,eq,eqi->ei", w, gvals * nu[:, None, c], phi)
        np.add.at(out, c * E + mesh.tri_edges[t0], contrib)
    return out


def volume_data_vector(mesh, ffun, ncomp=1, degree=8):
    """Per-triangle integrals of the source, shape (ncomp*T,)."""
    v = mesh.vertices[mesh.triangles]
    pts, w = map_tri_to_physical(tri_rule(degree), v[:, 0], v[:, 1], v[:, 2])
    vals = np.asarray(ffun(pts), dtype=float)
    if ncomp == 1 and vals.shape == pts.shape[:-1]:
        vals = vals[..., None]
    if not np.isfinite(vals).all():
        bad = int(np.argwhere(~np.isfinite(vals))[0][0])
        raise ValueError(f"non-finite volume data on triangle {bad}")
    return np.einsum("tq,tqc->ct", w, vals).ravel()


def dump_system(system, path):
    """Matrix-market dump of an assembled system (matrix plus rhs)."""
    from scipy.io import mmwrite

    mmwrite(str(path), system.matrix.tocoo())
    np.savetxt(str(path) + ".rhs.txt", system.rhs)
