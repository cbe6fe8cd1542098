"""Crouzeix-Raviart and piecewise-constant spaces on a mesh.

The scalar CR space has one degree of freedom per edge: the mean value of
the function over that edge.  On a triangle the basis function tied to
edge i (the edge opposite vertex i) is phi_i = 1 - 2*lambda_i, which has
edge mean 1 on its own edge and 0 on the other two.  Vector and tensor
fields use one CR coefficient block per component, stored component-major
(dof = comp * n_edges + edge); tensor components are row major
(s11, s12, s21, s22).  The P0 space has one constant per triangle per
component.

The lowest-order Raviart-Thomas interpolant is provided as a test utility:
it reconstructs, from the edge-mean fluxes of a vector CR field, the
unique RT0 field with pointwise-continuous normal component.
"""

import numpy as np

from .quadrature import edge_rule, map_edge_to_physical, map_tri_to_physical, tri_rule

_NUDGE = 1e-10


class SpaceError(Exception):
    pass


class DofMap:
    """Global numbering for a CR or P0 space with `ncomp` components."""

    def __init__(self, mesh, kind, ncomp=1):
        if kind not in ("cr", "p0"):
            raise ValueError(f"unknown space kind {kind!r}")
        if ncomp not in (1, 2, 4):
            raise ValueError("ncomp must be 1, 2 or 4")
        self.mesh = mesh
        self.kind = kind
        self.ncomp = ncomp
        self.entities = mesh.num_edges if kind == "cr" else mesh.num_triangles
        self.ndof = ncomp * self.entities

    def index(self, comp, entity):
        return comp * self.entities + entity

    def __repr__(self):
        return f"DofMap({self.kind}, ncomp={self.ncomp}, ndof={self.ndof})"


def lambda_grads(mesh):
    """Gradients of the barycentric coordinates, shape (T, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    out = np.empty((mesh.num_triangles, 3, 2))
    for i in range(3):
        e = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        out[:, i, 0] = -e[:, 1]
        out[:, i, 1] = e[:, 0]
    out /= (2.0 * mesh.tri_area)[:, None, None]
    return out


def barycentric(mesh, tris, pts):
    """Barycentric coordinates of `pts` (..., 2) w.r.t. triangles `tris`.

    `tris` must broadcast against the leading shape of `pts`.
    """
    grads = lambda_grads(mesh)[tris]
    cent = mesh.tri_centroids()[tris]
    return 1.0 / 3.0 + np.einsum("...ic,...c->...i", grads, pts - cent)


def cr_phi(lam):
    """CR basis values from barycentric coordinates (same shape)."""
    return 1.0 - 2.0 * np.asarray(lam)


def cr_basis_eval(mesh, tri, local_edge, point):
    """Value and (constant) gradient of one CR basis function at a point."""
    lam = barycentric(mesh, np.asarray(tri), np.asarray(point, dtype=float))
    grad = -2.0 * lambda_grads(mesh)[tri, local_edge]
    return cr_phi(lam[..., local_edge]), grad


class FieldCR:
    """Coefficient vector of a (possibly vector/tensor) CR field."""

    def __init__(self, dofmap, coefficients):
        if dofmap.kind != "cr":
            raise ValueError("FieldCR needs a CR dofmap")
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (dofmap.ndof,):
            raise ValueError("coefficient length does not match dofmap")
        self.dofmap = dofmap
        self.coefficients = coefficients

    def tri_coefs(self):
        """Per-triangle coefficients, shape (T, 3, ncomp)."""
        mesh = self.dofmap.mesh
        c = self.coefficients.reshape(self.dofmap.ncomp, mesh.num_edges)
        return c[:, mesh.tri_edges].transpose(1, 2, 0)

    def eval_at(self, tris, pts):
        """Field values at `pts` inside triangles `tris`; (..., ncomp)."""
        mesh = self.dofmap.mesh
        lam = barycentric(mesh, tris, pts)
        phi = cr_phi(lam)
        c = self.coefficients.reshape(self.dofmap.ncomp, mesh.num_edges)
        coefs = c[:, mesh.tri_edges[tris]]            # (ncomp, ..., 3)
        coefs = np.moveaxis(coefs, 0, -1)             # (..., 3, ncomp)
        return np.einsum("...i,...ic->...c", phi, coefs)

    def tri_gradients(self):
        """Constant per-triangle gradients, shape (T, ncomp, 2)."""
        mesh = self.dofmap.mesh
        grads = -2.0 * lambda_grads(mesh)             # (T, 3, 2)
        return np.einsum("tic,tid->tcd", self.tri_coefs(), grads)

    def tri_divergence(self):
        """Element-wise divergence (row-wise for tensors).

        Shape (T,) for a vector field, (T, 2) for a tensor field.
        """
        g = self.tri_gradients()                      # (T, ncomp, 2)
        if self.dofmap.ncomp == 2:
            return g[:, 0, 0] + g[:, 1, 1]
        if self.dofmap.ncomp == 4:
            return np.stack([g[:, 0, 0] + g[:, 1, 1],
                             g[:, 2, 0] + g[:, 3, 1]], axis=1)
        raise ValueError("divergence needs a vector or tensor field")


class FieldP0:
    """Piecewise-constant field, one value per triangle per component."""

    def __init__(self, dofmap, coefficients):
        if dofmap.kind != "p0":
            raise ValueError("FieldP0 needs a P0 dofmap")
        coefficients = np.asarray(coefficients, dtype=float)
        if coefficients.shape != (dofmap.ndof,):
            raise ValueError("coefficient length does not match dofmap")
        self.dofmap = dofmap
        self.coefficients = coefficients

    def tri_values(self):
        """Per-triangle values, shape (T, ncomp)."""
        mesh = self.dofmap.mesh
        return self.coefficients.reshape(self.dofmap.ncomp,
                                         mesh.num_triangles).T

    def eval_at(self, tris, pts):
        vals = self.tri_values()[tris]
        return vals


def edge_quad_points(mesh, edge_ids, degree, side_aware=False):
    """Mapped edge quadrature points and weights for the listed edges.

    With ``side_aware`` the points are pulled a relative 1e-10 towards the
    centroid of the owning (first-neighbor) triangle, which selects the
    correct polar branch for fields that are two-valued across the crack
    slit without affecting smooth data beyond roundoff.
    """
    rule = edge_rule(degree)
    a = mesh.vertices[mesh.edges[edge_ids, 0]]
    b = mesh.vertices[mesh.edges[edge_ids, 1]]
    pts, w = map_edge_to_physical(rule, a, b)
    if side_aware:
        cent = mesh.tri_centroids()[mesh.edge_tris[edge_ids, 0]]
        pts = pts + _NUDGE * (cent[:, None, :] - pts)
    return pts, w


def interp_cr(mesh, fun, ncomp=1, degree=8, side_aware=False):
    """CR interpolant: every coefficient is the edge mean of `fun`.

    ``fun`` maps (..., 2) points to (...,) scalars or (..., ncomp) arrays.
    Raises with the offending edge id if the data evaluates non-finite.
    """
    dofmap = DofMap(mesh, "cr", ncomp)
    edge_ids = np.arange(mesh.num_edges)
    pts, w = edge_quad_points(mesh, edge_ids, degree, side_aware)
    vals = np.asarray(fun(pts), dtype=float)
    if ncomp == 1 and vals.shape == pts.shape[:-1]:
        vals = vals[..., None]
    if not np.isfinite(vals).all():
        bad = int(np.argwhere(~np.isfinite(vals))[0][0])
        raise SpaceError(f"non-finite data on edge {bad}")
    means = np.einsum("eq,eqc->ec", w, vals) / mesh.edge_len[:, None]
    return FieldCR(dofmap, means.T.ravel())


def project_p0(mesh, fun, ncomp=1, degree=8):
    """L2 projection onto piecewise constants (per-triangle means)."""
    dofmap = DofMap(mesh, "p0", ncomp)
    v = mesh.vertices[mesh.triangles]
    pts, w = map_tri_to_physical(tri_rule(degree), v[:, 0], v[:, 1], v[:, 2])
    vals = np.asarray(fun(pts), dtype=float)
    if ncomp == 1 and vals.shape == pts.shape[:-1]:
        vals = vals[..., None]
    if not np.isfinite(vals).all():
        bad = int(np.argwhere(~np.isfinite(vals))[0][0])
        raise SpaceError(f"non-finite data on triangle {bad}")
    means = np.einsum("tq,tqc->tc", w, vals) / mesh.tri_area[:, None]
    return FieldP0(dofmap, means.T.ravel())


class FieldRT:
    """Lowest-order Raviart-Thomas field given by edge fluxes.

    The coefficient on edge e is the integral of the normal component
    (w.r.t. the edge's stored global normal).  On a triangle the basis
    dual to these fluxes is (x - opposite_vertex) / (2 |T|), signed by the
    orientation of the global normal.
    """

    def __init__(self, mesh, fluxes):
        self.mesh = mesh
        self.fluxes = np.asarray(fluxes, dtype=float)

    def _signs(self):
        mesh = self.mesh
        first = mesh.edge_tris[mesh.tri_edges, 0]     # (T, 3)
        return np.where(first == np.arange(mesh.num_triangles)[:, None],
                        1.0, -1.0)

    def eval_at(self, tris, pts):
        mesh = self.mesh
        tris = np.asarray(tris)
        opp = mesh.vertices[mesh.triangles]           # (T, 3, 2)
        coef = (self._signs() * self.fluxes[mesh.tri_edges]
                / (2.0 * mesh.tri_area)[:, None])     # (T, 3)
        c = coef[tris]                                # (..., 3)
        o = opp[tris]                                 # (..., 3, 2)
        diff = pts[..., None, :] - o
        return np.einsum("...i,...ic->...c", c, diff)

    def tri_divergence(self):
        mesh = self.mesh
        net = (self._signs() * self.fluxes[mesh.tri_edges]).sum(axis=1)
        return net / mesh.tri_area


def interp_rt(mesh, field, degree=4):
    """RT0 interpolant of a vector CR field (test utility).

    The flux on each edge is the integral of the averaged trace dotted
    with the global normal; for CR fields both sides give the same value
    because the edge means are shared.
    """
    if field.dofmap.ncomp != 2:
        raise ValueError("RT interpolation needs a vector CR field")
    edge_ids = np.arange(mesh.num_edges)
    pts, w = edge_quad_points(mesh, edge_ids, degree)
    t0 = mesh.edge_tris[:, 0]
    vals = field.eval_at(t0[:, None], pts)
    interior = mesh.edge_tris[:, 1] >= 0
    t1 = np.where(interior, mesh.edge_tris[:, 1], t0)
    vals_other = field.eval_at(t1[:, None], pts)
    avg = 0.5 * (vals + vals_other)
    flux = np.einsum("eq,eqc,ec->e", w, avg, mesh.edge_normal)
    return FieldRT(mesh, flux)
