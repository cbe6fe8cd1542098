"""Saddle-point assembly of the dual-mixed Poisson scheme.

Unknowns are the flux sigma in the vector CR space (2E dofs) and u in P0
(T dofs).  The assembled symmetric system is

    [[ A, -B^T], [[sigma],   [[-G],
     [-B,  0 ]]   [u    ]] =  [-F]]

with A the vector CR mass matrix plus the interior-edge normal-jump
penalty (gamma = 1/|e|), B the row-per-triangle divergence coupling,
G(tau) = int_Gamma g (tau.n) and F(v) = int_Omega f v.  Boundary edges,
including the crack lips, carry no penalty and no coupling.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ._forms import (boundary_data_vector, divergence_matrix, dump_system,
                     penalty_matrix, vector_mass_matrix, volume_data_vector)

__all__ = ["SaddleSystem", "assemble_a_s", "assemble_b", "assemble_rhs",
           "assemble_poisson_system", "dump_system"]


@dataclass
class SaddleSystem:
    """Assembled symmetric indefinite system with block metadata."""

    matrix: sparse.csr_matrix
    rhs: np.ndarray
    n_sigma: int
    n_u: int
    gamma: np.ndarray            # penalty value per interior edge
    a_block: sparse.csr_matrix
    b_block: sparse.csr_matrix
    meta: dict = field(default_factory=dict)

    @property
    def ndof(self):
        return self.n_sigma + self.n_u

    def split(self, x):
        """Split a solution vector into (sigma coefficients, u values)."""
        return x[:self.n_sigma], x[self.n_sigma:self.ndof]


def assemble_a_s(mesh, gamma_scale=1.0, quad_degree=4):
    """Block A: vector CR mass plus the jump penalty (2E x 2E)."""
    return (vector_mass_matrix(mesh)
            + penalty_matrix(mesh, degree=quad_degree,
                             gamma_scale=gamma_scale))


def assemble_b(mesh):
    """Block B: b(tau, v) = int v div_h tau on P0 x vector CR (T x 2E)."""
    return divergence_matrix(mesh)


def assemble_rhs(mesh, case, quad_edge=15, quad_tri=8):
    """Functional vectors (G, F); the system right-hand side is [-G; -F]."""
    G = boundary_data_vector(mesh, case.g, degree=quad_edge,
                             side_aware=case.side_aware)
    F = volume_data_vector(mesh, case.f, ncomp=1, degree=quad_tri)
    return G, F


def assemble_poisson_system(mesh, case, gamma_scale=1.0, quad_assembly=4,
                            quad_data_edge=15, quad_data_tri=8):
    """Full saddle-point system for a Poisson manufactured case."""
    if case.kind != "poisson":
        raise ValueError(f"case {case.tag} is not a Poisson case")
    if case.domain != mesh.domain:
        raise ValueError(f"case {case.tag} lives on {case.domain}, "
                         f"mesh is {mesh.domain}")
    A = assemble_a_s(mesh, gamma_scale=gamma_scale, quad_degree=quad_assembly)
    B = assemble_b(mesh)
    G, F = assemble_rhs(mesh, case, quad_edge=quad_data_edge,
                        quad_tri=quad_data_tri)
    M = sparse.bmat([[A, -B.T], [-B, None]], format="csr")
    rhs = np.concatenate([-G, -F])
    gamma = gamma_scale / mesh.edge_len[mesh.interior_edges]
    return SaddleSystem(matrix=M, rhs=rhs, n_sigma=2 * mesh.num_edges,
                        n_u=mesh.num_triangles, gamma=gamma,
                        a_block=A, b_block=B,
                        meta={"case": case.tag, "level": mesh.level,
                              "quad_data_tri": quad_data_tri})
