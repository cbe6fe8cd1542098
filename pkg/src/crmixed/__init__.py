"""Dual-mixed Crouzeix-Raviart/P0 discretization of Poisson and Stokes
pseudostress problems on 2-D triangulations, with convergence studies."""

from .mesh import build_initial_mesh, refine_uniform

__all__ = ["build_initial_mesh", "refine_uniform"]
__version__ = "0.1.0"
