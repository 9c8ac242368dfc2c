"""
Geometry core: triangle meshes, signed distance grids and primitives.
"""

from .mesh import TriMesh, concatenate, edge_manifold_defects, is_watertight, mean_edge_length
from .sdf import SdfGrid, marching_cubes, mesh_to_sdf, resample_grid, sample_sdf, sdf_gradient

__all__ = [
    "SdfGrid",
    "TriMesh",
    "concatenate",
    "edge_manifold_defects",
    "is_watertight",
    "marching_cubes",
    "mean_edge_length",
    "mesh_to_sdf",
    "resample_grid",
    "sample_sdf",
    "sdf_gradient",
]
