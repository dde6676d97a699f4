"""Fragile Points Method for two-dimensional linear elasticity and fracture."""

from __future__ import annotations

__version__ = "0.1.0"

from .approximation import Material, elasticity_matrix
from .assembly import BoundarySpec, Discretization, GlobalSystem, Model, apply_constraints, assemble
from .benchmarks import build_benchmark
from .geometry import Domain, Partition, PointCloud, build_voronoi_partition, neighbor_support, partition_from_mesh
from .kernels import BACKEND as KERNEL_BACKEND
from .solve import FieldSolution, error_norms, postprocess, solve, solve_system

__all__ = [
    "BoundarySpec", "Discretization", "Domain", "FieldSolution", "GlobalSystem", "KERNEL_BACKEND", "Material",
    "Model", "Partition", "PointCloud", "__version__", "apply_constraints", "assemble", "build_benchmark",
    "build_voronoi_partition", "elasticity_matrix", "error_norms", "neighbor_support", "partition_from_mesh",
    "postprocess", "solve", "solve_system",
]
