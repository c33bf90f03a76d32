"""Point-cloud smoothing by moving least squares and locally optimal projection."""

from __future__ import annotations

__version__ = "0.1.0"

from .core import Aabb, PointCloud, TriangleSoup, bounding_box
from .errors import (DegenerateNeighborhood, EmptyCloud, EmptyData, EmptyMesh, InvalidParam,
                     NoConvergence, ParseError, ReconError, SingularSystem, TooFewNeighbors,
                     WorkerFailure)
from .kernels import KernelParams, eta, theta
from .lop import LopParams, LopResult, lop_project
from .metrics import DeviationReport, deviation, deviation_to_mesh
from .mls import MlsParams, ProjectionOutcome, SmoothSummary, Status, project_point, smooth_cloud
from .noise import NoiseParams, add_noise
from .parallel import exchange_borders, parallel_smooth, partition
from .spatial import SpatialIndex
from .wls import BivariatePolynomial, LocalFrame, fit_local_polynomial, fit_reference_plane

__all__ = [
    "__version__",
    "Aabb",
    "PointCloud",
    "TriangleSoup",
    "bounding_box",
    "DegenerateNeighborhood",
    "EmptyCloud",
    "EmptyData",
    "EmptyMesh",
    "InvalidParam",
    "NoConvergence",
    "ParseError",
    "ReconError",
    "SingularSystem",
    "TooFewNeighbors",
    "WorkerFailure",
    "KernelParams",
    "eta",
    "theta",
    "LopParams",
    "LopResult",
    "lop_project",
    "DeviationReport",
    "deviation",
    "deviation_to_mesh",
    "MlsParams",
    "ProjectionOutcome",
    "SmoothSummary",
    "Status",
    "project_point",
    "smooth_cloud",
    "NoiseParams",
    "add_noise",
    "exchange_borders",
    "parallel_smooth",
    "partition",
    "SpatialIndex",
    "BivariatePolynomial",
    "LocalFrame",
    "fit_local_polynomial",
    "fit_reference_plane",
]
