"""Manifold fitting by a single truncated-Gaussian mean-shift step with r = c_D sigma."""

from .estimator import (
    EmptyNeighborhood,
    EstimateResult,
    SpatialIndex,
    build_index,
    default_index,
    estimate,
    estimate_batch,
    radius_query,
)
from .geometry import (
    AnalyticManifold,
    DegenerateProjection,
    OutOfTube,
    TangentFrame,
    Unsupported,
    circle,
    fermat_quartic,
    mean_curvature_vector,
    project,
    shape_determinant,
    sphere,
    tangent_frame,
    torus,
)
from .kernel import Cutoff, KernelConfig, bandwidth_constant, kernel_weight, lower_incomplete_gamma
from .sampling import (
    NoiseConfig,
    PointCloud,
    Provenance,
    add_noise,
    read_point_cloud,
    sample_test_points,
    sample_uniform,
    write_point_cloud,
)

__version__ = "0.1.0"
