"""Non-neural core of a category-level 9-DoF pose pipeline.

Camera geometry and depth back-projection, PnP from projected cuboid
corners, image/depth feature fusion operators, the mesh-point training
loss, and the benchmark evaluation protocol.
"""

from .errors import (BehindCameraError, DegenerateConfigurationError, EmptyCloudError,
                     InvalidArgumentError, InvalidMeshError, MatchingError, PoseKitError,
                     RecordParseError, RecordValidationError)
from .geometry import (BinaryMask, CameraIntrinsics, DepthImage, PointCloud, Pose9DoF, backproject,
                       cuboid_corners, orthonormalize, project_point, sample_points)
from .symmetry import SymmetryClass
from .pnp import PnPConfig, PnPSolution, pnp_recover, reprojection_rmse
from .fusion import FeatureMap, FusionConfig, fuse, project_cloud_to_pixels, sample_image_features
from .mesh import (LossConfig, SampledVertexSet, TriangleMesh, mpl_gradient, mpl_loss,
                   poisson_disk_sample, symmetric_mpl_loss, total_loss)
from .metrics import (MetricReport, PoseError, box_iou_3d, iou_accuracy, pose_error,
                      symmetric_box_iou, threshold_accuracy)
from .evaluation import EvalConfig, FrameRecord, evaluate, load_records, render_report, write_records

__version__ = "0.1.0"

__all__ = [
    "BehindCameraError", "DegenerateConfigurationError", "EmptyCloudError", "InvalidArgumentError",
    "InvalidMeshError", "MatchingError", "PoseKitError", "RecordParseError",
    "RecordValidationError", "BinaryMask", "CameraIntrinsics", "DepthImage", "PointCloud",
    "Pose9DoF", "backproject", "cuboid_corners", "orthonormalize", "project_point",
    "sample_points", "SymmetryClass", "PnPConfig", "PnPSolution", "pnp_recover",
    "reprojection_rmse", "FeatureMap", "FusionConfig", "fuse", "project_cloud_to_pixels",
    "sample_image_features", "LossConfig", "SampledVertexSet", "TriangleMesh", "mpl_gradient",
    "mpl_loss", "poisson_disk_sample", "symmetric_mpl_loss", "total_loss", "MetricReport",
    "PoseError", "box_iou_3d", "iou_accuracy", "pose_error", "symmetric_box_iou",
    "threshold_accuracy", "EvalConfig", "FrameRecord", "evaluate", "load_records", "render_report",
    "write_records",
]
