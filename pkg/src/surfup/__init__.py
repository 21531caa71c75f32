"""surfup: point-cloud upsampling via local bicubic surface patches.

Each input point gets a local projection plane (PCA over its k nearest
neighbors), a bicubic height field fitted by least squares in that frame,
and child points lifted directly onto the fitted surface. The package also
ships the standard evaluation suite (Chamfer, EMD, point-to-surface,
uniformity), XYZ/PLY/OFF I/O, and a CLI with an analytic-surface benchmark.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError, DegenerateInput, DegenerateNeighborhood, EmptyCloud,
    EmptyMesh, IoError, KTooLarge, MTooLarge, ParseError, SizeMismatch,
    SurfupError, UnsupportedFormat,
)
from .geom_core import (
    LocalPatch, PointCloud, bicubic_embed, bicubic_eval, decode_rotation,
    decode_rotation_many, is_rotation, patch_lift,
)
from .io_formats import CloudFormat, read_cloud, read_mesh, write_cloud, write_mesh
from .metrics import (
    MetricsReport, TriangleMesh, chamfer_l1, chamfer_l2, emd, emd_detail,
    evaluate, normalize_to_unit_sphere, p2f, uniformity,
)
from .patch_fit import FitReport, Neighborhood, fit_bicubic, fit_patch, pca_frame
from .spatial_index import KnnIndex, build_index, farthest_point_sample, knn
from .upsampler import (
    OffsetPattern, StageOutput, UpsampleConfig, add_noise, child_offsets,
    run_pipeline, upsample, upsample_stage,
)
