"""Camera/object motion disentanglement for per-pixel temporal attention.

The toolkit operates on H x W grids of t x t row-stochastic matrices (one
temporal attention matrix per spatial pixel).  It separates the component
of attention caused by global camera movement from the component caused by
moving foreground objects, in two regimes:

  - one-shot: given a single attention stack and a foreground mask, the
    camera motion under the mask is reconstructed by harmonic (Laplace)
    completion from the background (:mod:`motionfield.poisson`);
  - few-shot: given several stacks sharing a camera motion, the common
    motion is recovered per pixel by window gathering, 2-D embedding and
    density clustering (:mod:`motionfield.fewshot`).

Extracted motions can be mixed, assigned to regions, and applied to value
tensors (:mod:`motionfield.combine`).  :mod:`motionfield.synth` renders
deterministic synthetic scenarios with exactly known camera attention and
serves as the verification oracle; :mod:`motionfield.io` defines the MTN1
tensor file format.
"""

from .tensors import (
    AttentionStack,
    AttentionReport,
    Mask2D,
    MaskStack,
    ValidationError,
    ValueTensor,
    mask_boundary,
    merge_masks,
    validate_attention,
)
from .io import CorruptFileError, FormatError, read_sidecar, read_tensor, write_tensor
from .synth import (
    CameraMotion,
    ObjectMotion,
    Scenario,
    attention_from_frames,
    make_scenario_preset,
    make_texture,
    render_frames,
    warp_texture,
)
from .poisson import (
    CompletionReport,
    SolverConfig,
    complete_attention,
    direct_solve_reference,
    solve_laplace_field,
)
from .fewshot import (
    ClusterConfig,
    ExtractionReport,
    PixelPointSet,
    TsneResult,
    dbscan,
    extract_common_motion,
    gather_window_points,
    tsne_embed,
    window_size,
)
from .combine import (
    PartitionError,
    RegionAssignment,
    WeightedMotionSet,
    apply_attention,
    blend_values,
    content_preserving_transfer,
    object_residual,
    region_compose,
    weighted_combine,
)
from .metrics import MapDistanceReport, map_distance, stochasticity_error

__version__ = "0.1.0"

__all__ = [
    "AttentionStack", "AttentionReport", "Mask2D", "MaskStack", "ValueTensor",
    "ValidationError", "mask_boundary", "merge_masks", "validate_attention",
    "CorruptFileError", "FormatError", "read_sidecar", "read_tensor", "write_tensor",
    "CameraMotion", "ObjectMotion", "Scenario", "attention_from_frames",
    "make_scenario_preset", "make_texture", "render_frames", "warp_texture",
    "CompletionReport", "SolverConfig", "complete_attention",
    "direct_solve_reference", "solve_laplace_field",
    "ClusterConfig", "ExtractionReport", "PixelPointSet", "TsneResult",
    "dbscan", "extract_common_motion", "gather_window_points", "tsne_embed",
    "window_size",
    "PartitionError", "RegionAssignment", "WeightedMotionSet", "apply_attention",
    "blend_values", "content_preserving_transfer", "object_residual",
    "region_compose", "weighted_combine",
    "MapDistanceReport", "map_distance", "stochasticity_error",
]
