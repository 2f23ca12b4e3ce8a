"""Weakly supervised nuclei segmentation toolkit.

Point-annotation encodings, loss functions with analytic gradients, combined
pseudo-label optimization, marker-watershed instance extraction, panoptic and
detection metrics, and a deterministic interactive-supervision loop with
neural predictors behind a file-based protocol.
"""

from .cpl import CplParams, PseudoLabel, binarize_segmentation, cpl, distance_filter, mask_fusion, threshold_filter
from .encoding import EncodingParams, gaussian_encode, segmentation_targets, weight_map
from .errors import (
    DawnError,
    DimMismatch,
    EmptyOmega,
    EmptyPointSet,
    IdMismatch,
    MissingArtifact,
    PlacementInfeasible,
    PredictorFailed,
    RangeViolation,
    RasterTooSmall,
    ShapeMismatch,
    ValidationFailed,
)
from .losses import (
    LossValue,
    LossWeights,
    ce_loss,
    cfc_loss,
    detection_loss,
    dice_loss,
    dyn_loss,
    gradient_mse_loss,
    mse_loss,
    pretrain_loss,
    total_loss,
)
from .metrics import (
    MatchResult,
    MetricReport,
    aji,
    centroids,
    detection_scores,
    dice,
    panoptic,
    report,
)
from .orchestrator import LoopConfig, RoundRecord, evaluate_round, run_loop
from .overlay import emit_overlay
from .postprocess import PostprocParams, extract_instances, hover_energy
from .predictor import (
    PredictorBundle,
    RoundManifest,
    SyntheticPredictorConfig,
    read_bundle,
    read_manifest,
    synthetic_predict,
    write_bundle,
    write_manifest,
)
from .presets import DATASETS, DatasetConfig, get_dataset
from .raster import (
    PointSet,
    distance_to_points,
    instance_distance_maps,
    label_components,
    relabel,
    sobel_gradients,
)
from .synthgen import SceneSpec, generate_scene, render_texture

__version__ = "0.1.0"
