"""Flow-guided masking, tactile annotation and QA dataset tools for visuo-tactile video."""
from .core import (
    ATTRIBUTES,
    Elasticity,
    Friction,
    Hardness,
    InteractionKind,
    Manifest,
    ManifestEntry,
    Protrusion,
    SensorKind,
    TactileAnnotation,
    VideoSequence,
    load_video,
    save_video,
    validate_manifest,
)
from .errors import VTVError
from .flow import (
    ClassicalPyramidal,
    FlowField,
    FlowParams,
    FlowSet,
    MappingField,
    Precomputed,
    bidirectional_flow_set,
    compose_to_keyframe,
    estimate_flow,
    normalize_spatial,
    read_flo,
    write_flo,
)
from .keyframe import MaskMap, SamplingConfig, gaussian_mask, keyframe_mask, num_sampling_points, sample_points, select_keyframe
from .propagate import TokenMask, TubeletGeometry, binarize_tokens, leakage, propagate_mask, tube_mask
from .tacforce import ForceField, spline_interpolate_field

__version__ = "0.1.0"
