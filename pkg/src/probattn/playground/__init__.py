"""Desk-scale interactive segmentation on top of the mixture attention core."""

from .features import FeatureConfig, extract_features
from .session import (
    ClickEvent,
    PlaygroundConfig,
    SegmentationSession,
    apply_click,
    init_session,
    iou,
    predict_mask,
    prepare_base,
    session_from_dict,
    session_to_dict,
)
from .annotator import simulate_annotator
from .bench import CurveResult, evaluate_curve, load_manifest, write_curve_csv, write_curve_json
from .synth import generate_dataset

__all__ = [
    "ClickEvent",
    "CurveResult",
    "FeatureConfig",
    "PlaygroundConfig",
    "SegmentationSession",
    "apply_click",
    "evaluate_curve",
    "extract_features",
    "generate_dataset",
    "init_session",
    "iou",
    "load_manifest",
    "predict_mask",
    "prepare_base",
    "session_from_dict",
    "session_to_dict",
    "simulate_annotator",
    "write_curve_csv",
    "write_curve_json",
]
