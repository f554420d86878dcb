"""Signal conditioning: smoothing, frame alignment, EMD, footfalls, phases."""

from .emd import EmdConfig, ImfDecomposition, emd, emd_denoise
from .footfall import FootfallConfig, FootfallEvent, detect_footfalls
from .pipeline import PreprocessConfig, PreprocessedSession, preprocess_session
from .rotation import Rotation, estimate_alignment, rodrigues_rotate
from .segmentation import GaitSegments, Phase, PhaseKind, SegmentConfig, segment_phases
from .smoothing import moving_average_zero_phase

__all__ = [
    "EmdConfig", "ImfDecomposition", "emd", "emd_denoise",
    "FootfallConfig", "FootfallEvent", "detect_footfalls",
    "PreprocessConfig", "PreprocessedSession", "preprocess_session",
    "Rotation", "estimate_alignment", "rodrigues_rotate",
    "GaitSegments", "Phase", "PhaseKind", "SegmentConfig", "segment_phases",
    "moving_average_zero_phase",
]
