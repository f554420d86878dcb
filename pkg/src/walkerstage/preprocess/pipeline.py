from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ingest import SensorSession
from .emd import EmdConfig, emd_denoise
from .footfall import FootfallConfig, FootfallEvent, detect_footfalls
from .rotation import Rotation, estimate_alignment, rodrigues_rotate
from .segmentation import GaitSegments, SegmentConfig, segment_phases
from .smoothing import moving_average_zero_phase

# white-noise-like IMFs cross zero far more often than gait components
PIPELINE_NOISE_ZCR = 0.2


@dataclass(frozen=True)
class PreprocessConfig:
    smooth_window: int = 5
    stationary_prefix_s: float = 1.0
    align: bool = True
    gate_margin_s: float = 0.5
    emd: EmdConfig = field(default_factory=lambda: EmdConfig(noise_zcr_min=PIPELINE_NOISE_ZCR))
    footfall: FootfallConfig = field(default_factory=FootfallConfig)
    segment: SegmentConfig = field(default_factory=SegmentConfig)

    @classmethod
    def from_dict(cls, doc: dict | None) -> "PreprocessConfig":
        doc = dict(doc or {})
        return cls(
            smooth_window=int(doc.pop("smooth_window", 5)),
            stationary_prefix_s=float(doc.pop("stationary_prefix_s", 1.0)),
            align=bool(doc.pop("align", True)),
            gate_margin_s=float(doc.pop("gate_margin_s", 0.5)),
            emd=EmdConfig.from_dict({"noise_zcr_min": PIPELINE_NOISE_ZCR, **(doc.pop("emd", None) or {})}),
            footfall=FootfallConfig.from_dict(doc.pop("footfall", None)),
            segment=SegmentConfig.from_dict(doc.pop("segment", None)),
            **doc,
        )


@dataclass(frozen=True)
class PreprocessedSession:
    session: SensorSession  # smoothed, accelerometer rotated into the walker frame
    raw: SensorSession
    rotation: Rotation
    vertical_denoised: np.ndarray
    footfalls: tuple
    segments: GaitSegments

    @property
    def footfall_indices(self) -> np.ndarray:
        return np.asarray([e.sample_index for e in self.footfalls], dtype=int)


def smooth_session(session: SensorSession, window: int) -> SensorSession:
    cols = [moving_average_zero_phase(c, window) for c in session.channels().T]
    return SensorSession(session.subject_id, session.label, session.sample_rate_hz, *cols)


def preprocess_session(session: SensorSession, config: PreprocessConfig | None = None) -> PreprocessedSession:
    """Smooth, align, denoise, detect footfalls and segment one session."""
    config = config or PreprocessConfig()
    smoothed = smooth_session(session, config.smooth_window)
    if config.align:
        rotation = estimate_alignment(smoothed, config.stationary_prefix_s)
    else:
        rotation = Rotation.identity()
    aligned = smoothed.with_accel(rodrigues_rotate(smoothed.accel, rotation))
    vertical = emd_denoise(aligned.accel_z, config.emd)
    segments = segment_phases(session, config.segment)
    # steps only happen while the walker moves; the first footfall closes the
    # first step, so only the trailing edge gets a margin
    margin = int(round(config.gate_margin_s * session.sample_rate_hz))
    start, end = segments.active_span
    gate = np.zeros(session.n_samples, dtype=bool)
    gate[start:min(session.n_samples, end + margin)] = True
    footfalls: list[FootfallEvent] = detect_footfalls(
        vertical, session.sample_rate_hz, config.footfall, active_mask=gate
    )
    return PreprocessedSession(aligned, session, rotation, vertical, tuple(footfalls), segments)
