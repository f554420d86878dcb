"""Step timing, step length and TUG phase durations."""

from __future__ import annotations

import numpy as np

from ..errors import InsufficientSteps
from ..ingest import SensorSession
from ..preprocess.segmentation import GaitSegments, Phase
from ._values import FeatureValues

TUG_FEATURES = (
    "step_count", "tug_time_s", "turn_time_s", "cadence", "step_time_mean",
    "step_time_std", "step_time_cv", "step_length_mean", "walk_velocity", "walk_turn_ratio",
)
PHASE_FEATURES = (
    "step_count", "duration_s", "cadence", "step_time_mean", "step_time_std",
    "step_time_cv", "step_length_mean", "walk_velocity",
)


def as_indices(footfalls) -> np.ndarray:
    """Sorted sample indices from footfall events or plain integers."""
    idx = [getattr(f, "sample_index", f) for f in footfalls]
    return np.sort(np.asarray(idx, dtype=np.int64))


def _interval_stats(intervals, out: FeatureValues):
    if intervals.size == 0:
        for k in ("step_time_mean", "step_time_std", "step_time_cv", "cadence"):
            out[k] = np.nan
        out.flag("step_time_mean", "step_time_std", "step_time_cv", "cadence")
        return
    mean = float(intervals.mean())
    std = float(intervals.std())
    out["step_time_mean"] = mean
    out["step_time_std"] = std
    out["step_time_cv"] = std / mean
    out["cadence"] = 60.0 / mean


def _stride_distance(own, disp) -> tuple[float, int]:
    """Encoder distance between the first and last footfall, and step count.

    Counting only whole steps keeps the acceleration and braking at the
    phase edges out of the step length.
    """
    if own.size < 2:
        return 0.0, 0
    return float(disp[own[-1]] - disp[own[0]]), int(own.size - 1)


def _in_phase(idx, phase: Phase):
    return idx[(idx >= phase.start_index) & (idx < phase.end_index)]


def _phase_features(idx, disp, fs, phase: Phase) -> FeatureValues:
    out = FeatureValues()
    own = _in_phase(idx, phase)
    duration = phase.n_samples / fs
    out["step_count"] = float(own.size)
    out["duration_s"] = duration
    _interval_stats(np.diff(own) / fs, out)
    distance = float(disp[phase.end_index - 1] - disp[phase.start_index]) if phase.n_samples else 0.0
    out["walk_velocity"] = distance / duration if duration > 0 else np.nan
    out["step_length_mean"] = _stride_distance(own, disp)[0] / max(own.size - 1, 0) \
        if own.size >= 2 else np.nan
    if not np.isfinite(out["step_length_mean"]):
        out.flag("step_length_mean")
    if not np.isfinite(out["walk_velocity"]):
        out.flag("walk_velocity")
    return out


def extract_spatiotemporal(session: SensorSession, footfalls, segments: GaitSegments,
                           strict: bool = False) -> FeatureValues:
    """Whole-TUG step and timing features.

    Cadence, step length and walk velocity are taken over the walking
    phases only; step-time statistics use every consecutive footfall pair.
    With fewer than two footfalls the interval features are NaN and
    flagged, or ``InsufficientSteps`` is raised when ``strict``.
    """
    fs = session.sample_rate_hz
    idx = as_indices(footfalls)
    if idx.size < 2 and strict:
        raise InsufficientSteps(f"need at least 2 footfalls, got {idx.size}")
    disp = 0.5 * (session.encoder_left + session.encoder_right)
    start, end = segments.active_span
    out = FeatureValues()
    out["step_count"] = float(idx.size)
    out["tug_time_s"] = (end - start) / fs
    turn_time = sum(p.n_samples for p in segments.turns) / fs
    out["turn_time_s"] = turn_time

    _interval_stats(np.diff(idx) / fs, out)
    walking = segments.walking
    walk_intervals = np.concatenate(
        [np.diff(_in_phase(idx, p)) for p in walking] or [np.empty(0)]
    ) / fs
    walk_time = sum(p.n_samples for p in walking) / fs
    walk_dist = sum(
        float(disp[p.end_index - 1] - disp[p.start_index]) for p in walking if p.n_samples
    )
    if walk_intervals.size:
        out["cadence"] = 60.0 / float(walk_intervals.mean())
    else:
        out["cadence"] = np.nan
        out.flag("cadence")
    out["walk_velocity"] = walk_dist / walk_time if walk_time > 0 else np.nan
    strides = [_stride_distance(_in_phase(idx, p), disp) for p in walking]
    n_steps = sum(k for _, k in strides)
    out["step_length_mean"] = sum(d for d, _ in strides) / n_steps if n_steps else np.nan
    out["walk_turn_ratio"] = walk_time / turn_time if turn_time > 0 else np.nan
    for k in ("walk_velocity", "step_length_mean", "walk_turn_ratio"):
        if not np.isfinite(out[k]):
            out.flag(k)
    res = FeatureValues({k: out[k] for k in TUG_FEATURES})
    res.flag(*out.flags)
    return res


def extract_walk_phase_means(session: SensorSession, footfalls, segments: GaitSegments) -> FeatureValues:
    """Per-walking-phase features averaged over the walking phases."""
    fs = session.sample_rate_hz
    idx = as_indices(footfalls)
    disp = 0.5 * (session.encoder_left + session.encoder_right)
    per_phase = [_phase_features(idx, disp, fs, p) for p in segments.walking]
    out = FeatureValues()
    for k in PHASE_FEATURES:
        vals = np.array([f[k] for f in per_phase], dtype=float)
        vals = vals[np.isfinite(vals)]
        if vals.size:
            out[k] = float(vals.mean())
        else:
            out[k] = np.nan
            out.flag(k)
    return out
