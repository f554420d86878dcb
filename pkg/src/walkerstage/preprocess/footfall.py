"""Footfall (heel-strike) detection from vertical walker acceleration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks, peak_prominences

from ..errors import EmptySignal


@dataclass(frozen=True)
class FootfallConfig:
    window_s: float = 3.0
    k: float = 1.0
    min_step_interval_s: float = 0.3

    @classmethod
    def from_dict(cls, doc: dict | None) -> "FootfallConfig":
        return cls(**(doc or {}))


@dataclass(frozen=True)
class FootfallEvent:
    sample_index: int
    time_s: float
    prominence: float


def adaptive_threshold(mag: np.ndarray, window: int, k: float) -> np.ndarray:
    """Sliding ``mean + k * std`` over a centered window of ``window`` samples."""
    mu = uniform_filter1d(mag, window, mode="reflect")
    m2 = uniform_filter1d(mag * mag, window, mode="reflect")
    sd = np.sqrt(np.maximum(m2 - mu * mu, 0.0))
    return mu + k * sd


def detect_footfalls(
    accel_vertical_denoised,
    sample_rate_hz: float,
    config: FootfallConfig | None = None,
    active_mask=None,
) -> list[FootfallEvent]:
    """Detect footfalls as prominent peaks of vertical-acceleration magnitude.

    Magnitude is the absolute deviation from the signal median. A local
    maximum counts when it exceeds the sliding ``mean + k * std`` threshold;
    within ``min_step_interval_s`` of a larger accepted peak, smaller peaks
    are dropped. When ``active_mask`` is given, peaks at samples where it
    is False are discarded before the refractory pass.
    """
    config = config or FootfallConfig()
    x = np.asarray(accel_vertical_denoised, dtype=float)
    if x.size == 0:
        raise EmptySignal("footfall detection needs a non-empty signal")
    fs = float(sample_rate_hz)
    mag = np.abs(x - np.median(x))
    window = max(1, int(round(config.window_s * fs)))
    thr = adaptive_threshold(mag, window, config.k)

    peaks, _ = find_peaks(mag)
    peaks = peaks[mag[peaks] > thr[peaks]]
    if active_mask is not None:
        peaks = peaks[np.asarray(active_mask, dtype=bool)[peaks]]
    if peaks.size == 0:
        return []

    min_gap = config.min_step_interval_s * fs
    # tallest first; equal heights resolved towards the earlier sample
    order = np.lexsort((peaks, -mag[peaks]))
    accepted = []
    for i in peaks[order]:
        if all(abs(i - j) >= min_gap for j in accepted):
            accepted.append(int(i))
    accepted.sort()
    idx = np.asarray(accepted)
    prom = peak_prominences(mag, idx)[0]
    return [FootfallEvent(int(i), i / fs, float(p)) for i, p in zip(idx, prom)]


def footfall_indices(events) -> np.ndarray:
    return np.asarray([e.sample_index for e in events], dtype=int)


def match_events(detected, truth, tolerance: int) -> tuple[int, int, int]:
    """Greedy one-to-one matching of sorted index lists within ``tolerance``.

    Returns ``(true_positives, false_positives, false_negatives)``.
    """
    detected = sorted(int(d) for d in detected)
    truth = sorted(int(t) for t in truth)
    i = j = tp = 0
    while i < len(detected) and j < len(truth):
        diff = detected[i] - truth[j]
        if abs(diff) <= tolerance:
            tp += 1
            i += 1
            j += 1
        elif diff < 0:
            i += 1
        else:
            j += 1
    return tp, len(detected) - tp, len(truth) - tp


def f1_score(detected, truth, tolerance: int) -> float:
    tp, fp, fn = match_events(detected, truth, tolerance)
    if tp == 0:
        return 1.0 if fp == 0 and fn == 0 else 0.0
    return 2 * tp / (2 * tp + fp + fn)
