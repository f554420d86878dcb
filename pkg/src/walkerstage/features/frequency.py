"""Spectral features from a Welch power spectral density estimate."""

from __future__ import annotations

import numpy as np
from scipy.signal import welch

from ..errors import TooShort
from ._values import FeatureValues

FREQUENCY_FEATURES = ("mean_freq", "median_freq", "bw_3db", "obw_99", "obw_99_power", "total_power")
MIN_SAMPLES = 64
MAX_SEGMENT = 256
OCCUPIED_FRACTION = 0.99


def welch_segment_length(n: int) -> int:
    """Largest power of two not above ``min(256, n // 2)``."""
    cap = min(MAX_SEGMENT, n // 2)
    return 1 << (int(cap).bit_length() - 1)


def power_spectrum(x, sample_rate_hz: float) -> tuple[np.ndarray, np.ndarray]:
    """One-sided PSD with a Hann window and 50% overlap."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size < MIN_SAMPLES:
        raise TooShort(f"frequency features need at least {MIN_SAMPLES} samples, got {x.size}")
    nper = welch_segment_length(x.size)
    return welch(x, fs=sample_rate_hz, window="hann", nperseg=nper, noverlap=nper // 2,
                 detrend="constant", scaling="density")


def _cumulative_frequency(freqs, psd, fractions):
    """Frequencies where cumulative power reaches each fraction.

    Power is treated as uniform across each bin, so the cumulative curve
    is piecewise linear between bin edges.
    """
    df = freqs[1] - freqs[0]
    edges = np.concatenate([[freqs[0] - df / 2], freqs + df / 2])
    cum = np.concatenate([[0.0], np.cumsum(psd)])
    cum /= cum[-1]
    out = np.interp(fractions, cum, edges)
    return np.clip(out, 0.0, freqs[-1])


def half_power_bandwidth(freqs, psd) -> float:
    """Width of the contiguous band around the PSD peak above half its height."""
    k = int(np.argmax(psd))
    half = psd[k] / 2.0
    lo = k
    while lo > 0 and psd[lo - 1] >= half:
        lo -= 1
    hi = k
    while hi < len(psd) - 1 and psd[hi + 1] >= half:
        hi += 1
    f_lo = freqs[lo]
    if lo > 0:
        # linear crossing between lo-1 (below) and lo (above)
        f_lo = np.interp(half, [psd[lo - 1], psd[lo]], [freqs[lo - 1], freqs[lo]])
    f_hi = freqs[hi]
    if hi < len(psd) - 1:
        f_hi = np.interp(half, [psd[hi + 1], psd[hi]], [freqs[hi + 1], freqs[hi]])
    return float(f_hi - f_lo)


def extract_frequency(x, sample_rate_hz: float) -> FeatureValues:
    """Six spectral features of ``x``.

    ``obw_99`` is the band between the 0.5% and 99.5% cumulative-power
    frequencies and ``obw_99_power`` the power inside it. Powers are in
    signal units squared; a zero spectrum leaves every feature undefined.
    """
    freqs, psd = power_spectrum(x, sample_rate_hz)
    df = freqs[1] - freqs[0]
    total = float(psd.sum() * df)
    out = FeatureValues()
    if not total > 0:
        for name in FREQUENCY_FEATURES:
            out[name] = np.nan
        out["total_power"] = 0.0
        out.flag(*FREQUENCY_FEATURES[:-1])
        return out
    tail = (1.0 - OCCUPIED_FRACTION) / 2.0
    f_med, f_lo, f_hi = _cumulative_frequency(freqs, psd, [0.5, tail, 1.0 - tail])
    out["mean_freq"] = float(np.sum(freqs * psd) / psd.sum())
    out["median_freq"] = float(f_med)
    out["bw_3db"] = half_power_bandwidth(freqs, psd)
    out["obw_99"] = float(f_hi - f_lo)
    out["obw_99_power"] = OCCUPIED_FRACTION * total
    out["total_power"] = total
    return out
