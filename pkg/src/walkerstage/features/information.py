"""Histogram information measures, zero crossings and harmonic ratio."""

from __future__ import annotations

import numpy as np

DEFAULT_BINS = 16
CROSS_ENTROPY_EPS = 1e-9


def histogram_bins(x, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Equal-width bin index of each sample over the sample's own min-max range."""
    x = np.asarray(x, dtype=float).ravel()
    lo, hi = x.min(), x.max()
    if hi <= lo:
        return np.zeros(x.size, dtype=np.intp)
    idx = np.floor((x - lo) / (hi - lo) * bins).astype(np.intp)
    return np.minimum(idx, bins - 1)


def _probabilities(idx, size):
    return np.bincount(idx, minlength=size) / idx.size


def _plogp(p):
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def entropy(x, bins: int = DEFAULT_BINS) -> float:
    """Shannon entropy in nats of the histogram of ``x``."""
    return _plogp(_probabilities(histogram_bins(x, bins), bins))


def mutual_information(x, y, bins: int = DEFAULT_BINS) -> float:
    """Plug-in mutual information (nats) from a ``bins x bins`` histogram.

    Computed as ``H(X) + H(Y) - H(X, Y)``, so ``I(X; X) = H(X)`` exactly.
    """
    ix = histogram_bins(x, bins)
    iy = histogram_bins(y, bins)
    if ix.size != iy.size:
        raise ValueError("channels must have equal length")
    joint = _probabilities(ix * bins + iy, bins * bins)
    mi = _plogp(_probabilities(ix, bins)) + _plogp(_probabilities(iy, bins)) - _plogp(joint)
    return max(mi, 0.0)


def cross_entropy(x, y, bins: int = DEFAULT_BINS, eps: float = CROSS_ENTROPY_EPS) -> float:
    """``-sum P log(Q + eps)`` with P, Q the histograms of ``x`` and ``y``."""
    p = _probabilities(histogram_bins(x, bins), bins)
    q = _probabilities(histogram_bins(y, bins), bins)
    return float(-np.sum(p * np.log(q + eps)))


def pearson(x, y) -> float:
    """Pearson correlation; NaN when either input is constant."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    dx = x - x.mean()
    dy = y - y.mean()
    den = np.sqrt(np.sum(dx * dx) * np.sum(dy * dy))
    if not den > 0:
        return np.nan
    return float(np.clip(np.sum(dx * dy) / den, -1.0, 1.0))


def zero_crossing_rate(x, sample_rate_hz: float) -> float:
    """Sign changes of the mean-removed signal per second of signal."""
    x = np.asarray(x, dtype=float).ravel()
    s = np.sign(x - x.mean())
    s = s[s != 0]
    crossings = int(np.count_nonzero(s[1:] != s[:-1]))
    return crossings / (x.size / sample_rate_hz)


def harmonic_amplitudes(x, sample_rate_hz: float, fundamental_hz: float,
                        n_harmonics: int = 10) -> np.ndarray:
    """Spectral amplitude at ``k * fundamental`` for k = 1..n_harmonics.

    Uses a Hann-windowed FFT of the mean-removed signal, linearly
    interpolated between bins. Harmonics above Nyquist are NaN.
    """
    x = np.asarray(x, dtype=float).ravel()
    mag = np.abs(np.fft.rfft((x - x.mean()) * np.hanning(x.size)))
    freqs = np.fft.rfftfreq(x.size, 1.0 / sample_rate_hz)
    targets = fundamental_hz * np.arange(1, n_harmonics + 1)
    amps = np.interp(targets, freqs, mag)
    amps[targets > freqs[-1]] = np.nan
    return amps


def harmonic_ratio(x, sample_rate_hz: float, fundamental_hz: float, n_harmonics: int = 10) -> float:
    """Sum of even-harmonic amplitudes over sum of odd-harmonic amplitudes."""
    amps = harmonic_amplitudes(x, sample_rate_hz, fundamental_hz, n_harmonics)
    odd = np.nansum(amps[0::2])
    even = np.nansum(amps[1::2])
    if not odd > 0:
        return np.nan
    return float(even / odd)
