from __future__ import annotations

import numpy as np

from ..errors import EvenWindow, WindowTooLarge


def moving_average_zero_phase(signal, window: int) -> np.ndarray:
    """Centered moving average with symmetric window shrinkage at the edges.

    Sample ``i`` is averaged over ``[i - j, i + j]`` with
    ``j = min(k, i, n - 1 - i)`` and ``window = 2k + 1``, so the kernel is
    symmetric everywhere and the filter introduces no phase shift. The first
    and last samples are passed through unchanged.

    Parameters
    ----------
    signal : array_like
        One-dimensional input.
    window : int
        Odd window length, at most ``len(signal)``.

    Returns
    -------
    numpy.ndarray
        Filtered signal of the same length.
    """
    x = np.asarray(signal, dtype=float)
    window = int(window)
    if window < 1 or window % 2 == 0:
        raise EvenWindow(f"window must be a positive odd integer, got {window}")
    n = x.size
    if window > n:
        raise WindowTooLarge(f"window {window} exceeds signal length {n}")
    if window == 1:
        return x.copy()
    k = window // 2
    out = np.empty(n)
    out[k:n - k] = np.convolve(x, np.ones(window), mode="valid") / window
    for j in range(k):
        out[j] = x[: 2 * j + 1].sum() / (2 * j + 1)
        out[n - 1 - j] = x[n - 1 - 2 * j:].sum() / (2 * j + 1)
    return out


def moving_average_response(freq_norm: float, window: int) -> float:
    """Magnitude response of a length-``window`` boxcar at normalized frequency
    ``freq_norm`` (cycles per sample)."""
    if freq_norm == 0:
        return 1.0
    return abs(np.sin(np.pi * freq_norm * window) / (window * np.sin(np.pi * freq_norm)))
