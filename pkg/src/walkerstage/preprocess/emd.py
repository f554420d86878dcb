"""Empirical mode decomposition by cubic-spline sifting."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from ..errors import ConstantSignal, TooShort

MIN_LENGTH = 8


@dataclass(frozen=True)
class EmdConfig:
    """Sifting and stopping parameters.

    ``max_sifts`` bounds the Cauchy-criterion loop. A component that has
    not yet reached the IMF shape condition (extrema and zero crossings
    differing by at most one) keeps sifting up to ``max_sifts * shape_sift_factor``.

    ``noise_zcr_min`` makes denoising adaptive: a leading IMF is only
    dropped when its zero-crossing rate (crossings per sample) is at least
    this value. The default 0 drops ``drop_imfs`` IMFs unconditionally.
    """

    sd_threshold: float = 0.2
    max_sifts: int = 50
    max_imfs: int = 10
    drop_imfs: int = 1
    shape_sift_factor: int = 10
    noise_zcr_min: float = 0.0

    @classmethod
    def from_dict(cls, doc: dict | None) -> "EmdConfig":
        return cls(**(doc or {}))


@dataclass
class ImfDecomposition:
    imfs: list = field(default_factory=list)
    residue: np.ndarray = None
    sift_counts: list = field(default_factory=list)

    def reconstruct(self, skip: int = 0) -> np.ndarray:
        out = np.array(self.residue, dtype=float, copy=True)
        for imf in self.imfs[skip:]:
            out += imf
        return out


def count_extrema(x) -> int:
    """Number of local maxima plus local minima (plateaus count once)."""
    d = np.sign(np.diff(np.asarray(x, dtype=float)))
    d = d[d != 0]
    if d.size < 2:
        return 0
    return int(np.count_nonzero(d[1:] != d[:-1]))


def count_zero_crossings(x) -> int:
    """Number of sign changes, ignoring samples that are exactly zero."""
    s = np.sign(np.asarray(x, dtype=float))
    s = s[s != 0]
    if s.size < 2:
        return 0
    return int(np.count_nonzero(s[1:] != s[:-1]))


def is_imf_shaped(x) -> bool:
    return abs(count_extrema(x) - count_zero_crossings(x)) <= 1


def _extrema_indices(x):
    d = np.diff(x)
    # carry the last non-zero slope across plateaus
    sign = np.sign(d)
    nz = np.flatnonzero(sign)
    if nz.size < 2:
        return np.empty(0, int), np.empty(0, int)
    s = sign[nz]
    change = np.flatnonzero(s[1:] != s[:-1])
    # extremum sits at the start of the run following the change, i.e. at
    # index nz[change + 1]; for a plateau take its midpoint
    left = nz[change] + 1
    right = nz[change + 1]
    idx = (left + right) // 2
    is_max = s[change] > 0
    return idx[is_max], idx[~is_max]


def _envelope(idx, values, n):
    # mirror two extrema about each end so the spline is anchored past the edges
    left = idx[:2]
    right = idx[-2:]
    t = np.concatenate((-left[::-1], idx, 2 * (n - 1) - right[::-1]))
    v = np.concatenate((values[left[::-1]], values[idx], values[right[::-1]]))
    t, keep = np.unique(t, return_index=True)
    return CubicSpline(t, v[keep], bc_type="natural")(np.arange(n))


def _mean_envelope(h):
    imax, imin = _extrema_indices(h)
    if imax.size < 1 or imin.size < 1 or imax.size + imin.size < 3:
        return None
    n = h.size
    upper = _envelope(imax, h, n)
    lower = _envelope(imin, h, n)
    return 0.5 * (upper + lower)


def _is_trend(x) -> bool:
    return count_extrema(x) < 3


def emd(signal, config: EmdConfig | None = None) -> ImfDecomposition:
    """Decompose ``signal`` into intrinsic mode functions plus a residue.

    Each IMF is sifted until the Cauchy criterion
    ``sum((h_prev - h)^2) / sum(h_prev^2)`` drops below
    ``config.sd_threshold`` and the component is IMF-shaped, or the sift
    budget runs out. Decomposition stops when the residue is monotone,
    has fewer than three extrema, or ``config.max_imfs`` IMFs exist.
    IMFs come out ordered from fastest to slowest oscillation.
    """
    config = config or EmdConfig()
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or x.size < MIN_LENGTH:
        raise TooShort(f"EMD needs at least {MIN_LENGTH} samples, got {x.size}")
    if np.ptp(x) == 0:
        raise ConstantSignal("EMD input is constant")
    scale = np.max(np.abs(x))

    imfs, counts = [], []
    residue = x.copy()
    hard_cap = max(config.max_sifts, config.max_sifts * config.shape_sift_factor)
    while len(imfs) < config.max_imfs and not _is_trend(residue):
        if np.max(np.abs(residue)) <= 1e-12 * scale:
            break
        h = residue.copy()
        n_sifts = 0
        while n_sifts < hard_cap:
            env = _mean_envelope(h)
            if env is None:
                break
            h_new = h - env
            n_sifts += 1
            denom = np.dot(h, h)
            sd = np.dot(h - h_new, h - h_new) / denom if denom > 0 else 0.0
            h = h_new
            shaped = is_imf_shaped(h)
            if shaped and (sd < config.sd_threshold or n_sifts >= config.max_sifts):
                break
        imfs.append(h)
        counts.append(n_sifts)
        residue = residue - h
    residue = x - np.sum(imfs, axis=0) if imfs else x.copy()
    return ImfDecomposition(imfs, residue, counts)


def emd_denoise(signal, config: EmdConfig | None = None) -> np.ndarray:
    """Reconstruct ``signal`` without its ``config.drop_imfs`` fastest IMFs.

    With ``config.noise_zcr_min > 0`` dropping stops at the first IMF whose
    zero-crossing rate is below that value.
    """
    config = config or EmdConfig()
    x = np.asarray(signal, dtype=float)
    if config.drop_imfs <= 0:
        if x.ndim != 1 or x.size < MIN_LENGTH:
            raise TooShort(f"EMD needs at least {MIN_LENGTH} samples, got {x.size}")
        if np.ptp(x) == 0:
            raise ConstantSignal("EMD input is constant")
        return x.copy()
    dec = emd(x, config)
    drop = 0
    for imf in dec.imfs[: config.drop_imfs]:
        if count_zero_crossings(imf) / x.size < config.noise_zcr_min:
            break
        drop += 1
    if drop == 0:
        return x.copy()
    return x - np.sum(dec.imfs[:drop], axis=0)
