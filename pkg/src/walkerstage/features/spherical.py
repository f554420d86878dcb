"""Spherical decomposition of accelerometer vectors."""

from __future__ import annotations

import numpy as np

# angles are undefined at the origin; samples this small are dropped from
# angle statistics
MIN_RADIUS = 1e-6


def to_spherical(v) -> tuple:
    """Azimuth, elevation and radius of one vector or an ``(n, 3)`` array.

    Returns
    -------
    azimuth : float or ndarray
        ``atan2(y, x)`` in ``(-pi, pi]``; 0 when ``x = y = 0``.
    elevation : float or ndarray
        ``asin(z / r)``; 0 when ``r = 0``.
    radius : float or ndarray
        Euclidean norm.
    """
    v = np.asarray(v, dtype=float)
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    r = np.sqrt(x * x + y * y + z * z)
    az = np.arctan2(y, x)
    # atan2 returns -pi for (x<0, y=-0.0); fold onto +pi
    az = np.where(az == -np.pi, np.pi, az) + 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        el = np.where(r > 0, np.arcsin(np.clip(z / np.where(r > 0, r, 1.0), -1.0, 1.0)), 0.0)
    if v.ndim == 1:
        return float(az), float(el), float(r)
    return az, el, r


def from_spherical(azimuth, elevation, radius) -> np.ndarray:
    azimuth = np.asarray(azimuth, dtype=float)
    elevation = np.asarray(elevation, dtype=float)
    radius = np.asarray(radius, dtype=float)
    ce = np.cos(elevation)
    return np.stack(
        [radius * ce * np.cos(azimuth), radius * ce * np.sin(azimuth), radius * np.sin(elevation)],
        axis=-1,
    )
