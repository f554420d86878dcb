"""Axis-angle rotations and accelerometer-to-walker frame alignment.

Canonical walker frame: +x forward, +y left, +z up. A stationary
accelerometer in that frame reads gravity as ``(0, 0, -g)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NoForwardMotion, NoStationaryPrefix
from ..ingest import SensorSession
from .smoothing import moving_average_zero_phase

STATIONARY_VARIANCE_MAX = 1.0  # (m/s^2)^2, summed over axes
MIN_FORWARD_DISPLACEMENT_M = 0.5


@dataclass(frozen=True)
class Rotation:
    axis: tuple
    angle: float

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise ValueError("rotation axis must be non-zero")
        angle = float(self.angle)
        if angle < 0:
            axis, angle = -axis, -angle
        angle = angle % (2 * np.pi)
        if angle > np.pi:
            axis, angle = -axis, 2 * np.pi - angle
        object.__setattr__(self, "axis", tuple(float(a) for a in axis / norm))
        object.__setattr__(self, "angle", angle)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls((0.0, 0.0, 1.0), 0.0)

    @classmethod
    def from_matrix(cls, m) -> "Rotation":
        """Axis-angle form of a proper rotation matrix."""
        m = np.asarray(m, dtype=float)
        cos_t = np.clip((np.trace(m) - 1.0) / 2.0, -1.0, 1.0)
        angle = float(np.arccos(cos_t))
        skew = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
        if angle < 1e-12:
            return cls.identity()
        if np.pi - angle > 1e-6:
            return cls(skew / (2 * np.sin(angle)), angle)
        # near pi the skew part vanishes; recover the axis from the symmetric part
        sym = (m + np.eye(3)) / 2.0
        col = int(np.argmax(np.diag(sym)))
        axis = sym[:, col] / np.sqrt(max(sym[col, col], 1e-300))
        if np.dot(axis, skew) < 0:
            axis = -axis
        return cls(axis, angle)

    def as_matrix(self) -> np.ndarray:
        return rodrigues_rotate(np.eye(3), self).T

    def as_rotvec(self) -> np.ndarray:
        return np.asarray(self.axis) * self.angle

    def inverse(self) -> "Rotation":
        return Rotation(self.axis, -self.angle)

    def compose(self, other: "Rotation") -> "Rotation":
        """Rotation equal to applying ``other`` first, then ``self``."""
        return Rotation.from_matrix(self.as_matrix() @ other.as_matrix())

    def to_json(self) -> dict:
        return {"axis": list(self.axis), "angle": self.angle}

    @classmethod
    def from_json(cls, doc) -> "Rotation":
        return cls(tuple(doc["axis"]), doc["angle"])


def rodrigues_rotate(v, r: Rotation) -> np.ndarray:
    """Rotate 3-vectors by ``r`` using Rodrigues' formula.

    ``v' = v cos(t) + (k x v) sin(t) + k (k . v)(1 - cos(t))``

    Accepts a single vector of shape ``(3,)`` or an ``(n, 3)`` array.
    """
    v = np.asarray(v, dtype=float)
    k = np.asarray(r.axis, dtype=float)
    c, s = np.cos(r.angle), np.sin(r.angle)
    kv = v @ k
    return v * c + np.cross(k, v) * s + np.multiply.outer(kv, k) * (1.0 - c)


def rotation_between(a, b) -> Rotation:
    """Smallest rotation taking direction ``a`` onto direction ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    axis = np.cross(a, b)
    sin_t = np.linalg.norm(axis)
    cos_t = float(np.clip(np.dot(a, b), -1.0, 1.0))
    if sin_t < 1e-12:
        if cos_t > 0:
            return Rotation.identity()
        # antiparallel: any axis perpendicular to a
        helper = np.eye(3)[int(np.argmin(np.abs(a)))]
        return Rotation(np.cross(a, helper), np.pi)
    return Rotation(axis / sin_t, float(np.arctan2(sin_t, cos_t)))


def estimate_alignment(
    session: SensorSession,
    stationary_prefix_s: float = 1.0,
    max_prefix_variance: float = STATIONARY_VARIANCE_MAX,
    straight_ratio: float = 0.2,
) -> Rotation:
    """Estimate the rotation taking sensor readings into the walker frame.

    Gravity is estimated as the mean accelerometer vector over the
    stationary prefix and mapped to ``-z``. A yaw about ``z`` then turns the
    forward axis onto ``+x``. The forward axis is the principal horizontal
    acceleration direction during straight-line walking, taken as the
    cross-covariance of levelled horizontal acceleration with the
    wheel-speed derivative, which also fixes its sign.
    """
    fs = session.sample_rate_hz
    n_prefix = int(round(stationary_prefix_s * fs))
    if n_prefix < 2 or n_prefix > session.n_samples:
        raise NoStationaryPrefix(
            f"need {stationary_prefix_s:g} s of stationary data, session has {session.duration_s:g} s"
        )
    acc = session.accel
    prefix = acc[:n_prefix]
    if np.var(prefix, axis=0).sum() > max_prefix_variance:
        raise NoStationaryPrefix("accelerometer variance over the stationary prefix is too high")
    gravity = prefix.mean(axis=0)
    if np.linalg.norm(gravity) == 0:
        raise NoStationaryPrefix("zero mean acceleration over the stationary prefix")
    tilt = rotation_between(gravity, (0.0, 0.0, -1.0))

    disp = 0.5 * (session.encoder_left + session.encoder_right)
    if disp[-1] - disp[n_prefix - 1] <= MIN_FORWARD_DISPLACEMENT_M:
        raise NoForwardMotion("encoder displacement after the prefix is below 0.5 m")

    win = _odd_window(0.3 * fs, session.n_samples)
    v_left = np.gradient(moving_average_zero_phase(session.encoder_left, win)) * fs
    v_right = np.gradient(moving_average_zero_phase(session.encoder_right, win)) * fs
    speed = 0.5 * (v_left + v_right)
    moving = speed > 0.1 * speed.max()
    straight = np.abs(v_left - v_right) <= straight_ratio * np.maximum(np.abs(speed), 1e-9)
    mask = moving & straight
    mask[:n_prefix] = False
    if mask.sum() < 3:
        raise NoForwardMotion("no straight-line walking found after the prefix")

    levelled = rodrigues_rotate(acc, tilt)
    horiz = levelled[mask, :2]
    horiz = horiz - horiz.mean(axis=0)
    dspeed = np.gradient(speed) * fs
    ref = dspeed[mask] - dspeed[mask].mean()
    # forward axis: the horizontal direction whose acceleration is coherent
    # with the wheel-derived acceleration; lateral sway does not bias it
    principal = horiz.T @ ref
    if np.linalg.norm(principal) < 1e-12:
        _, vecs = np.linalg.eigh(horiz.T @ horiz)
        principal = vecs[:, -1]
    yaw_angle = -np.arctan2(principal[1], principal[0])
    yaw = Rotation((0.0, 0.0, 1.0), yaw_angle)
    return yaw.compose(tilt)


def _odd_window(length: float, n: int) -> int:
    w = max(1, int(round(length)))
    if w % 2 == 0:
        w += 1
    return min(w, n if n % 2 else n - 1)
