"""Split a TUG recording into walk-out, turn and walk-back phases."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import NoMotion
from ..ingest import SensorSession
from .smoothing import moving_average_zero_phase

MIN_DISPLACEMENT_M = 0.5


class PhaseKind(str, enum.Enum):
    WALK_OUT = "WalkOut"
    TURN = "Turn"
    WALK_BACK = "WalkBack"


@dataclass(frozen=True)
class Phase:
    """Half-open sample interval ``[start_index, end_index)``."""

    kind: PhaseKind
    start_index: int
    end_index: int

    @property
    def n_samples(self) -> int:
        return self.end_index - self.start_index


@dataclass(frozen=True)
class GaitSegments:
    phases: tuple = field(default_factory=tuple)

    def of_kind(self, kind: PhaseKind) -> list[Phase]:
        return [p for p in self.phases if p.kind == kind]

    @property
    def walking(self) -> list[Phase]:
        return [p for p in self.phases if p.kind != PhaseKind.TURN]

    @property
    def turns(self) -> list[Phase]:
        return self.of_kind(PhaseKind.TURN)

    @property
    def active_span(self) -> tuple[int, int]:
        if not self.phases:
            return (0, 0)
        return (self.phases[0].start_index, self.phases[-1].end_index)

    def mask(self, n: int, kinds=None) -> np.ndarray:
        m = np.zeros(n, dtype=bool)
        for p in self.phases:
            if kinds is None or p.kind in kinds:
                m[p.start_index:p.end_index] = True
        return m


@dataclass(frozen=True)
class SegmentConfig:
    turn_ratio: float = 0.5
    min_turn_s: float = 0.5
    idle_speed: float = 0.05
    smooth_s: float = 0.3

    @classmethod
    def from_dict(cls, doc: dict | None) -> "SegmentConfig":
        return cls(**(doc or {}))


def wheel_speeds(session: SensorSession, smooth_s: float = 0.3) -> tuple[np.ndarray, np.ndarray]:
    """Left and right wheel speeds (m/s) from smoothed cumulative encoders."""
    fs = session.sample_rate_hz
    n = session.n_samples
    win = max(1, int(round(smooth_s * fs)))
    win += (win + 1) % 2
    win = min(win, n if n % 2 else n - 1)
    v_left = np.gradient(moving_average_zero_phase(session.encoder_left, win)) * fs
    v_right = np.gradient(moving_average_zero_phase(session.encoder_right, win)) * fs
    return v_left, v_right


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(a), int(b)) for a, b in zip(edges[::2], edges[1::2])]


def segment_phases(session: SensorSession, config: SegmentConfig | None = None) -> GaitSegments:
    """Segment the active walking span by wheel-speed differential.

    A sample is turning when ``|v_left - v_right| / max(mean speed, idle_speed)``
    exceeds ``turn_ratio``; turning runs shorter than ``min_turn_s`` are
    ignored and gaps shorter than ``min_turn_s`` between turning runs are
    bridged. Idle head and tail samples (mean speed below ``idle_speed``)
    belong to no phase. Straight stretches between two turns are labelled
    ``WalkBack``.
    """
    config = config or SegmentConfig()
    fs = session.sample_rate_hz
    disp = 0.5 * ((session.encoder_left[-1] - session.encoder_left[0])
                  + (session.encoder_right[-1] - session.encoder_right[0]))
    if disp < MIN_DISPLACEMENT_M:
        raise NoMotion(f"total wheel displacement {disp:.3f} m is below {MIN_DISPLACEMENT_M} m")

    v_left, v_right = wheel_speeds(session, config.smooth_s)
    speed = 0.5 * (v_left + v_right)
    active = np.flatnonzero(speed >= config.idle_speed)
    if active.size == 0:
        raise NoMotion("wheel speed never exceeds the idle threshold")
    start, end = int(active[0]), int(active[-1]) + 1

    ratio = np.abs(v_left - v_right) / np.maximum(np.abs(speed), config.idle_speed)
    turning = np.zeros(session.n_samples, dtype=bool)
    turning[start:end] = ratio[start:end] > config.turn_ratio
    min_len = config.min_turn_s * fs

    runs = [r for r in _runs(turning) if r[1] - r[0] >= min_len]
    merged = []
    for a, b in runs:
        if merged and a - merged[-1][1] < min_len:
            merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))

    phases = []
    cursor = start
    for a, b in merged:
        if a > cursor:
            kind = PhaseKind.WALK_OUT if not phases else PhaseKind.WALK_BACK
            phases.append(Phase(kind, cursor, a))
        phases.append(Phase(PhaseKind.TURN, a, b))
        cursor = b
    if cursor < end:
        kind = PhaseKind.WALK_OUT if not phases else PhaseKind.WALK_BACK
        phases.append(Phase(kind, cursor, end))
    return GaitSegments(tuple(phases))
