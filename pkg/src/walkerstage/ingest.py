"""Session data model, stage labels and the on-disk CSV/JSON formats.

A session is one subject's walker recording: two handle force channels,
two cumulative wheel-encoder channels and a tri-axial accelerometer, all
sampled on a common implicit clock ``t = index / sample_rate_hz``.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_json, atomic_write_text
from .errors import (
    DuplicateSubject,
    EncoderNotMonotone,
    LengthMismatch,
    MalformedFile,
    NonFiniteSample,
    UnknownLabel,
)

CHANNELS = ("fL", "fR", "dL", "dR", "ax", "ay", "az")
CSV_HEADER = ("t",) + CHANNELS
DEFAULT_SAMPLE_RATE_HZ = 100.0
ENCODER_JITTER_M = 1e-3


class StageLabel(enum.IntEnum):
    """Modified Hoehn & Yahr class labels, ordered by severity."""

    HC = 0
    HY1 = 1
    HY2 = 2
    HY2_5 = 3
    HY3 = 4
    HY4 = 5

    @classmethod
    def from_string(cls, text: str) -> "StageLabel":
        try:
            return _LABEL_FROM_STR[str(text).strip()]
        except KeyError:
            raise UnknownLabel(f"unknown stage label: {text!r}") from None

    def to_string(self) -> str:
        return _LABEL_TO_STR[self]


_LABEL_TO_STR = {
    StageLabel.HC: "HC",
    StageLabel.HY1: "1",
    StageLabel.HY2: "2",
    StageLabel.HY2_5: "2.5",
    StageLabel.HY3: "3",
    StageLabel.HY4: "4",
}
_LABEL_FROM_STR = {v: k for k, v in _LABEL_TO_STR.items()}
LABEL_STRINGS = tuple(_LABEL_TO_STR[lab] for lab in StageLabel)
N_CLASSES = len(StageLabel)


@dataclass(frozen=True, eq=False)
class SensorSession:
    """One subject's seven-channel recording.

    Channel arrays are made read-only on construction so a session can be
    shared between workers without copying.
    """

    subject_id: str
    label: StageLabel
    sample_rate_hz: float
    force_left: np.ndarray
    force_right: np.ndarray
    encoder_left: np.ndarray
    encoder_right: np.ndarray
    accel_x: np.ndarray
    accel_y: np.ndarray
    accel_z: np.ndarray

    def __post_init__(self):
        if not self.sample_rate_hz > 0 or not np.isfinite(self.sample_rate_hz):
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        lengths = set()
        for name in _FIELDS:
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            if arr.ndim != 1:
                raise LengthMismatch(f"channel {name} is not one-dimensional")
            lengths.add(arr.size)
        if len(lengths) != 1:
            raise LengthMismatch(f"channel lengths differ: {sorted(lengths)}")
        n = lengths.pop()
        if n < 2 * self.sample_rate_hz:
            raise LengthMismatch(
                f"session has {n} samples, need at least {2 * self.sample_rate_hz:g} (2 s)"
            )
        for name, short in zip(_FIELDS, CHANNELS):
            bad = np.flatnonzero(~np.isfinite(getattr(self, name)))
            if bad.size:
                raise NonFiniteSample(int(bad[0]), short)
        object.__setattr__(self, "label", StageLabel(self.label))

    @property
    def n_samples(self) -> int:
        return self.force_left.size

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    @property
    def accel(self) -> np.ndarray:
        """Accelerometer as an ``(n, 3)`` array."""
        return np.column_stack([self.accel_x, self.accel_y, self.accel_z])

    def channels(self) -> np.ndarray:
        """All channels as an ``(n, 7)`` array in ``CHANNELS`` order."""
        return np.column_stack([getattr(self, name) for name in _FIELDS])

    def with_accel(self, accel: np.ndarray) -> "SensorSession":
        """Copy of this session with the accelerometer replaced."""
        accel = np.asarray(accel, dtype=float)
        return SensorSession(
            self.subject_id, self.label, self.sample_rate_hz,
            self.force_left, self.force_right, self.encoder_left, self.encoder_right,
            accel[:, 0], accel[:, 1], accel[:, 2],
        )


_FIELDS = (
    "force_left", "force_right", "encoder_left", "encoder_right",
    "accel_x", "accel_y", "accel_z",
)


def clamp_encoder(values: np.ndarray, tolerance: float = ENCODER_JITTER_M, name: str = "encoder"):
    """Clamp small backwards steps of a cumulative encoder channel.

    Decreases up to ``tolerance`` metres are treated as quantisation jitter
    and clamped to the previous value; anything larger is rejected.
    """
    values = np.asarray(values, dtype=float).copy()
    if values.size < 2:
        return values
    steps = np.diff(values)
    bad = np.flatnonzero(steps < -tolerance)
    if bad.size:
        i = int(bad[0]) + 1
        raise EncoderNotMonotone(
            f"{name} decreases by {-steps[bad[0]]:.6g} m at row {i} (tolerance {tolerance:g} m)"
        )
    if np.any(steps < 0):
        values = np.maximum.accumulate(values)
    return values


def session_from_array(
    subject_id: str,
    label,
    sample_rate_hz: float,
    data: np.ndarray,
) -> SensorSession:
    """Build a validated session from an ``(n, 7)`` array in channel order."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(CHANNELS):
        raise MalformedFile(f"expected (n, 7) channel array, got shape {data.shape}")
    bad = np.argwhere(~np.isfinite(data))
    if bad.size:
        row, col = bad[0]
        raise NonFiniteSample(int(row), CHANNELS[col])
    cols = [data[:, i] for i in range(7)]
    cols[2] = clamp_encoder(cols[2], name="dL")
    cols[3] = clamp_encoder(cols[3], name="dR")
    if not isinstance(label, StageLabel):
        label = StageLabel.from_string(label) if isinstance(label, str) else StageLabel(label)
    return SensorSession(subject_id, label, float(sample_rate_hz), *cols)


def load_session(
    path,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    subject_id: str | None = None,
    label=StageLabel.HC,
) -> SensorSession:
    """Read a session CSV.

    The header must be ``t,fL,fR,dL,dR,ax,ay,az``; the leading ``t`` column
    may be omitted. When present it is checked to be finite and
    non-decreasing but otherwise ignored. Row indices in errors count data
    rows from zero.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MalformedFile(f"{path}: empty file") from None
        if tuple(header) == CSV_HEADER:
            has_t = True
        elif tuple(header) == CHANNELS:
            has_t = False
        else:
            raise MalformedFile(f"{path}: bad header {','.join(header)!r}")
        width = len(header)
        rows = []
        for i, row in enumerate(reader):
            if not row:
                continue
            if len(row) != width:
                raise MalformedFile(f"{path}: row {i} has {len(row)} columns, expected {width}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise MalformedFile(f"{path}: row {i} has a non-numeric cell") from None
    data = np.array(rows, dtype=float).reshape(-1, width)
    bad = np.argwhere(~np.isfinite(data))
    if bad.size:
        row, col = bad[0]
        raise NonFiniteSample(int(row), header[col])
    if has_t:
        t = data[:, 0]
        if t.size > 1 and np.any(np.diff(t) < 0):
            raise MalformedFile(f"{path}: time column is decreasing")
        data = data[:, 1:]
    return session_from_array(subject_id or path.stem, label, sample_rate_hz, data)


def session_csv_text(session: SensorSession, precision: int = 6) -> str:
    fmt = f"%.{precision}f"
    t = np.arange(session.n_samples) / session.sample_rate_hz
    data = np.column_stack([t, session.channels()])
    lines = [",".join(CSV_HEADER)]
    lines.extend(",".join(fmt % v for v in row) for row in data)
    return "\n".join(lines) + "\n"


def write_session(session: SensorSession, path, precision: int = 6) -> Path:
    """Write a session CSV with fixed-point formatting (atomic)."""
    return atomic_write_text(path, session_csv_text(session, precision))


@dataclass(frozen=True)
class ManifestEntry:
    subject_id: str
    file: str
    label: StageLabel


@dataclass
class CohortManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.subject_id in seen:
                raise DuplicateSubject(f"duplicate subject id: {e.subject_id}")
            seen.add(e.subject_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def path_of(self, entry: ManifestEntry) -> Path:
        return self.root / entry.file

    def load(self, entry: ManifestEntry) -> SensorSession:
        return load_session(self.path_of(entry), self.sample_rate_hz, entry.subject_id, entry.label)

    def to_json(self) -> dict:
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "subjects": [
                {"id": e.subject_id, "file": e.file, "label": e.label.to_string()}
                for e in self.entries
            ],
        }


def load_manifest(path) -> CohortManifest:
    """Read a cohort manifest; session paths resolve relative to its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("subjects", None), list):
        raise MalformedFile(f"{path}: manifest needs a 'subjects' list")
    rate = float(doc.get("sample_rate_hz", DEFAULT_SAMPLE_RATE_HZ))
    if not rate > 0:
        raise MalformedFile(f"{path}: sample_rate_hz must be positive")
    entries = []
    for rec in doc["subjects"]:
        try:
            sid, file, label = str(rec["id"]), str(rec["file"]), rec["label"]
        except (KeyError, TypeError):
            raise MalformedFile(f"{path}: subject entries need id, file and label") from None
        entries.append(ManifestEntry(sid, file, StageLabel.from_string(label)))
    return CohortManifest(entries, rate, path.parent)


def write_manifest(manifest: CohortManifest, path) -> Path:
    return atomic_write_json(path, manifest.to_json())
