"""Synthetic walker TUG sessions with ground truth.

Sessions follow the TUG shape: stand, walk a straight walkway, turn
180 degrees, walk back, stand. Gait parameters come from per-stage
profiles that get slower, shorter-stepped and more variable with severity,
so class recovery is a meaningful end-to-end check. None of the numbers
here claim clinical fidelity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ._io import atomic_write_json, atomic_write_text, csv_text
from .errors import InvalidProfile
from .ingest import (
    DEFAULT_SAMPLE_RATE_HZ,
    CohortManifest,
    ManifestEntry,
    SensorSession,
    StageLabel,
    session_csv_text,
    write_manifest,
)
from .preprocess.rotation import Rotation, rodrigues_rotate
from .preprocess.segmentation import GaitSegments, Phase, PhaseKind

GRAVITY = 9.81
WALKWAY_M = 3.0
WHEELBASE_M = 0.5
TURN_RADIUS_M = 0.3
ENCODER_TICK_M = 1e-3
IMPACT_WIDTH_S = 0.03
IDLE_HEAD_S = 2.0
IDLE_TAIL_S = 1.5
SPEED_MODULATION = 0.3
MAX_TILT_DEG = 20.0
LATERAL_SWAY = 0.1  # m/s^2, stride-frequency side-to-side rocking
# between-subject log-normal spread of amplitude parameters; body mass and
# how hard a person leans on the walker vary far more than gait timing
SUBJECT_GRIP_LOG_SD = 0.3
SUBJECT_IMPACT_LOG_SD = 0.25
SUBJECT_TREMOR_LOG_SD = 0.3

# HY2 and HY2.5 sit half a step apart on this axis, every other pair one step
SEVERITY = {
    StageLabel.HC: 0.0,
    StageLabel.HY1: 1.0,
    StageLabel.HY2: 2.0,
    StageLabel.HY2_5: 2.5,
    StageLabel.HY3: 3.5,
    StageLabel.HY4: 4.5,
}

DEFAULT_COUNTS = {
    StageLabel.HC: 19,
    StageLabel.HY1: 14,
    StageLabel.HY2: 13,
    StageLabel.HY2_5: 14,
    StageLabel.HY3: 13,
    StageLabel.HY4: 13,
}


@dataclass(frozen=True)
class StageProfile:
    label: StageLabel
    cadence_hz: tuple  # (mean, between-subject sd), steps per second
    step_length_m: tuple  # (mean, sd)
    step_time_cv: float
    turn_time_s: float
    grip_force_n: float
    tremor_band_hz: tuple
    tremor_amplitude: float  # m/s^2
    noise_snr_db: float = 10.0
    impact_amplitude: float = 3.0  # m/s^2 peak of each heel-strike pulse

    def validate(self):
        cad, cad_sd = self.cadence_hz
        step, step_sd = self.step_length_m
        lo, hi = self.tremor_band_hz
        checks = [
            (cad > 0 and cad_sd >= 0, "cadence must be positive"),
            (1.0 / cad > 0.35, "mean step time must exceed 0.35 s"),
            (step > 0 and step_sd >= 0, "step length must be positive"),
            (0 <= self.step_time_cv < 0.3, "step_time_cv must lie in [0, 0.3)"),
            (self.turn_time_s > 0.5, "turn time must exceed 0.5 s"),
            (self.grip_force_n > 0, "grip force must be positive"),
            (0 < lo <= hi, "tremor band must be a positive interval"),
            (self.tremor_amplitude >= 0, "tremor amplitude must be non-negative"),
            (self.impact_amplitude > 0, "impact amplitude must be positive"),
            (not math.isnan(self.noise_snr_db), "noise_snr_db must not be NaN"),
        ]
        for ok, msg in checks:
            if not ok:
                raise InvalidProfile(f"{self.label.name}: {msg}")
        return self


def default_profile(label: StageLabel, noise_snr_db: float = 10.0) -> StageProfile:
    s = SEVERITY[StageLabel(label)]
    return StageProfile(
        label=StageLabel(label),
        cadence_hz=(2.0 - 0.225 * s, 0.04),
        step_length_m=(0.60 - 0.07 * s, 0.015),
        step_time_cv=0.02 + 0.015 * s,
        turn_time_s=1.6 + 0.5 * s,
        grip_force_n=15.0 + 4.0 * s,
        tremor_band_hz=(4.0, 6.0),
        tremor_amplitude=0.04 * s,
        noise_snr_db=noise_snr_db,
        impact_amplitude=3.0 - 0.3 * s,
    )


def default_profiles(noise_snr_db: float = 10.0) -> dict:
    return {lab: default_profile(lab, noise_snr_db) for lab in StageLabel}


@dataclass
class GroundTruth:
    footfall_indices: np.ndarray
    phase_boundaries: GaitSegments
    frame_rotation: Rotation
    clean_channels: np.ndarray  # (n, 7) noise-free, sensor frame
    step_length_m: float = 0.0
    step_time_s: float = 0.0
    cadence_hz: float = 0.0
    extras: dict = field(default_factory=dict)


def _random_rotation(rng: np.random.Generator, max_deg: float) -> Rotation:
    axis = rng.standard_normal(3)
    angle = np.deg2rad(rng.uniform(0.0, max_deg))
    return Rotation(axis, angle)


def generate_session(
    profile: StageProfile,
    duration_hint_s: float | None = None,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    seed: int | np.random.SeedSequence = 0,
    subject_id: str = "synthetic",
    rotation: Rotation | None = None,
    vary_subject: bool = True,
) -> tuple[SensorSession, GroundTruth]:
    """Simulate one TUG session.

    Parameters
    ----------
    profile : StageProfile
        Stage parameters. ``noise_snr_db=inf`` switches noise off.
    duration_hint_s : float, optional
        Minimum session length; the standing tail is padded to reach it.
    rotation : Rotation, optional
        Sensor frame rotation (sensor = rotation applied to walker frame).
        Drawn at random up to 20 degrees when omitted.
    vary_subject : bool
        Draw subject-level cadence, step length, turn time and amplitude
        parameters around the profile values. When False the profile
        values are used exactly.
    """
    profile.validate()
    fs = float(sample_rate_hz)
    rng = np.random.default_rng(seed)
    cad_mu, cad_sd = profile.cadence_hz
    len_mu, len_sd = profile.step_length_m
    if vary_subject:
        cadence = max(cad_mu + cad_sd * rng.standard_normal(), 0.3 * cad_mu)
        step_len = max(len_mu + len_sd * rng.standard_normal(), 0.3 * len_mu)
        turn_time = profile.turn_time_s * float(np.exp(0.08 * rng.standard_normal()))
        grip = profile.grip_force_n * float(np.exp(SUBJECT_GRIP_LOG_SD * rng.standard_normal()))
        impact = profile.impact_amplitude * float(np.exp(SUBJECT_IMPACT_LOG_SD * rng.standard_normal()))
        tremor = profile.tremor_amplitude * float(np.exp(SUBJECT_TREMOR_LOG_SD * rng.standard_normal()))
    else:
        cadence, step_len, turn_time, grip = cad_mu, len_mu, profile.turn_time_s, profile.grip_force_n
        impact, tremor = profile.impact_amplitude, profile.tremor_amplitude
    if rotation is None:
        rotation = _random_rotation(rng, MAX_TILT_DEG)
    step_time = 1.0 / cadence

    # step schedule: walk out, turn, walk back; intervals snapped to samples
    n_walk = max(2, int(math.ceil(WALKWAY_M / step_len)))
    n_turn = max(2, int(round(turn_time / step_time)))
    n_steps = 2 * n_walk + n_turn
    intervals = step_time * (1.0 + profile.step_time_cv * rng.standard_normal(n_steps))
    intervals = np.clip(intervals, 0.6 * step_time, 1.4 * step_time)
    intervals = np.maximum(np.round(intervals * fs), 1).astype(int)
    head = int(round(IDLE_HEAD_S * fs))
    bounds = head + np.concatenate(([0], np.cumsum(intervals)))  # step start samples
    active_end = int(bounds[-1])
    n = active_end + int(round(IDLE_TAIL_S * fs))
    if duration_hint_s is not None:
        n = max(n, int(math.ceil(duration_hint_s * fs)))
    t = np.arange(n) / fs

    turn_dist_outer = math.pi * (TURN_RADIUS_M + WHEELBASE_M / 2)
    turn_dist_inner = math.pi * (TURN_RADIUS_M - WHEELBASE_M / 2)
    step_lengths = step_len * (1.0 + 0.03 * rng.standard_normal(n_steps))
    v_left = np.zeros(n)
    v_right = np.zeros(n)
    stride_phase = np.zeros(n)
    for i in range(n_steps):
        a, b = int(bounds[i]), int(bounds[i + 1])
        tau = (np.arange(a, b) - a) / (b - a)
        shape = 1.0 - SPEED_MODULATION * np.cos(2 * np.pi * tau)
        shape /= shape.mean()
        dur = (b - a) / fs
        if n_walk <= i < n_walk + n_turn:
            v_left[a:b] = shape * turn_dist_inner / n_turn / dur
            v_right[a:b] = shape * turn_dist_outer / n_turn / dur
        else:
            v_left[a:b] = v_right[a:b] = shape * step_lengths[i] / dur
        stride_phase[a:b] = i + tau
    stride_phase[active_end:] = n_steps

    enc_left = np.floor(np.cumsum(v_left) / fs / ENCODER_TICK_M) * ENCODER_TICK_M
    enc_right = np.floor(np.cumsum(v_right) / fs / ENCODER_TICK_M) * ENCODER_TICK_M

    speed = 0.5 * (v_left + v_right)
    yaw_rate = (v_right - v_left) / WHEELBASE_M
    acc = np.zeros((n, 3))
    acc[:, 0] = np.gradient(speed) * fs
    sway_phase = 2 * np.pi * rng.uniform()
    walking = (t >= bounds[0] / fs) & (t < active_end / fs)
    acc[:, 1] = speed * yaw_rate + LATERAL_SWAY * walking * np.sin(np.pi * stride_phase + sway_phase)
    acc[:, 2] = -GRAVITY

    footfalls = bounds[1:].copy()
    width = IMPACT_WIDTH_S * fs
    amp = impact * (1.0 + 0.1 * rng.standard_normal(footfalls.size))
    reach = int(math.ceil(5 * width))
    for idx, a_i in zip(footfalls, amp):
        lo, hi = max(0, idx - reach), min(n, idx + reach + 1)
        k = np.arange(lo, hi)
        acc[lo:hi, 2] += a_i * np.exp(-0.5 * ((k - idx) / width) ** 2)

    if tremor > 0:
        f_tr = rng.uniform(*profile.tremor_band_hz)
        acc[:, 2] += tremor * np.sin(2 * np.pi * f_tr * t + 2 * np.pi * rng.uniform())
        tremor_force = 2.0 * tremor * np.sin(2 * np.pi * f_tr * t)
    else:
        tremor_force = np.zeros(n)

    alternation = np.cos(np.pi * stride_phase)
    alternation[~walking] = 0.0
    force_left = grip * (1.0 + 0.15 * alternation) + tremor_force
    force_right = grip * (1.0 - 0.15 * alternation) + tremor_force

    acc_sensor = rodrigues_rotate(acc, rotation)
    clean = np.column_stack([force_left, force_right, enc_left, enc_right, acc_sensor])
    noisy = clean.copy()
    if np.isfinite(profile.noise_snr_db):
        for col in (0, 1, 4, 5, 6):
            power = np.var(clean[:, col])
            sd = math.sqrt(power / 10 ** (profile.noise_snr_db / 10.0))
            noisy[:, col] += sd * rng.standard_normal(n)

    turn_start = int(bounds[n_walk])
    turn_end = int(bounds[n_walk + n_turn])
    phases = GaitSegments((
        Phase(PhaseKind.WALK_OUT, head, turn_start),
        Phase(PhaseKind.TURN, turn_start, turn_end),
        Phase(PhaseKind.WALK_BACK, turn_end, active_end),
    ))
    session = SensorSession(subject_id, profile.label, fs, *noisy.T)
    truth = GroundTruth(
        footfall_indices=footfalls.astype(int),
        phase_boundaries=phases,
        frame_rotation=rotation,
        clean_channels=clean,
        step_length_m=float(step_len),
        step_time_s=float(step_time),
        cadence_hz=float(cadence),
        extras={"turn_time_s": float(turn_time), "grip_force_n": float(grip)},
    )
    return session, truth


def subject_seed(master_seed: int, label: StageLabel, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(label), int(index)])


def generate_cohort(
    out_dir,
    counts: dict | None = None,
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ,
    seed: int = 7,
    noise_snr_db: float = 10.0,
    profiles: dict | None = None,
) -> tuple[CohortManifest, dict]:
    """Write a synthetic cohort (sessions, ground truth, manifest) to ``out_dir``.

    Defaults to 19 controls and 67 patients split 14/13/14/13/13 over
    stages 1, 2, 2.5, 3 and 4. Returns the manifest and a mapping of
    subject id to :class:`GroundTruth`.
    """
    out = Path(out_dir)
    counts = DEFAULT_COUNTS if counts is None else {StageLabel(k): int(v) for k, v in counts.items()}
    profiles = profiles or default_profiles(noise_snr_db)
    entries, truths = [], {}
    number = 0
    for label in StageLabel:
        for i in range(counts.get(label, 0)):
            number += 1
            sid = f"S{number:03d}"
            session, truth = generate_session(
                profiles[label], None, sample_rate_hz, subject_seed(seed, label, i), sid
            )
            rel = f"sessions/{sid}.csv"
            atomic_write_text(out / rel, session_csv_text(session))
            write_ground_truth(out / "ground_truth", sid, truth, sample_rate_hz)
            entries.append(ManifestEntry(sid, rel, label))
            truths[sid] = truth
    manifest = CohortManifest(entries, float(sample_rate_hz), out)
    write_manifest(manifest, out / "manifest.json")
    return manifest, truths


def write_ground_truth(directory, subject_id: str, truth: GroundTruth, sample_rate_hz: float):
    d = Path(directory)
    rows = [(int(i), f"{i / sample_rate_hz:.6f}") for i in truth.footfall_indices]
    atomic_write_text(d / f"{subject_id}_footfalls.csv", csv_text(("sample_index", "time_s"), rows))
    rows = [(p.kind.value, p.start_index, p.end_index) for p in truth.phase_boundaries.phases]
    atomic_write_text(d / f"{subject_id}_phases.csv", csv_text(("kind", "start_index", "end_index"), rows))
    atomic_write_json(d / f"{subject_id}_rotation.json", truth.frame_rotation.to_json())


def load_ground_truth_footfalls(directory, subject_id: str) -> np.ndarray:
    path = Path(directory) / f"{subject_id}_footfalls.csv"
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0].astype(int) if data.size else np.empty(0, int)


def load_ground_truth_rotation(directory, subject_id: str) -> Rotation:
    path = Path(directory) / f"{subject_id}_rotation.json"
    return Rotation.from_json(json.loads(path.read_text()))


def with_snr(profile: StageProfile, snr_db: float) -> StageProfile:
    return replace(profile, noise_snr_db=snr_db)
