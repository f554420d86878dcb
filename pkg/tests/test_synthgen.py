from dataclasses import replace

import numpy as np
import pytest

from walkerstage.errors import InvalidProfile
from walkerstage.ingest import StageLabel, load_manifest, session_csv_text
from walkerstage.preprocess import Rotation
from walkerstage.synthgen import (
    DEFAULT_COUNTS,
    default_profile,
    generate_cohort,
    generate_session,
    load_ground_truth_footfalls,
    load_ground_truth_rotation,
)


def test_same_seed_same_bytes():
    a, _ = generate_session(default_profile(StageLabel.HY3), seed=4)
    b, _ = generate_session(default_profile(StageLabel.HY3), seed=4)
    c, _ = generate_session(default_profile(StageLabel.HY3), seed=5)
    assert session_csv_text(a) == session_csv_text(b)
    assert session_csv_text(a) != session_csv_text(c)


def test_step_time_doubles_from_control_to_stage_4():
    hc = 1.0 / default_profile(StageLabel.HC).cadence_hz[0]
    hy4 = 1.0 / default_profile(StageLabel.HY4).cadence_hz[0]
    assert hy4 >= 2 * hc
    _, t_hc = generate_session(default_profile(StageLabel.HC), seed=1, vary_subject=False)
    _, t_hy4 = generate_session(default_profile(StageLabel.HY4), seed=1, vary_subject=False)
    assert t_hy4.step_time_s >= 2 * t_hc.step_time_s * 0.95


def test_profiles_are_monotone_in_severity():
    profiles = [default_profile(lab) for lab in StageLabel]
    cadence = [p.cadence_hz[0] for p in profiles]
    step = [p.step_length_m[0] for p in profiles]
    cv = [p.step_time_cv for p in profiles]
    assert cadence == sorted(cadence, reverse=True)
    assert step == sorted(step, reverse=True)
    assert cv == sorted(cv)


def test_invalid_profile():
    with pytest.raises(InvalidProfile):
        replace(default_profile(StageLabel.HC), cadence_hz=(4.0, 0.1)).validate()
    with pytest.raises(InvalidProfile):
        generate_session(replace(default_profile(StageLabel.HC), turn_time_s=0.1))


def test_default_counts_total_86():
    assert sum(DEFAULT_COUNTS.values()) == 86
    assert DEFAULT_COUNTS[StageLabel.HC] == 19


def test_zero_counts_give_empty_manifest(tmp_path):
    manifest, truths = generate_cohort(tmp_path, {lab: 0 for lab in StageLabel})
    assert len(manifest) == 0 and truths == {}
    assert len(load_manifest(tmp_path / "manifest.json")) == 0


def test_cohort_files_are_reproducible(tmp_path):
    counts = {StageLabel.HC: 2, StageLabel.HY4: 1}
    generate_cohort(tmp_path / "a", counts, seed=3)
    generate_cohort(tmp_path / "b", counts, seed=3)
    files_a = sorted(p.relative_to(tmp_path / "a") for p in (tmp_path / "a").rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(tmp_path / "b") for p in (tmp_path / "b").rglob("*") if p.is_file())
    assert files_a == files_b and len(files_a) == 1 + 3 * 4
    for rel in files_a:
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_ground_truth_files(small_cohort):
    manifest, truths = small_cohort
    gt = manifest.root / "ground_truth"
    sid = manifest.entries[0].subject_id
    np.testing.assert_array_equal(load_ground_truth_footfalls(gt, sid), truths[sid].footfall_indices)
    r = load_ground_truth_rotation(gt, sid)
    np.testing.assert_allclose(r.as_matrix(), truths[sid].frame_rotation.as_matrix(), atol=1e-12)


def test_clean_channels_match_noise_free_session():
    profile = default_profile(StageLabel.HY1, noise_snr_db=np.inf)
    session, truth = generate_session(profile, seed=2, rotation=Rotation.identity())
    np.testing.assert_allclose(session.channels()[:, [0, 1, 4, 5, 6]], truth.clean_channels[:, [0, 1, 4, 5, 6]])
    phases = truth.phase_boundaries.phases
    assert [p.kind.value for p in phases] == ["WalkOut", "Turn", "WalkBack"]
    # the closing step may land just after the wheels stop
    idx = truth.footfall_indices
    assert phases[0].start_index <= idx[0] and idx[-1] < phases[-1].end_index + 0.5 * session.sample_rate_hz
