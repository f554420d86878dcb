import json

import numpy as np
import pytest

from walkerstage.errors import (
    DuplicateSubject,
    EncoderNotMonotone,
    LengthMismatch,
    MalformedFile,
    NonFiniteSample,
    UnknownLabel,
)
from walkerstage.ingest import (
    CHANNELS,
    CohortManifest,
    ManifestEntry,
    StageLabel,
    clamp_encoder,
    load_manifest,
    load_session,
    session_csv_text,
    session_from_array,
    write_manifest,
    write_session,
)


def _write_csv(path, data, fs=100.0):
    t = np.arange(len(data)) / fs
    rows = ["t," + ",".join(CHANNELS)]
    rows += [",".join(str(v) for v in [ti, *row]) for ti, row in zip(t, data)]
    path.write_text("\n".join(rows) + "\n")


def _channels(n, rng):
    data = rng.normal(size=(n, 7))
    data[:, 2] = np.linspace(0, 3, n)
    data[:, 3] = np.linspace(0, 3, n)
    return data


def test_parse_500_rows(tmp_path):
    p = tmp_path / "s.csv"
    _write_csv(p, _channels(500, np.random.default_rng(0)))
    s = load_session(p, 100.0)
    assert s.n_samples == 500
    assert s.channels().shape == (500, 7)
    assert s.subject_id == "s"


def test_nan_reports_row_and_channel(tmp_path):
    data = _channels(500, np.random.default_rng(1))
    data[17, 4] = np.nan
    p = tmp_path / "s.csv"
    _write_csv(p, data)
    with pytest.raises(NonFiniteSample) as info:
        load_session(p)
    assert info.value.row == 17
    assert info.value.channel == "ax"


def test_roundtrip_is_byte_identical(tmp_path):
    p = tmp_path / "a.csv"
    _write_csv(p, _channels(300, np.random.default_rng(2)))
    s = load_session(p)
    write_session(s, tmp_path / "b.csv")
    s2 = load_session(tmp_path / "b.csv")
    write_session(s2, tmp_path / "c.csv")
    assert (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()
    np.testing.assert_allclose(s2.channels(), s.channels(), atol=5e-7)


def test_header_without_time_column(tmp_path):
    data = _channels(250, np.random.default_rng(3))
    p = tmp_path / "s.csv"
    p.write_text(",".join(CHANNELS) + "\n" + "\n".join(",".join(map(str, r)) for r in data) + "\n")
    assert load_session(p).n_samples == 250


@pytest.mark.parametrize("text", ["", "a,b,c\n1,2,3\n", "t,fL,fR,dL,dR,ax,ay,az\n0,1,2\n"])
def test_malformed_files(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(MalformedFile):
        load_session(p)


def test_too_short_session():
    with pytest.raises(LengthMismatch):
        session_from_array("x", "HC", 100.0, np.zeros((150, 7)))


def test_encoder_jitter_clamped_but_large_reversal_rejected():
    v = np.array([0.0, 0.01, 0.0095, 0.02])
    np.testing.assert_array_equal(clamp_encoder(v), [0.0, 0.01, 0.01, 0.02])
    with pytest.raises(EncoderNotMonotone):
        clamp_encoder(np.array([0.0, 0.5, 0.4]))


def test_labels():
    assert [StageLabel.from_string(s) for s in ("HC", "1", "2", "2.5", "3", "4")] == list(StageLabel)
    with pytest.raises(UnknownLabel):
        StageLabel.from_string("5")


def _manifest_doc(n_hc, n_pd):
    subjects = [{"id": f"H{i}", "file": f"H{i}.csv", "label": "HC"} for i in range(n_hc)]
    labels = ["1", "2", "2.5", "3", "4"]
    subjects += [{"id": f"P{i}", "file": f"P{i}.csv", "label": labels[i % 5]} for i in range(n_pd)]
    return {"sample_rate_hz": 100, "subjects": subjects}


def test_manifest_of_86(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(_manifest_doc(19, 67)))
    m = load_manifest(p)
    assert len(m) == 86
    assert sum(e.label == StageLabel.HC for e in m) == 19


def test_empty_manifest(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"subjects": []}))
    assert len(load_manifest(p)) == 0


def test_manifest_errors(tmp_path):
    p = tmp_path / "m.json"
    doc = _manifest_doc(1, 0)
    doc["subjects"][0]["label"] = "5"
    p.write_text(json.dumps(doc))
    with pytest.raises(UnknownLabel):
        load_manifest(p)
    p.write_text("{not json")
    with pytest.raises(MalformedFile):
        load_manifest(p)
    with pytest.raises(DuplicateSubject):
        CohortManifest([ManifestEntry("a", "a.csv", StageLabel.HC)] * 2)


def test_manifest_roundtrip(tmp_path):
    m = CohortManifest([ManifestEntry("a", "x/a.csv", StageLabel.HY2_5)], 50.0, tmp_path)
    write_manifest(m, tmp_path / "m.json")
    back = load_manifest(tmp_path / "m.json")
    assert back.entries == m.entries
    assert back.sample_rate_hz == 50.0
    assert back.path_of(back.entries[0]) == tmp_path / "x/a.csv"


def test_csv_text_fixed_precision(hy2_session):
    text = session_csv_text(hy2_session[0], precision=3)
    first = text.splitlines()[1].split(",")
    assert all(len(v.split(".")[1]) == 3 for v in first)
