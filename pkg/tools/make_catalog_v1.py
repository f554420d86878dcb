"""Regenerate src/walkerstage/features/catalog_v1.json.

The catalog is shipped as data; this script only documents how the v1
grid was laid out. Run from the repository root.
"""

import json
from pathlib import Path

STAT_CHANNELS = ["fL", "fR", "vL", "vR", "ax", "ay", "az", "azimuth", "elevation", "radius"]
STATS = ["mean", "std", "skewness", "kurtosis", "median", "q1", "q3", "iqr", "range", "rms"]
# azimuth wraps at +-pi, which makes its spectrum meaningless
FREQ_CHANNELS = ["fL", "fR", "vL", "vR", "ax", "ay", "az", "elevation", "radius"]
FREQ_STATS = ["mean_freq", "median_freq", "bw_3db", "obw_99", "obw_99_power", "total_power"]
AXIS_PAIRS = ["ax|ay", "ax|az", "ay|az"]
PAIR_STATS = ["correlation", "mutual_info", "cross_entropy"]
ACCEL_CHANNELS = ["ax", "ay", "az", "azimuth", "elevation", "radius"]
FORCE_ACCEL_PAIRS = ["fL|ax", "fR|ax", "fL|az", "fR|az"]
TUG_STATS = [
    "step_count", "tug_time_s", "turn_time_s", "cadence", "step_time_mean",
    "step_time_std", "step_time_cv", "step_length_mean", "walk_velocity", "walk_turn_ratio",
]
PHASE_STATS = [
    "step_count", "duration_s", "cadence", "step_time_mean", "step_time_std",
    "step_time_cv", "step_length_mean", "walk_velocity",
]


def feature(name, category, channel, extractor, **params):
    return {"name": name, "category": category, "channel": channel,
            "extractor": extractor, "params": params}


def build():
    out = []
    for ch in STAT_CHANNELS:
        for st in STATS:
            out.append(feature(f"stat.{ch}.{st}", "Statistical", ch, "statistical",
                               stat=st, phase="active"))
    for ch in FREQ_CHANNELS:
        for st in FREQ_STATS:
            out.append(feature(f"freq.{ch}.{st}", "Frequency", ch, "frequency",
                               stat=st, phase="active"))
    info = "InformationTheoretic"
    for phase, pairs, zcr_channels in (
        ("walking", AXIS_PAIRS, ACCEL_CHANNELS),
        ("turn", AXIS_PAIRS, ["ax", "ay", "az"]),
    ):
        for pair in pairs:
            for st in PAIR_STATS:
                a, b = pair.split("|")
                out.append(feature(f"info.{a}_{b}.{st}@{phase}", info, pair, "axis_pair",
                                   stat=st, phase=phase, bins=16))
        for ch in zcr_channels:
            out.append(feature(f"info.{ch}.zcr@{phase}", info, ch, "zero_crossing_rate",
                               phase=phase))
        if phase == "walking":
            for ch in ACCEL_CHANNELS:
                out.append(feature(f"info.{ch}.harmonic_ratio", info, ch, "harmonic_ratio",
                                   phase=phase, n_harmonics=10))
            out.append(feature("info.walk_ratio", info, "session", "walk_ratio"))
            out.append(feature("info.walking_intensity", info, "session", "walking_intensity"))
            for pair in FORCE_ACCEL_PAIRS:
                a, b = pair.split("|")
                out.append(feature(f"info.{a}_{b}.mutual_info@{phase}", info, pair, "axis_pair",
                                   stat="mutual_info", phase=phase, bins=16))
    for st in TUG_STATS:
        out.append(feature(f"st.{st}", "SpatioTemporal", "session", "spatiotemporal",
                           stat=st, scope="tug"))
    for st in PHASE_STATS:
        out.append(feature(f"st.walk_phase_mean.{st}", "SpatioTemporal", "session",
                           "spatiotemporal", stat=st, scope="walk_phase_mean"))
    return out


def main():
    feats = build()
    counts = {}
    for f in feats:
        counts[f["category"]] = counts.get(f["category"], 0) + 1
    order = ["SpatioTemporal", "Statistical", "Frequency", "InformationTheoretic"]
    doc = {
        "version": "v1",
        "n_features": len(feats),
        "category_counts": {c: counts.get(c, 0) for c in order},
        "features": feats,
    }
    path = Path("src/walkerstage/features/catalog_v1.json")
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    print(len(feats), doc["category_counts"])


if __name__ == "__main__":
    main()
