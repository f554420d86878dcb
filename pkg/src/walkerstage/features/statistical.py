from __future__ import annotations

import numpy as np

from ..errors import TooShort
from ._values import FeatureValues

STATISTICS = ("mean", "std", "skewness", "kurtosis", "median", "q1", "q3", "iqr", "range", "rms")


def extract_statistical(x) -> FeatureValues:
    """Ten descriptive statistics of a real sequence.

    Moments use the population (divide-by-n) convention and kurtosis is
    Pearson's (3 for a normal). A zero-variance input gets skewness and
    kurtosis 0, and both are flagged.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 2:
        raise TooShort(f"statistical features need at least 2 samples, got {x.size}")
    mean = x.mean()
    d = x - mean
    m2 = np.mean(d * d)
    q1, med, q3 = np.percentile(x, [25.0, 50.0, 75.0])
    out = FeatureValues(
        mean=float(mean),
        std=float(np.sqrt(m2)),
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        iqr=float(q3 - q1),
        range=float(x.max() - x.min()),
        rms=float(np.sqrt(np.mean(x * x))),
    )
    # relative test: round-off leaves tiny m2 for constant inputs
    if m2 <= (1e-12 * max(abs(mean), 1.0)) ** 2:
        out["std"] = 0.0
        out["skewness"] = 0.0
        out["kurtosis"] = 0.0
        out.flag("skewness", "kurtosis")
    else:
        out["skewness"] = float(np.mean(d**3) / m2**1.5)
        out["kurtosis"] = float(np.mean(d**4) / m2**2)
    res = FeatureValues({k: out[k] for k in STATISTICS})
    res.flag(*out.flags)
    return res
