from __future__ import annotations


class FeatureValues(dict):
    """Named feature values plus the names whose value is a convention.

    A flagged name either holds NaN (undefined, imputed later) or a
    conventional placeholder such as zero skewness for a constant input.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.flags: set[str] = set()

    def flag(self, *names):
        self.flags.update(names)
