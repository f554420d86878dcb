"""Walker-sensor gait analysis for classifying Parkinson's disease stages.

Stages: ingest, preprocess, features, selection, forest, evaluation, plus a
synthetic cohort generator and a command-line front end.
"""

__version__ = "1.0.0"
