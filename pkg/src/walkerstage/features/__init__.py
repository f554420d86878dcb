from .catalog import (
    DEFAULT_CATALOG_NAME,
    FeatureCatalog,
    FeatureCategory,
    FeatureDef,
    catalog_from_json,
    default_catalog,
    load_catalog,
)
from .extract import (
    EXTRACTORS,
    FeatureContext,
    FeatureMatrix,
    build_matrix,
    extract_all,
    extract_preprocessed,
    impute_median,
    load_matrix_csv,
    validate_catalog,
)
from .frequency import extract_frequency, power_spectrum, welch_segment_length
from .information import (
    cross_entropy,
    entropy,
    harmonic_ratio,
    mutual_information,
    pearson,
    zero_crossing_rate,
)
from .spatiotemporal import extract_spatiotemporal, extract_walk_phase_means
from .spherical import from_spherical, to_spherical
from .statistical import extract_statistical
