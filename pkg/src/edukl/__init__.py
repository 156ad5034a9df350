"""edukl: level and inequality indicators for score distributions.

Quantifies how far an observed score distribution sits from a reference
(level) and how far apart the distributions of two social groups are
(inequality), using signed Kullback-Leibler divergence, with data-driven
interpretive bands.
"""

__version__ = "0.1.0"

from .empirical import (
    DensityConfig,
    DensityEstimate,
    EmpiricalDistribution,
    PercentileTable,
    density_pair,
    estimate_density,
)
from .reldist import RelativeSample, rank_area, relative_cdf, relative_density, relative_ranks
from .divergence import (
    DiscreteDistribution,
    SignedKL,
    entropy,
    expected_lr,
    kl_discrete,
    kl_divergence,
    mean_gap_area,
    signed_kl,
    theil_index,
)
from .reference import (
    CALIBRATION_ROWS,
    DEFAULT_BASE_SD,
    ReferenceSpec,
    build_reference,
    delta_shifts,
    fit_translation_scale,
    read_percentile_table,
    reference_table,
    sample_from_percentiles,
    translate_percentiles,
    typical_country_percentiles,
    write_percentile_table,
)
from .levels import (
    DEFAULT_CUTPOINTS,
    LEARNING_LEVELS,
    CutPoints,
    KLLevel,
    LevelProfile,
    classify_kl,
    derive_cutpoints,
    level_profile,
)
from .config import PipelineConfig, read_pipeline_config
from .pipeline import (
    MunicipalityIndicator,
    StudentRecord,
    compute_indicators,
    emit_report,
    ingest,
    municipality_indicators,
    split_ses_groups,
)
from .exceptions import ClusteringError, ConfigError, DataError, MonotonicityError
