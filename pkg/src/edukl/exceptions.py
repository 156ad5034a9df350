"""Exception types shared across the package.

The CLI maps these onto exit codes: bad input data is distinguished from
bad configuration and from numerical failures (non-monotone tables or
cut-points, clustering that cannot produce the required groups).
"""


class DataError(ValueError):
    """Input data (CSV files, record streams) violates the expected schema."""


class ConfigError(ValueError):
    """A configuration file or option is malformed or inconsistent."""


class MonotonicityError(ValueError):
    """A sequence that must be (strictly) monotone is not."""


class ClusteringError(RuntimeError):
    """k-means could not produce the required number of nonempty groups."""
