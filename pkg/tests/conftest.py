import numpy as np
import pytest

from edukl import PercentileTable


def logistic_table(center: float, scale: float) -> PercentileTable:
    """Smooth nonuniform percentile table from logistic quantiles."""
    p = 0.02 + 0.96 * np.arange(101) / 100.0
    return PercentileTable(center + scale * np.log(p / (1.0 - p)))


@pytest.fixture
def saeb_like_table() -> PercentileTable:
    """A plausible score-scale table: nonlinear, inside [0, 500]."""
    return logistic_table(250.0, 40.0)


@pytest.fixture
def country_tables() -> list[PercentileTable]:
    """Three synthetic country tables on a PISA-like scale."""
    return [
        logistic_table(540.0, 35.0),
        logistic_table(520.0, 30.0),
        logistic_table(555.0, 38.0),
    ]


@pytest.fixture
def national_table() -> PercentileTable:
    return logistic_table(400.0, 33.0)
