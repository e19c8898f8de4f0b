import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fgforge.expansion import BoundaryData, expand, random_boundary_metric
from fgforge.field import GridSpec, SymForm
from fgforge.geometry import BulkMetric, sym_series
from fgforge.reference import reference

AMPLITUDE = 0.05


def ads_sigma(grid: GridSpec) -> SymForm:
    return SymForm.constant(grid, np.diag([-2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]))


def ads_background(grid: GridSpec, order: int, m: float = 0.5) -> BulkMetric:
    """Compactified AdS-Schwarzschild metric from the 1d oracle."""
    ref = reference("ads_schwarzschild_planar", {"m": m}, order)
    return BulkMetric(1, sym_series(ref.forms(grid)))


def cusp_background(grid: GridSpec, order: int) -> BulkMetric:
    return BulkMetric(1, sym_series(reference("cusp", order=order).forms(grid)))


@pytest.fixture(scope="session")
def grid8():
    return GridSpec(8)


@pytest.fixture(scope="session")
def grid16():
    return GridSpec(16)


@pytest.fixture(scope="session")
def cusp_expansion(grid16):
    gamma = SymForm.identity(grid16)
    return expand(BoundaryData(gamma, SymForm.zeros(grid16), 8))


@pytest.fixture(scope="session")
def ads_expansion(grid8):
    return expand(BoundaryData(SymForm.identity(grid8), ads_sigma(grid8), 6))


@pytest.fixture(scope="session")
def random_gamma(grid16):
    return random_boundary_metric(grid16, np.random.default_rng(7), AMPLITUDE)


@pytest.fixture(scope="session")
def random_expansion(grid16, random_gamma):
    return expand(BoundaryData(random_gamma, SymForm.zeros(grid16), 6))


settings.register_profile("fgforge", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("fgforge")
