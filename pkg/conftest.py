"""
Shared fixtures: base fields, bundled golden rows and settings.
"""
import pytest

from app.config import DATA_DIR, Settings
from app.services.quadfield import make_field
from app.services.tables_io import parse_tables


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: sweeps over many fields or the whole golden bundle")


@pytest.fixture
def settings() -> Settings:
    return Settings(
        golden_path=DATA_DIR / "golden_tables.csv",
        override_path=None,
        elliptic_constant="class_number",
        workers=1,
        strict_counts=False,
    )


@pytest.fixture
def rationals():
    return make_field(1)


@pytest.fixture
def q5():
    return make_field(5)


@pytest.fixture
def q8():
    return make_field(8)


@pytest.fixture
def q12():
    return make_field(12)


@pytest.fixture(scope="session")
def golden_rows():
    return parse_tables(DATA_DIR / "golden_tables.csv", strict=False)
