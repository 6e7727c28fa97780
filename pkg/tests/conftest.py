"""Shared fixtures for the test suite."""

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from mcaimem import retention

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

FIXTURE_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def cal() -> retention.RetentionCalibration:
    """Default calibration fitted to the built-in anchors."""
    return retention.default_calibration()


@pytest.fixture(scope="session")
def classifier_dir() -> Path:
    return FIXTURE_DIR / "tiny_classifier"
