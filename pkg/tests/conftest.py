"""Shared fixtures: the symbolic pipelines are pure, so each runs once per session."""
import pytest
from hypothesis import settings

from wavecov import derivations

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def galilean_report():
    return derivations.derive_galilean()


@pytest.fixture(scope="session")
def lorentz_reports():
    return derivations.derive_lorentz()


@pytest.fixture(scope="session")
def appendix3_report():
    return derivations.derive_appendix(3)


@pytest.fixture(scope="session")
def appendix4_report():
    return derivations.derive_appendix(4)
