import pytest

from bornfield.energy_audit import run_baseline


@pytest.fixture(scope="session")
def baseline():
    """Default-resolution classical run shared by the audit tests."""
    return run_baseline()
