import pytest

from tmisim.sim import ScenarioConfig, run_full_session


@pytest.fixture(scope="session")
def outcome_a():
    """One completed session, report-key variant A. Read-only."""
    return run_full_session(ScenarioConfig(seed=1))


@pytest.fixture(scope="session")
def outcome_b():
    """One completed session, report-key variant B. Read-only."""
    return run_full_session(ScenarioConfig(seed=1, variant="B"))
