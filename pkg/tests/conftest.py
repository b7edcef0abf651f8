import pytest

import usageprofiles as up
from usageprofiles import sessionize


@pytest.fixture(scope="session")
def fixture_entries():
    entries, stats = up.ingest([up.FIXTURE_LOG])
    return entries, stats


@pytest.fixture(scope="session")
def fixture_sessions(fixture_entries):
    return sessionize.sessionize(fixture_entries[0])


@pytest.fixture(scope="session")
def fixture_matrix(fixture_sessions):
    return up.build_matrix(fixture_sessions, "binary")

