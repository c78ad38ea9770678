from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from tiup.formula import load_seeds, load_templates
from tiup.synthesizer import seed_instances, synthesize

settings.register_profile(
    "tiup", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
settings.load_profile("tiup")


@pytest.fixture(scope="session")
def seeds():
    return load_seeds()


@pytest.fixture(scope="session")
def seed_map(seeds):
    return {s.name: s for s in seeds}


@pytest.fixture(scope="session")
def templates():
    return load_templates()


@pytest.fixture(scope="session")
def instances(templates, seeds):
    return synthesize(templates, seeds)


@pytest.fixture(scope="session")
def corpus(seeds, instances):
    """Seeds followed by every instantiation: the campaign corpus."""
    return seed_instances(seeds) + instances


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines):
        terminalreporter.write_line(line)
