import numpy as np
import pytest

from gencourant.cli.scenefile import list_fixtures, load_fixture

FIXTURES = list_fixtures()
VALID = [f for f in FIXTURES if f != "broken-bianchi"]


@pytest.fixture(scope="session")
def scenes():
    return {name: load_fixture(name) for name in FIXTURES}


def sample_fields(scene, count, seed, trailing=False):
    """Fields at ``count`` seeded points (a single point for a group model)."""
    pts = scene.model.sample(np.random.default_rng(seed), count)
    return scene.fields(pts[:, None, :] if trailing else pts)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict = {}


def record_criterion(number: int, passed: bool, detail: str):
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
