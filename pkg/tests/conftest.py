import numpy as np
import pytest
from hypothesis import settings

from uiobank import InvalidInput, PlantModel, catalog

import oracles

settings.register_profile("default", deadline=None)
settings.load_profile("default")

EXAMPLE_PLANTS = (1, 2, 5, 6)


@pytest.fixture(params=EXAMPLE_PLANTS, ids=lambda e: f"example{e}")
def example_plant(request):
    return catalog.plant(request.param)


def valid_random_plants(count, seed, integer_every=2, **kw):
    """First ``count`` random plants that pass PlantModel validation."""
    rng = np.random.default_rng(seed)
    out = []
    i = 0
    while len(out) < count:
        A, B, C = oracles.random_plant(rng, integer=(i % integer_every == 1), **kw)
        i += 1
        try:
            out.append(PlantModel(A, B, C))
        except InvalidInput:
            continue
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
