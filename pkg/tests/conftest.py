from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from subhyp.generators import square, staircase, u_corridor
from subhyp.narrow_path import build_narrow_chain
from subhyp.wide_path import build_wide_chain

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", parent=settings.get_profile("default"), max_examples=1000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

U_FROM, U_TO = (0.5, 4.5), (4.5, 4.5)
STAIR_FROM, STAIR_TO = (0.5, 0.5), (5.5, 5.5)
STAIR_H = 0.006
STAIR_CELLS = 6_000_000


@pytest.fixture(scope="session")
def u_domain():
    return u_corridor()


@pytest.fixture(scope="session")
def unit_square():
    return square(1.0)


@pytest.fixture(scope="session")
def u_grid(u_domain):
    return u_domain.grid(0.02)


@pytest.fixture(scope="session")
def u_wide(u_domain, u_grid):
    return build_wide_chain(u_domain, u_grid, U_FROM, U_TO)


@pytest.fixture(scope="session")
def u_narrow(u_domain, u_wide):
    return build_narrow_chain(u_wide, u_domain)


@pytest.fixture(scope="session")
def stair_domain():
    d = staircase(6, 0.05)
    d.max_cells = STAIR_CELLS
    return d


@pytest.fixture(scope="session")
def stair_grid(stair_domain):
    return stair_domain.grid(STAIR_H)


@pytest.fixture(scope="session")
def stair_wide(stair_domain, stair_grid):
    return build_wide_chain(stair_domain, stair_grid, STAIR_FROM, STAIR_TO)


@pytest.fixture(scope="session")
def stair_narrow(stair_domain, stair_wide):
    return build_narrow_chain(stair_wide, stair_domain)
