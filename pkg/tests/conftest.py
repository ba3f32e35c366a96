import time

import pytest

from freebanach import Config, Universe


@pytest.fixture(scope="session")
def exact_universe():
    """Construction-exact scalars D_1; stages X_1 (3 members), X_2 (81)."""
    return Universe(Config.exact_x2()).build()


@pytest.fixture(scope="session")
def desk_universe():
    """Default desk tower through X_4 = 6561 members; build time recorded
    for the acceptance runtime assertion."""
    cfg = Config.desk(stage_count=4)
    t0 = time.time()
    universe = Universe(cfg).build()
    universe.build_seconds = time.time() - t0
    return universe


@pytest.fixture(scope="session")
def rank_universe():
    """Half-integer scalars: positive ranks, four-case dispatch, convex
    rules; three stages."""
    return Universe(Config.rank()).build()
