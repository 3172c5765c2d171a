import numpy as np
import pytest

from curvlab.charts import build_grid, make_model


@pytest.fixture(scope="session")
def torus3():
    return make_model("torus", 3)


@pytest.fixture(scope="session")
def sphere3():
    return make_model("sphere", 3)


@pytest.fixture(scope="session")
def sphere4():
    return make_model("sphere", 4)


@pytest.fixture(scope="session")
def euler3():
    return make_model("s3-euler", 3)


@pytest.fixture(scope="session")
def poincare3():
    return make_model("poincare", 3)


@pytest.fixture(scope="session")
def torus3_grid(torus3):
    return build_grid(torus3.domain, 8)


@pytest.fixture(scope="session")
def euler3_grid(euler3):
    return build_grid(euler3.domain, (8, 12, 16))


def random_probes(domain, rng, count=100, margin=0.08):
    """Random chart points, keeping a margin from non-periodic boundaries."""
    lo = np.array([b[0] for b in domain.bounds])
    hi = np.array([b[1] for b in domain.bounds])
    span = hi - lo
    lo_eff = lo + np.where(domain.periodic, 0.0, margin * span)
    hi_eff = hi - np.where(domain.periodic, 0.0, margin * span)
    return rng.uniform(lo_eff, hi_eff, size=(count, domain.dimension))
