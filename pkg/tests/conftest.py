import numpy as np
import pytest

from vaknh.models import CATALOG, builtin
from vaknh.system import VakState

LINEAR_MODELS = ("constrained_particle", "rolling_penny", "martinet",
                 "paramecium", "holonomic_demo")
ALL_MODELS = LINEAR_MODELS + ("von_neumann2",)

_cache = {}


def get_model(name):
    if name not in _cache:
        _cache[name] = builtin(name)
    return _cache[name]


@pytest.fixture
def model():
    return get_model


def random_states(name, count, seed, legendre=False):
    """Random VakStates drawn from the model's documented sampling box."""
    from vaknh.nonholonomic import legendre_lift
    from vaknh.system import NhState

    sysdef = get_model(name)
    box = CATALOG[name].sample_box
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(count):
        q = np.array([rng.uniform(lo, hi) for lo, hi in box["q"]])
        v = np.array([rng.uniform(lo, hi) for lo, hi in box["v"]])
        if legendre:
            lift = legendre_lift(sysdef, NhState(q, v))
            p = np.array([lift[pos] for pos in sysdef.dependent_positions])
        else:
            p = np.array([rng.uniform(lo, hi) for lo, hi in box["p"]])
        states.append(VakState(q, v, p))
    return states
