import numpy as np
import pytest

import pistonflow as pf


@pytest.fixture(scope="session")
def gas():
    """Default ideal gas used across the suite: rho_star = 1 exactly."""
    return pf.ideal_gas(c=1.0, gamma=1.5, A=1.0, P_ext=1.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
