import numpy as np
import pytest

from beliefstock.model import bundled_model, derive_variant


@pytest.fixture(scope="session")
def econ3():
    return bundled_model("econ3")


@pytest.fixture(scope="session")
def econ3_aod():
    return bundled_model("econ3_aod")


@pytest.fixture(scope="session")
def econ3_k5():
    return bundled_model("econ3_k5")


@pytest.fixture(scope="session")
def sec4():
    return bundled_model("attain_fail")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def strip_perfect(econ3_aod):
    return derive_variant(econ3_aod, "strip_aod"), derive_variant(econ3_aod, "perfect_aod")
