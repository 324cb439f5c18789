import pytest

from frontlab import blocking_constants, blocking_criterion, make_cubic, \
    solve_wave
from frontlab.drift import make_mollified_indicator
from frontlab.supersolution import continue_to_minus_infinity


@pytest.fixture(scope="session")
def nl():
    return make_cubic(0.25)


@pytest.fixture(scope="session")
def wave(nl):
    return solve_wave(nl)


@pytest.fixture(scope="session")
def consts(nl):
    return blocking_constants(nl)


@pytest.fixture(scope="session")
def certified_drift():
    # strong enough that the variational criterion certifies blocking
    return make_mollified_indicator(18.0, 5e-5, 5e-7)


@pytest.fixture(scope="session")
def certificate(consts, certified_drift):
    return blocking_criterion(consts, certified_drift)


@pytest.fixture(scope="session")
def barrier(nl, certified_drift, consts, certificate):
    return continue_to_minus_infinity(
        certified_drift, nl, consts.a_opt, R_start=-15.0,
        delta=certificate.delta)
