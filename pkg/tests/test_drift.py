import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontlab import (
    blocking_criterion,
    concentration_integral,
    make_bump_drift,
    make_mollified_indicator,
    make_sharp_indicator,
    make_table_drift,
    weight_psi,
    zero_drift,
)
from frontlab.drift import _flatness_radius, propagation_bound, \
    propagation_bound_details


def test_zero_drift_is_zero():
    d = zero_drift()
    x = np.linspace(-5.0, 5.0, 101)
    assert np.all(d.k(x) == 0.0)
    assert d.net_drift() == 0.0
    assert np.all(weight_psi(d, x) == pytest.approx(1.0, abs=1e-14))


def test_sharp_indicator_concentration_closed_form():
    # int over the support of exp(cumulative drift) for (K/eps) 1_[-eps,0]
    # equals (eps/K)(e^K - 1)
    K, eps = 3.0, 0.5
    d = make_sharp_indicator(K, eps)
    exact = (eps / K) * (math.exp(K) - 1.0)
    assert exact == pytest.approx(3.1809228205312774, rel=1e-12)
    assert concentration_integral(d) == pytest.approx(exact, rel=1e-9)


def test_sharp_indicator_net_drift():
    d = make_sharp_indicator(3.0, 0.5)
    assert d.net_drift() == pytest.approx(3.0, rel=1e-10)


def test_mollified_converges_to_sharp():
    # first order in the smoothing width
    K, eps = 4.0, 0.2
    sharp = (eps / K) * (math.exp(K) - 1.0)
    errs = []
    for smoothing in (eps / 20.0, eps / 80.0, eps / 320.0):
        d = make_mollified_indicator(K, eps, smoothing)
        errs.append(abs(concentration_integral(d) - sharp))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.01 * sharp


def test_mollified_net_drift_exact():
    d = make_mollified_indicator(18.0, 5e-5, 5e-7)
    assert d.net_drift() == pytest.approx(18.0, rel=1e-9)


def test_mollified_support(certified_drift):
    d = certified_drift
    x_out = np.array([-2.0 * d.x0, -1.5 * d.x0, 1e-9, 1.0])
    assert np.all(d.k(x_out) == 0.0)


def test_criterion_certified_goldens(consts, certified_drift):
    rep = blocking_criterion(consts, certified_drift)
    assert rep.verdict == "BlockingCertified"
    assert rep.net_drift == pytest.approx(18.0, rel=1e-9)
    assert rep.concentration == pytest.approx(211.106338, rel=1e-5)
    assert rep.rhs == pytest.approx(4.1612011e-06, rel=1e-5)
    assert rep.delta == pytest.approx(1.08032e-03, rel=1e-4)
    assert rep.rhs < rep.C_f


def test_criterion_weak_drift_undetermined(consts):
    rep = blocking_criterion(consts, make_sharp_indicator(3.0, 0.5))
    assert rep.verdict == "Undetermined"
    assert rep.rhs > rep.C_f


def test_criterion_small_eps_regime(consts):
    # once sqrt(concentration) falls under the technical constant the
    # rhs collapses to 256 e^(-K)
    K, eps = 18.0, 2e-5
    rep = blocking_criterion(consts, make_mollified_indicator(K, eps,
                                                              eps / 100.0))
    assert rep.rhs == pytest.approx(256.0 * math.exp(-K), rel=0.01)


def test_criterion_eps_one_closed_form(consts):
    K = 9.0
    rep = blocking_criterion(consts, make_sharp_indicator(K, 1.0))
    closed = (2.0 * math.exp(-K / 2.0)
              + K ** -0.5 * (1.0 - math.exp(-K)) ** 0.5) ** 2
    assert rep.rhs == pytest.approx(closed, rel=1e-6)


def test_bump_drift_support_and_weight():
    d = make_bump_drift(0.05, -0.5, 0.5, 1.0)
    assert d.k(-1.0 - 1e-9) == 0.0
    assert d.k(1e-9) == 0.0
    assert d.k(-0.5) == pytest.approx(0.05, rel=1e-12)
    x = np.linspace(-3.0, 1.0, 401)
    psi = weight_psi(d, x)
    assert np.all(psi > 0.0)
    # psi is constant on each side of the support
    left = psi[x <= -1.0]
    assert np.max(np.abs(np.diff(left))) < 1e-14


def test_table_drift_roundtrip():
    x = np.linspace(-1.0, 0.0, 101)
    k = 0.3 * np.sin(np.pi * x) ** 2
    d = make_table_drift(x, k)
    probe = np.linspace(-0.95, -0.05, 37)
    assert np.max(np.abs(d.k(probe) - 0.3 * np.sin(np.pi * probe) ** 2)) \
        < 1e-4
    assert d.k(-1.5) == 0.0 and d.k(0.5) == 0.0


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.5, max_value=12.0),
       st.floats(min_value=0.05, max_value=1.0))
def test_concentration_between_trivial_bounds(K, eps):
    # exp(min kappa) * eps <= integral <= exp(max kappa) * eps
    d = make_sharp_indicator(K, eps)
    conc = concentration_integral(d)
    assert eps * 1.0 <= conc <= eps * math.exp(K) + 1e-9


def test_flatness_radius_golden(nl):
    assert _flatness_radius(nl, 0.0625) == pytest.approx(0.018125,
                                                         rel=1e-3)


def test_propagation_bound_underflows_but_logs_are_finite(nl, wave):
    d = make_bump_drift(0.05, -0.5, 0.5, 1.0)
    det = propagation_bound_details(nl, wave, d, t_eps=0.0)
    assert det.shift_budget_m == pytest.approx(13289.303, rel=1e-4)
    assert det.log_bound_amplitude == pytest.approx(-9404.1488, rel=1e-5)
    assert det.log_bound_shift == pytest.approx(-9396.9565, rel=1e-5)
    assert propagation_bound(nl, wave, d, 0.0) == 0.0
    assert det.omega_minus == pytest.approx(0.0625, rel=1e-9)
    assert det.delta_minus == pytest.approx(0.0063501, rel=1e-4)
