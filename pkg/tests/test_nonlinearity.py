import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontlab import (
    blocking_constants,
    eval_F,
    eval_F0,
    make_cubic,
    make_from_table,
    validate,
)
from frontlab.nonlinearity import from_callables

THETA = 0.25


def test_cubic_roots(nl):
    assert nl.f(0.0) == pytest.approx(0.0, abs=1e-14)
    assert nl.f(THETA) == pytest.approx(0.0, abs=1e-14)
    assert nl.f(1.0) == pytest.approx(0.0, abs=1e-14)


def test_cubic_matches_closed_form(nl):
    u = np.linspace(0.0, 1.0, 257)
    exact = u * (1.0 - u) * (u - THETA)
    assert np.max(np.abs(nl.f(u) - exact)) < 1e-12


def test_cubic_derivatives_at_stable_states(nl):
    assert nl.f_prime(0.0) == pytest.approx(-THETA, abs=1e-12)
    assert nl.f_prime(1.0) == pytest.approx(THETA - 1.0, abs=1e-12)


def test_sup_abs_f_prime(nl):
    assert nl.sup_abs_f_prime() == pytest.approx(0.75, rel=1e-9)


def test_norm_f_double_prime(nl):
    # |f''| = |2(1+theta) - 6u| peaks at u = 1 on the unit interval and
    # the tangent extension does not increase it
    assert nl.norm_f_double_prime == pytest.approx(3.5, rel=1e-9)


def test_sign_structure(nl):
    u = np.linspace(0.01, THETA - 0.01, 50)
    assert np.all(nl.f(u) < 0)
    u = np.linspace(THETA + 0.01, 0.99, 50)
    assert np.all(nl.f(u) > 0)


def test_extension_pushes_back(nl):
    assert nl.f(-0.3) > 0
    assert nl.f(1.3) < 0
    assert nl.f(-2.0) > 0
    assert nl.f(2.0) < 0


def test_eval_F_anchored_at_one(nl):
    assert eval_F(nl, 1.0) == pytest.approx(0.0, abs=1e-14)
    # int_0^1 u(1-u)(u-1/4) du = 1/24
    assert eval_F0(nl, 1.0) == pytest.approx(1.0 / 24.0, rel=1e-12)
    s = 0.6
    F0 = -s ** 4 / 4.0 + (5.0 / 12.0) * s ** 3 - s ** 2 / 8.0
    assert eval_F0(nl, s) == pytest.approx(F0, rel=1e-12)
    # F runs from s up to 1, so it is the well depth left to climb
    assert eval_F(nl, s) == pytest.approx(1.0 / 24.0 - F0, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-1.5, max_value=2.5,
                 allow_nan=False, allow_infinity=False))
def test_f_prime_is_derivative_of_f(u):
    nl = make_cubic(0.25)
    h = 1e-6
    fd = (nl.f(u + h) - nl.f(u - h)) / (2.0 * h)
    assert nl.f_prime(u) == pytest.approx(fd, rel=1e-4, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.05, max_value=0.45))
def test_validate_accepts_cubic_family(theta):
    results = validate(make_cubic(theta))
    failed = [r.name for r in results if not r.passed]
    assert failed == []


def test_validate_rejects_monostable():
    u = np.linspace(0.0, 1.0, 41)
    f = u * (1.0 - u)  # no stable middle root structure
    with pytest.raises(ValueError):
        make_from_table(u, f)


def test_table_roundtrip(nl):
    u = np.linspace(0.0, 1.0, 201)
    tab = make_from_table(u, nl.f(u))
    probe = np.linspace(0.0, 1.0, 97)
    assert np.max(np.abs(tab.f(probe) - nl.f(probe))) < 1e-6


def test_from_callables_helper():
    z = from_callables(lambda u: 0.0 * np.asarray(u),
                       lambda u: 0.0 * np.asarray(u),
                       lambda u: 0.0 * np.asarray(u),
                       theta=0.25, norm_f_double_prime=0.0)
    assert z.f(0.7) == 0.0
    assert z.sup_abs_f_prime() == 0.0


def test_blocking_constants_goldens(consts):
    """Frozen from an independent sweep of the variational bound."""
    assert consts.alpha == pytest.approx(0.0625, rel=1e-9)
    assert consts.a_opt == pytest.approx(3.1093284694, rel=1e-5)
    assert consts.C_f == pytest.approx(1.569816683e-05, rel=1e-6)
    assert consts.norm_f_double_prime == pytest.approx(3.5, rel=1e-9)


def test_blocking_constants_well_posed():
    for theta in (0.15, 0.25, 0.4):
        bc = blocking_constants(make_cubic(theta))
        assert bc.alpha == pytest.approx(min(0.25, theta / 4.0), rel=1e-9)
        assert bc.C_f > 0
        assert 0.1 < bc.a_opt < 50.0
        assert bc.K_quad > 0
        assert bc.eta > 0
