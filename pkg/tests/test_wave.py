import math

import numpy as np
import pytest

from frontlab import make_cubic, solve_wave
from frontlab.wave import decay_constants

SQRT2 = math.sqrt(2.0)


def test_speed_matches_cubic_closed_form(wave):
    assert wave.c == pytest.approx(SQRT2 / 4.0, abs=1e-4)


def test_profile_matches_logistic(wave):
    # exact cubic front: 1/(1 + e^(-z/sqrt(2))) up to translation, and
    # the solver pins phi(0) = 1/2 so no alignment shift is needed
    z = wave.z_grid
    exact = 1.0 / (1.0 + np.exp(-z / SQRT2))
    assert float(np.max(np.abs(wave.phi - exact))) < 1e-3


def test_profile_pinned_at_half(wave):
    assert wave.phi_at(0.0) == pytest.approx(0.5, abs=1e-8)


def test_profile_monotone(wave):
    assert np.all(np.diff(wave.phi) > 0)
    assert np.all(wave.phi_prime >= 0)


def test_ode_residual_small(wave, nl):
    z = wave.z_grid[2:-2]
    dz = z[1] - z[0]
    phi = wave.phi
    d2 = (phi[3:-1] - 2.0 * phi[2:-2] + phi[1:-3]) / dz ** 2
    d1 = (phi[3:-1] - phi[1:-3]) / (2.0 * dz)
    res = d2 - wave.c * d1 + nl.f(phi[2:-2])
    assert float(np.max(np.abs(res))) < 1e-5


def test_speed_over_theta_family():
    for theta in (0.1, 0.35):
        w = solve_wave(make_cubic(theta))
        assert w.c == pytest.approx(SQRT2 * (0.5 - theta), abs=1e-4)


def test_linearization_exponents(wave):
    lam0, nu1 = wave.lin_exponents
    assert lam0 == pytest.approx(1.0 / SQRT2, abs=1e-4)
    assert nu1 == pytest.approx(-1.0 / SQRT2, abs=1e-4)


def test_decay_constants_goldens(wave, nl):
    dc = decay_constants(wave, nl)
    assert dc.C_phi == pytest.approx(0.7424621195, rel=1e-6)
    assert dc.mu == pytest.approx(1.0 / SQRT2, abs=1e-6)
    assert dc.sigma == pytest.approx(0.5303300859, rel=1e-6)
    assert dc.omega_decay == pytest.approx(0.0625, rel=1e-9)
    assert dc.sigma > 0.5 * wave.c


def test_C_phi_bounds_phi_prime(wave):
    bound = wave.C_phi * np.exp(-wave.mu * np.abs(wave.z_grid))
    assert np.all(wave.phi_prime <= bound + 1e-14)


def test_tail_extension(wave):
    assert wave.phi_at(-400.0) < 1e-10
    assert wave.phi_at(400.0) > 1.0 - 1e-10
    assert wave.phi_prime_at(-400.0) < 1e-10
    # interpolation and tail model agree at the seam
    zl = wave.z_grid[0]
    assert wave.phi_at(zl - 1e-6) == pytest.approx(wave.phi_at(zl + 1e-6),
                                                   rel=1e-3)


def test_level_width(wave):
    a = wave.level_width(0.1)
    b = wave.level_width(0.01)
    assert 0 < a < b
    # phi is within the level outside [-width, width]
    assert wave.phi_at(-b) <= 0.01 + 1e-6
    assert 1.0 - wave.phi_at(b) <= 0.01 + 1e-6
