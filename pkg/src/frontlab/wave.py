"""Traveling front profiles for the reaction term alone.

Solves phi'' - c phi' + f(phi) = 0 with phi(-inf) = 0, phi(+inf) = 1,
phi increasing, by shooting along the unstable manifold of the rest
state 0 and adjusting c until the trajectory lands on the saddle at 1.
The profile is pinned by phi(0) = 1/2 and carries the exact linear
tail exponents of both ends, so evaluation far outside the computed
window stays accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .nonlinearity import Nonlinearity, eval_F0

__all__ = ["WaveProfile", "DecayConstants", "solve_wave", "decay_constants",
           "ode_residual"]


@dataclass(frozen=True)
class DecayConstants:
    """Tail and relaxation constants attached to a front."""

    C_phi: float
    mu: float
    sigma: float
    omega_decay: float


def _tail_exponents(nl: Nonlinearity, c: float) -> tuple[float, float]:
    """Signed exponents (c +- sqrt(c^2 - 4 f'(.)))/2 of the two ends:
    the profile behaves like exp(lam0 z) near 0 and approaches 1 like
    exp(nu1 z) with nu1 < 0."""
    fp0 = float(nl.f_prime(0.0))
    fp1 = float(nl.f_prime(1.0))
    disc0 = c * c - 4.0 * fp0
    disc1 = c * c - 4.0 * fp1
    if disc0 < 0 or disc1 < 0 or fp0 >= 0 or fp1 >= 0:
        raise ValueError("rest states are not linearly stable at this speed")
    lam0 = 0.5 * (c + math.sqrt(disc0))
    nu1 = 0.5 * (c - math.sqrt(disc1))
    return lam0, nu1


@dataclass(frozen=True)
class WaveProfile:
    """Monotone front with phi(0) = 1/2 on a uniform grid [-Z, Z].

    Outside the internally computed window the evaluators switch to the
    matched exponential tails, so phi_at stays meaningful on all of R.
    C_phi and mu satisfy 0 < phi'(z) < C_phi exp(-mu |z|) on the grid.
    """

    c: float
    C_phi: float
    mu: float
    sigma: float
    omega_decay: float
    lin_exponents: tuple
    z_grid: np.ndarray = field(repr=False, compare=False)
    phi: np.ndarray = field(repr=False, compare=False)
    phi_prime: np.ndarray = field(repr=False, compare=False)
    tail_amp_left: float = 0.0
    tail_amp_right: float = 0.0
    _window: tuple = (0.0, 0.0)
    _sp: CubicSpline = field(default=None, repr=False, compare=False)
    _spd: CubicSpline = field(default=None, repr=False, compare=False)

    def phi_at(self, z):
        z = np.asarray(z, dtype=float)
        lam0, nu1 = self.lin_exponents
        wlo, whi = self._window
        out = np.empty_like(z)
        left = z < wlo
        right = z > whi
        mid = ~(left | right)
        out[left] = self.tail_amp_left * np.exp(lam0 * z[left])
        out[right] = 1.0 - self.tail_amp_right * np.exp(nu1 * z[right])
        out[mid] = self._sp(z[mid])
        return np.clip(out, 0.0, 1.0)

    def phi_prime_at(self, z):
        z = np.asarray(z, dtype=float)
        lam0, nu1 = self.lin_exponents
        wlo, whi = self._window
        out = np.empty_like(z)
        left = z < wlo
        right = z > whi
        mid = ~(left | right)
        out[left] = lam0 * self.tail_amp_left * np.exp(lam0 * z[left])
        out[right] = (-nu1) * self.tail_amp_right * np.exp(nu1 * z[right])
        out[mid] = self._spd(z[mid])
        return out

    def level_width(self, s: float) -> float:
        """Half-width A with phi(-A) <= s and phi(A) >= 1 - s."""
        if not (0 < s < 0.5):
            raise ValueError("level must lie in (0, 1/2)")
        lam0, nu1 = self.lin_exponents
        lo = min(self._window[0], math.log(s / self.tail_amp_left) / lam0)
        hi = max(self._window[1],
                 math.log(s / self.tail_amp_right) / nu1)
        z_s = brentq(lambda z: float(self.phi_at(z)) - s, lo, 0.0)
        z_1s = brentq(lambda z: float(self.phi_at(z)) - (1.0 - s), 0.0, hi)
        return max(-z_s, z_1s)


def decay_constants(w: WaveProfile, nl: Nonlinearity) -> DecayConstants:
    """Constants of the solved front: C_phi bounds phi' exp(mu |z|) on
    the grid with a 5% margin; sigma is the largest exponent margin for
    which both moving-frame tail bounds hold for the front itself, the
    smaller of lam0 - c/2 and c/2 - nu1 (each exceeds |c|/2 because the
    rest states are strictly stable); omega_decay is the relaxation
    rate used by the envelope bounds, min of the rest-state rates over
    4, c mu/2 and 1."""
    lam0, nu1 = _tail_exponents(nl, w.c)
    mu = min(lam0, -nu1)
    ratio = np.max(np.abs(w.phi_prime) * np.exp(mu * np.abs(w.z_grid)))
    C_phi = 1.05 * float(ratio)
    sigma = min(lam0 - 0.5 * w.c, 0.5 * w.c - nu1)
    fp0 = float(nl.f_prime(0.0))
    fp1 = float(nl.f_prime(1.0))
    omega = min(-fp0 / 4.0, -fp1 / 4.0, w.c * mu / 2.0, 1.0)
    return DecayConstants(C_phi=C_phi, mu=mu, sigma=sigma, omega_decay=omega)


def _shoot(nl: Nonlinearity, c: float, phi0: float, z_max: float,
           rtol: float, fine: bool = False, dense: bool = False):
    """Integrate from the unstable manifold of 0 with terminal events
    for the slope dying (undershoot) and the profile crossing 1.

    The fine mode runs a high-order integrator at tight tolerance: the
    final pass must keep the relative accuracy of the exponentially
    small tails, while the bracketing shots only need the sign of the
    landing error.
    """
    fp0 = float(nl.f_prime(0.0))
    lam0 = 0.5 * (c + math.sqrt(c * c - 4.0 * fp0))
    # quadratic term of the manifold expansion phi' = lam0 phi + q2 phi^2
    fpp0 = float(nl.f_double_prime(0.0))
    q2 = fpp0 / (2.0 * (c - 3.0 * lam0))
    y0 = [phi0, lam0 * phi0 + q2 * phi0 * phi0]

    def rhs(z, y):
        return [y[1], c * y[1] - float(nl.f(y[0]))]

    def ev_fall(z, y):
        return y[1]

    ev_fall.terminal = True
    ev_fall.direction = -1

    def ev_cross(z, y):
        return y[0] - 1.0

    ev_cross.terminal = True
    ev_cross.direction = 1

    if fine:
        return solve_ivp(rhs, (0.0, z_max), y0, events=(ev_fall, ev_cross),
                         method="DOP853", rtol=1e-12, atol=1e-30,
                         dense_output=dense,
                         max_step=1.0 if dense else z_max / 50.0)
    return solve_ivp(rhs, (0.0, z_max), y0, events=(ev_fall, ev_cross),
                     rtol=rtol, atol=1e-14, max_step=z_max / 50.0)


def _miss(nl: Nonlinearity, c: float, phi0: float, z_max: float,
          rtol: float, fine: bool = False) -> float:
    """Signed landing error: negative when the slope dies below 1
    (speed too low), positive when the profile punches through 1 with
    slope to spare (speed too high)."""
    sol = _shoot(nl, c, phi0, z_max, rtol, fine=fine)
    if sol.t_events[1].size:
        return float(sol.y_events[1][0][1])
    if sol.t_events[0].size:
        return float(sol.y_events[0][0][0]) - 1.0
    return 0.0


def solve_wave(nl: Nonlinearity, Z: float | None = None, tol: float = 1e-8,
               dz: float | None = None, n_grid: int = 4001) -> WaveProfile:
    """Compute the front and its speed for a bistable reaction term.

    Z defaults to the smallest half-width whose tails sit at tol/10;
    an explicit Z that truncates the tails above tol is rejected.  The
    grid resolution comes from dz when given, n_grid otherwise.
    """
    drop = float(eval_F0(nl, 1.0))
    if drop <= 0:
        raise ValueError("integral of f over [0, 1] must be positive")
    seed = min(1e-9, tol / 10.0)
    rtol = min(1e-10, tol / 100.0)
    sup_fp = nl.sup_abs_f_prime()
    lam0_0, nu1_0 = _tail_exponents(nl, 0.0)
    z_max = 4.0 * (math.log(1.0 / seed) + 5.0) * (
        1.0 / lam0_0 + 1.0 / (-nu1_0) + 1.0)

    c_hi = 2.0 * math.sqrt(sup_fp)
    for _ in range(8):
        if _miss(nl, c_hi, seed, z_max, rtol) > 0:
            break
        c_hi *= 2.0
    else:
        raise RuntimeError("no over-speed bracket found for the front")
    if _miss(nl, 0.0, seed, z_max, rtol) >= 0:
        raise RuntimeError("zero speed does not undershoot; reaction term "
                           "has no positive-speed front")

    c = brentq(lambda cc: _miss(nl, cc, seed, z_max, rtol),
               0.0, c_hi, xtol=1e-14, rtol=8.9e-16)
    # re-bisect in a narrow bracket with the fine integrator, whose
    # connecting speed differs from the bracketing one at its tolerance
    half = 1e-7
    for _ in range(6):
        lo, hi = max(c - half, 0.0), c + half
        if (_miss(nl, lo, seed, z_max, rtol, fine=True) < 0
                < _miss(nl, hi, seed, z_max, rtol, fine=True)):
            c = brentq(
                lambda cc: _miss(nl, cc, seed, z_max, rtol, fine=True),
                lo, hi, xtol=1e-14, rtol=8.9e-16)
            break
        half *= 10.0
    else:
        raise RuntimeError("fine-tolerance speed refinement lost its bracket")

    sol = _shoot(nl, c, seed, z_max, rtol, fine=True, dense=True)
    if sol.t_events[0].size:
        z_end = float(sol.t_events[0][0])
    elif sol.t_events[1].size:
        z_end = float(sol.t_events[1][0])
    else:
        z_end = float(sol.t[-1])
    # Trim the window where the trajectory first comes within tau of 1.
    # Shooting cannot track the connection closer to the saddle than
    # roughly sqrt(eps_machine), so the window stops at 1e-4 and the
    # matched exponential tail (accurate to O(tau^2) there) takes over.
    tau = max(seed, 1e-4)
    z_scan = np.linspace(0.0, z_end, 200001)
    phi_scan = sol.sol(z_scan)[0]
    hit = np.nonzero(phi_scan >= 1.0 - tau)[0]
    if hit.size == 0:
        raise RuntimeError("trajectory never approached the 1 state")
    z_end = z_scan[hit[0]]

    z_half = brentq(lambda z: float(sol.sol(z)[0]) - 0.5, 0.0, z_end)
    wlo, whi = -z_half, z_end - z_half
    z_win = np.linspace(wlo, whi, 8001)
    states = sol.sol(z_win + z_half)
    sp = CubicSpline(z_win, states[0])
    spd = CubicSpline(z_win, states[1])

    lam0, nu1 = _tail_exponents(nl, c)
    amp_l = float(states[0][0] * math.exp(-lam0 * wlo))
    amp_r = float((1.0 - states[0][-1]) * math.exp(-nu1 * whi))

    if Z is None:
        Z = math.ceil(max(-wlo, whi)) + 1.0
    else:
        tail = max(amp_l * math.exp(-lam0 * Z), amp_r * math.exp(nu1 * Z))
        if tail > tol:
            raise ValueError(f"Z={Z} truncates the tails at {tail:.3g} > tol")
    if dz is not None:
        n_grid = int(round(2.0 * Z / dz)) + 1
    z_grid = np.linspace(-Z, Z, n_grid)

    prof = WaveProfile(
        c=c, C_phi=0.0, mu=0.0, sigma=0.0, omega_decay=0.0,
        lin_exponents=(lam0, nu1), z_grid=z_grid,
        phi=np.empty(0), phi_prime=np.empty(0),
        tail_amp_left=amp_l, tail_amp_right=amp_r,
        _window=(wlo, whi), _sp=sp, _spd=spd)
    phi_vals = prof.phi_at(z_grid)
    dphi_vals = prof.phi_prime_at(z_grid)
    object.__setattr__(prof, "phi", phi_vals)
    object.__setattr__(prof, "phi_prime", dphi_vals)

    dc = decay_constants(prof, nl)
    object.__setattr__(prof, "C_phi", dc.C_phi)
    object.__setattr__(prof, "mu", dc.mu)
    object.__setattr__(prof, "sigma", dc.sigma)
    object.__setattr__(prof, "omega_decay", dc.omega_decay)
    return prof


def ode_residual(w: WaveProfile, nl: Nonlinearity, n: int = 4001) -> float:
    """Sup-norm of phi'' - c phi' + f(phi) over the interior of the
    computed window, with derivatives taken by fourth-order finite
    differences of the evaluator (independent of the stored phi_prime
    samples).  The step is wide enough to sample the profile rather
    than the wiggle of the interpolating spline, and the sampling
    stays clear of the spline-to-tail handover points."""
    h = 0.05
    z = np.linspace(w._window[0] + 5 * h, w._window[1] - 5 * h, n)
    stencil = np.array([-2.0, -1.0, 0.0, 1.0, 2.0]) * h
    vals = np.stack([w.phi_at(z + s) for s in stencil])
    d1 = (vals[0] - 8 * vals[1] + 8 * vals[3] - vals[4]) / (12 * h)
    d2 = (-vals[0] + 16 * vals[1] - 30 * vals[2] + 16 * vals[3]
          - vals[4]) / (12 * h * h)
    res = d2 - w.c * d1 + nl.f(vals[2])
    return float(np.max(np.abs(res)))
