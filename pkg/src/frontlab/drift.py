"""Compactly supported drift terms and the blocking criterion.

A drift k is supported in [-x0, 0].  The associated weight psi solves
psi' = -k psi, normalized to 1 left of the support, so psi drops by the
factor exp(-net drift) across it.  The criterion compares the reaction's
variational constant C_f against

    rhs = exp(-net) * (2 + max(14, sqrt(concentration)))^2

where concentration = integral over the support of exp(cumulative k).
All drift families carry an accurate antiderivative kappa of k, so the
weight and the concentration integral never depend on resolving a sharp
profile by brute-force sampling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson, quad

from .nonlinearity import BlockingConstants, Nonlinearity

__all__ = [
    "DriftTerm",
    "CriterionReport",
    "PropagationBoundDetails",
    "make_mollified_indicator",
    "make_sharp_indicator",
    "make_bump_drift",
    "make_table_drift",
    "zero_drift",
    "weight_psi",
    "concentration_integral",
    "blocking_criterion",
    "propagation_bound",
    "propagation_bound_details",
]

log = logging.getLogger("frontlab")


# ---------------------------------------------------------------------------
# unit bump exp(1 - 1/(1 - y^2)) on (-1, 1) and its integral tables

_N_TABLE = 65537


def _bump_raw(y):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    yi = y[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - yi * yi))
    return out


class _BumpTables:
    """Cumulative integral and double integral of the unit bump,
    precomputed once on a dense grid."""

    def __init__(self):
        y = np.linspace(-1.0, 1.0, _N_TABLE)
        vals = _bump_raw(y)
        cum = cumulative_simpson(vals, x=y, initial=0.0)
        self.y = y
        self.mass = float(cum[-1])
        self.cum = cum                      # integral of bump from -1 to y
        self.cum2 = cumulative_simpson(cum, x=y, initial=0.0)
        self.cum2_end = float(self.cum2[-1])

    def cdf(self, y):
        """Normalized CDF of the bump, exact 0/1 outside [-1, 1]."""
        y = np.asarray(y, dtype=float)
        c = np.interp(y, self.y, self.cum, left=0.0, right=self.mass)
        return c / self.mass

    def int_cdf(self, y):
        """Integral of the normalized CDF from -1 to y, with the exact
        linear continuation beyond y = 1."""
        y = np.asarray(y, dtype=float)
        base = np.interp(y, self.y, self.cum2, left=0.0, right=self.cum2_end)
        out = base / self.mass
        beyond = y > 1.0
        out = np.where(beyond, self.cum2_end / self.mass + (y - 1.0), out)
        return out

    def int_bump(self, y):
        """Unnormalized integral of the bump from -1 to y."""
        y = np.asarray(y, dtype=float)
        return np.interp(y, self.y, self.cum, left=0.0, right=self.mass)


_tables: _BumpTables | None = None


def _bump_tables() -> _BumpTables:
    global _tables
    if _tables is None:
        _tables = _BumpTables()
    return _tables


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DriftTerm:
    """Drift coefficient with support in [-x0, 0].

    k is a vectorized callable; kappa(x) is the running integral of k
    from -x0, constant outside the support; k_plus = max(sup k, 0).
    psi_at_minus_x0 normalizes the weight left of the support.
    """

    x0: float
    k: callable = field(compare=False)
    kappa: callable = field(compare=False)
    k_plus: float = 0.0
    psi_at_minus_x0: float = 1.0
    smooth: bool = True
    kind: str = "generic"
    quad_points: tuple = ()

    def net_drift(self) -> float:
        return float(self.kappa(0.0))


def make_mollified_indicator(K: float, eps: float, smoothing: float) -> DriftTerm:
    """Smoothed indicator drift: the inner indicator of [-eps + h, -h]
    at height K/(eps - 2h), convolved with a unit bump of half-width
    h = smoothing.  The support is exactly [-eps, 0] and the mass is
    exactly K; as smoothing -> 0 the sharp (K/eps) 1_[-eps,0] profile
    is recovered.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not (0 < smoothing < eps / 4.0):
        raise ValueError("smoothing must lie in (0, eps/4)")
    tb = _bump_tables()
    h = smoothing
    amp = K / (eps - 2.0 * h)

    def k(x):
        x = np.asarray(x, dtype=float)
        return amp * (tb.cdf((x + eps - h) / h) - tb.cdf((x + h) / h))

    def kappa(x):
        x = np.asarray(x, dtype=float)
        return amp * h * (tb.int_cdf((x + eps - h) / h)
                          - tb.int_cdf((x + h) / h))

    k_plus = max(float(np.max(k(np.linspace(-eps, 0.0, 4097)))), 0.0)
    return DriftTerm(x0=eps, k=k, kappa=kappa, k_plus=k_plus,
                     kind="mollified_indicator",
                     quad_points=(-eps + 2.0 * h, -2.0 * h))


def make_sharp_indicator(K: float, eps: float) -> DriftTerm:
    """Exact indicator drift (K/eps) 1_[-eps,0].  Discontinuous; used as
    the closed-form reference family in tests and oracles."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    amp = K / eps

    def k(x):
        x = np.asarray(x, dtype=float)
        return np.where((x > -eps) & (x <= 0.0), amp, 0.0)

    def kappa(x):
        x = np.asarray(x, dtype=float)
        return amp * np.clip(x + eps, 0.0, eps)

    return DriftTerm(x0=eps, k=k, kappa=kappa, k_plus=max(amp, 0.0),
                     smooth=False, kind="sharp_indicator")


def make_bump_drift(amplitude: float, center: float, width: float,
                    x0: float) -> DriftTerm:
    """Single smooth bump amplitude * exp(1 - 1/(1 - y^2)) with
    y = (x - center)/width.  Support [center - width, center + width]
    must sit inside [-x0, 0]."""
    if width <= 0:
        raise ValueError("width must be positive")
    if center - width < -x0 - 1e-12 or center + width > 1e-12:
        raise ValueError("bump support must lie inside [-x0, 0]")
    tb = _bump_tables()

    def k(x):
        x = np.asarray(x, dtype=float)
        return amplitude * _bump_raw((x - center) / width)

    def kappa(x):
        x = np.asarray(x, dtype=float)
        return amplitude * width * tb.int_bump((x - center) / width)

    return DriftTerm(x0=x0, k=k, kappa=kappa,
                     k_plus=max(amplitude, 0.0), kind="gaussian_bump",
                     quad_points=(center - width, center + width))


def make_table_drift(x_samples, k_samples) -> DriftTerm:
    """Drift from (x, k) samples; cubic spline on the sampled support,
    zero outside.  First sample defines -x0; last must be 0."""
    from scipy.interpolate import CubicSpline
    x = np.asarray(x_samples, dtype=float)
    kv = np.asarray(k_samples, dtype=float)
    if x.ndim != 1 or x.shape != kv.shape or x.size < 4:
        raise ValueError("need matching 1-d sample arrays with >= 4 points")
    if abs(x[-1]) > 1e-12 or x[0] >= 0:
        raise ValueError("samples must end at 0 and start at -x0 < 0")
    x0 = -float(x[0])
    spline = CubicSpline(x, kv)
    anti = spline.antiderivative()
    total = float(anti(0.0) - anti(-x0))

    def k(xq):
        xq = np.asarray(xq, dtype=float)
        out = np.zeros_like(xq)
        inside = (xq >= -x0) & (xq <= 0.0)
        out[inside] = spline(xq[inside])
        return out

    def kappa(xq):
        xq = np.asarray(xq, dtype=float)
        return np.where(xq <= -x0, 0.0,
                        np.where(xq >= 0.0, total,
                                 anti(np.clip(xq, -x0, 0.0)) - anti(-x0)))

    k_plus = max(float(np.max(spline(np.linspace(-x0, 0.0, 4097)))), 0.0)
    return DriftTerm(x0=x0, k=k, kappa=kappa, k_plus=k_plus, kind="table")


def zero_drift(x0: float = 1.0) -> DriftTerm:
    """k identically zero with a nominal support parameter."""

    def k(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def kappa(x):
        return np.zeros_like(np.asarray(x, dtype=float))

    return DriftTerm(x0=x0, k=k, kappa=kappa, k_plus=0.0, kind="zero")


# ---------------------------------------------------------------------------


def weight_psi(d: DriftTerm, x):
    """Weight psi with psi' = -k psi and psi = psi_at_minus_x0 left of
    the support; constant again right of 0."""
    return d.psi_at_minus_x0 * np.exp(-d.kappa(x))


def concentration_integral(d: DriftTerm, epsrel: float = 1e-11) -> float:
    """Integral over the support of exp(cumulative drift).

    Evaluated with the peak factored out so steep drifts cannot
    overflow the quadrature; panels split at the drift's own feature
    points.
    """
    pts = sorted({-d.x0, 0.0, *[p for p in d.quad_points if -d.x0 < p < 0.0]})
    scan = np.linspace(-d.x0, 0.0, 4097)
    shift = float(np.max(d.kappa(scan)))
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = quad(lambda t: np.exp(d.kappa(t) - shift), lo, hi,
                      epsabs=0.0, epsrel=epsrel, limit=400)
        total += val
    log_conc = shift + math.log(total) if total > 0 else -math.inf
    if log_conc > 700.0:
        return math.inf
    return math.exp(log_conc)


@dataclass(frozen=True)
class CriterionReport:
    """Outcome of the blocking criterion for one (f, k) pair."""

    net_drift: float
    concentration: float
    rhs: float
    C_f: float
    delta: float
    verdict: str

    def to_dict(self) -> dict:
        return {
            "net_drift": self.net_drift,
            "concentration": self.concentration,
            "rhs": self.rhs,
            "C_f": self.C_f,
            "delta": self.delta,
            "verdict": self.verdict,
        }


def blocking_criterion(nl_constants: BlockingConstants, d: DriftTerm,
                       technical_constant: float = 14.0) -> CriterionReport:
    """Certify blocking when C_f exceeds
    exp(-net) (2 + max(technical_constant, sqrt(concentration)))^2.

    delta is the weighted-space radius attached to the certificate:
    alpha sqrt(psi(-x0)) / (||f''|| (2 + max(., sqrt(concentration)))).
    """
    net = d.net_drift()
    conc = concentration_integral(d)
    bracket = 2.0 + max(technical_constant, math.sqrt(conc))
    log_rhs = -net + 2.0 * math.log(bracket)
    rhs = math.exp(log_rhs) if log_rhs < 700.0 else math.inf
    certified = math.log(nl_constants.C_f) > log_rhs
    delta = (nl_constants.alpha * math.sqrt(d.psi_at_minus_x0)
             / (nl_constants.norm_f_double_prime * bracket))
    return CriterionReport(
        net_drift=net,
        concentration=conc,
        rhs=rhs,
        C_f=nl_constants.C_f,
        delta=delta,
        verdict="BlockingCertified" if certified else "Undetermined",
    )


# ---------------------------------------------------------------------------
# smallness threshold on k for guaranteed propagation


@dataclass(frozen=True)
class PropagationBoundDetails:
    omega_minus: float
    rho: float
    eps_level: float
    A_minus: float
    delta_minus: float
    shift_budget_m: float
    log_bound_amplitude: float
    log_bound_shift: float

    @property
    def log_min_bound(self) -> float:
        return min(self.log_bound_amplitude, self.log_bound_shift)


def _flatness_radius(nl: Nonlinearity, omega: float) -> float:
    """Largest rho with |f'(s) - f'(0)| <= omega on [0, rho] and
    |f'(s) - f'(1)| <= omega on [1 - rho, 1]."""
    s = np.linspace(0.0, 0.5, 20001)
    dev0 = np.abs(nl.f_prime(s) - nl.f_prime(0.0))
    bad = np.where(dev0 > omega)[0]
    rho0 = s[bad[0] - 1] if bad.size and bad[0] > 0 else s[-1]
    dev1 = np.abs(nl.f_prime(1.0 - s) - nl.f_prime(1.0))
    bad = np.where(dev1 > omega)[0]
    rho1 = s[bad[0] - 1] if bad.size and bad[0] > 0 else s[-1]
    rho = min(float(rho0), float(rho1))
    if rho <= 0:
        raise ValueError("no positive flatness radius; omega too large")
    return rho * (1.0 - 1e-9)


def propagation_bound_details(nl: Nonlinearity, wave, d: DriftTerm,
                              t_eps: float) -> PropagationBoundDetails:
    """Full constant chain for the small-drift propagation threshold.

    The shift budget m explodes exponentially for any realistic front,
    so both admissibility bounds are carried in log space; the float
    bound is their exponential (possibly a clean underflow to 0).
    """
    c, mu, C_phi = wave.c, wave.mu, wave.C_phi
    omega_minus = min(-float(nl.f_prime(0.0)) / 4.0,
                      -float(nl.f_prime(1.0)) / 4.0,
                      c * mu / 2.0, 1.0)
    rho = _flatness_radius(nl, omega_minus)
    eps_level = rho / 4.0
    A_minus = wave.level_width(rho / 2.0)
    zg = np.linspace(-A_minus, A_minus, 4001)
    delta_minus = float(np.min(wave.phi_prime_at(zg)))
    if delta_minus <= 0:
        raise ValueError("front slope not positive on the transition window")
    norm_fp = nl.sup_abs_f_prime()
    m = ((norm_fp + 2.0 * omega_minus) / delta_minus) * (
        eps_level / omega_minus
        + C_phi * math.exp(mu * d.x0) * math.exp(-mu * c * t_eps)
        / (mu * c * omega_minus))
    log_amp = (math.log(rho / 4.0) + math.log(mu * c / C_phi)
               - mu * (d.x0 + m) - mu * c * t_eps)
    log_shift = -mu * m
    return PropagationBoundDetails(
        omega_minus=omega_minus, rho=rho, eps_level=eps_level,
        A_minus=A_minus, delta_minus=delta_minus, shift_budget_m=m,
        log_bound_amplitude=log_amp, log_bound_shift=log_shift)


def propagation_bound(nl: Nonlinearity, wave, d: DriftTerm,
                      t_eps: float) -> float:
    """Threshold on sup k below which the front provably keeps moving.
    Positive in exact arithmetic; routinely underflows to 0.0 in floats
    (see propagation_bound_details for the log-space values)."""
    det = propagation_bound_details(nl, wave, d, t_eps)
    try:
        return math.exp(det.log_min_bound)
    except OverflowError:
        return 0.0 if det.log_min_bound < 0 else math.inf
