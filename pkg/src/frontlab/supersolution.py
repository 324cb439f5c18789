"""Stationary barriers for certified-blocking drifts.

The barrier is the local minimizer of the weighted energy
J(w) = integral of (|w'|^2 / 2 + F(w)) psi over (R, a), realized through
its Euler-Lagrange equation -w'' + k w' = f(w) with w(R) = 0, w(a) = 1.
The reference is the ramp w0 = (x/a) restricted to [0, a]; the solver
reports how far the minimizer moved from it in the psi-weighted H1
norm, and the continuation pushes R to -infinity until the profile
stops changing.  Extended by 1 past a, the limit is the stationary
supersolution that traps the evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .drift import DriftTerm, weight_psi
from .nonlinearity import Nonlinearity, eval_F

__all__ = [
    "WeightedFunction",
    "StationarySupersolution",
    "SupersolutionReport",
    "NonConvergence",
    "MinimizerEscaped",
    "TailNotDecaying",
    "reference_ramp",
    "build_bvp_grid",
    "functional_J",
    "h1_psi_norm",
    "solve_w_R",
    "continue_to_minus_infinity",
    "verify_supersolution",
]


class NonConvergence(RuntimeError):
    """Newton stalled; carries the last scaled residual norm."""

    def __init__(self, message: str, last_residual: float):
        super().__init__(message)
        self.last_residual = last_residual


class MinimizerEscaped(RuntimeError):
    """The converged profile left the certified ball around the ramp.
    The solution is still attached for inspection."""

    def __init__(self, solution, distance: float, delta: float):
        super().__init__(
            f"solution left the certified ball: distance {distance:.3e} "
            f"exceeds {delta:.3e}")
        self.solution = solution
        self.distance = distance
        self.delta = delta


class TailNotDecaying(RuntimeError):
    """Continuation in R found no left-vanishing limit."""


@dataclass(frozen=True)
class WeightedFunction:
    """Grid function on [R, a] with Dirichlet data 0 and 1."""

    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    R: float = 0.0
    a: float = 1.0

    def __post_init__(self):
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be matching 1-d arrays")

    def at(self, x):
        return np.interp(np.asarray(x, dtype=float), self.grid, self.values)


@dataclass(frozen=True)
class StationarySupersolution:
    """Left-vanishing barrier: grid part on [R_final, a], constant 1
    beyond a, and a fitted exponential decay model below the grid."""

    w_inf: WeightedFunction
    delta_used: float
    h1_psi_distance: float
    tail_rate: float
    tail_intercept: float

    def at(self, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        left = x < self.w_inf.R
        right = x > self.w_inf.a
        mid = ~(left | right)
        out[left] = np.exp(self.tail_intercept + self.tail_rate * x[left])
        out[mid] = self.w_inf.at(x[mid])
        out[right] = 1.0
        return out


def reference_ramp(grid: np.ndarray, a: float) -> np.ndarray:
    """The ramp rising linearly from 0 at x = 0 to 1 at x = a, zero to
    the left."""
    return np.clip(np.asarray(grid, dtype=float) / a, 0.0, 1.0)


def build_bvp_grid(d: DriftTerm, R: float, a: float,
                   coarse_step: float = 0.05,
                   max_kappa_jump: float = 0.2) -> np.ndarray:
    """Nonuniform grid on [R, a]: coarse outside the drift support,
    bisected inside it until no cell carries more than max_kappa_jump
    of the drift's integral.  Sharp profiles get resolved to the scale
    on which the weight actually varies, nothing finer."""
    if not (R < -d.x0 - 1.0):
        raise ValueError("R must lie left of the drift support by > 1")
    # anchor the coarse nodes at a and step down, so grids built for
    # nested values of R agree exactly on their overlap
    n_steps = int(math.ceil((a - R) / coarse_step)) + 1
    gen = a - coarse_step * np.arange(n_steps)
    gen = gen[gen > R + 0.25 * coarse_step]
    pts = set(gen.tolist())
    pts.add(float(R))
    pts.update((-d.x0, 0.0))
    x = np.array(sorted(pts))
    for _ in range(60):
        kap = d.kappa(x)
        jump = np.abs(np.diff(kap))
        bad = np.nonzero(jump > max_kappa_jump)[0]
        if bad.size == 0:
            break
        mids = 0.5 * (x[bad] + x[bad + 1])
        x = np.sort(np.concatenate([x, mids]))
    else:
        raise RuntimeError("grid refinement failed to resolve the drift")
    return x


def _centered_coeffs(x: np.ndarray):
    """Second-order first- and second-derivative weights on a
    nonuniform three-point stencil, for the interior nodes."""
    hm = np.diff(x)[:-1]
    hp = np.diff(x)[1:]
    a_m = -hp / (hm * (hm + hp))
    a_0 = (hp - hm) / (hm * hp)
    a_p = hm / (hp * (hm + hp))
    b_m = 2.0 / (hm * (hm + hp))
    b_0 = -2.0 / (hm * hp)
    b_p = 2.0 / (hp * (hm + hp))
    return (a_m, a_0, a_p), (b_m, b_0, b_p)


def _derivative(grid: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Centered first derivative on the nonuniform grid, one-sided at
    the endpoints."""
    (a_m, a_0, a_p), _ = _centered_coeffs(grid)
    out = np.empty_like(values)
    out[1:-1] = a_m * values[:-2] + a_0 * values[1:-1] + a_p * values[2:]
    out[0] = (values[1] - values[0]) / (grid[1] - grid[0])
    out[-1] = (values[-1] - values[-2]) / (grid[-1] - grid[-2])
    return out


def functional_J(w: WeightedFunction, d: DriftTerm, nl: Nonlinearity,
                 interval: tuple) -> float:
    """Weighted energy over the part of the grid inside the interval,
    by the trapezoid rule with centered-difference derivatives."""
    lo, hi = interval
    if lo < w.grid[0] - 1e-12 or hi > w.grid[-1] + 1e-12:
        raise ValueError("interval must lie inside the grid")
    dv = _derivative(w.grid, w.values)
    mask = (w.grid >= lo - 1e-12) & (w.grid <= hi + 1e-12)
    x = w.grid[mask]
    integrand = (0.5 * dv[mask] ** 2
                 + eval_F(nl, w.values[mask])) * weight_psi(d, x)
    return float(np.trapezoid(integrand, x))


def h1_psi_norm(w: WeightedFunction, d: DriftTerm,
                interval: tuple | None = None) -> float:
    """Weighted H1 norm (derivative part plus value part) over the
    interval, default the whole grid."""
    if interval is None:
        interval = (w.grid[0], w.grid[-1])
    lo, hi = interval
    dv = _derivative(w.grid, w.values)
    mask = (w.grid >= lo - 1e-12) & (w.grid <= hi + 1e-12)
    x = w.grid[mask]
    integrand = (dv[mask] ** 2 + w.values[mask] ** 2) * weight_psi(d, x)
    return float(math.sqrt(max(np.trapezoid(integrand, x), 0.0)))


def _residual_and_jac(x, w, kv, nl):
    """Interior residual of -w'' + k w' - f(w) and the tridiagonal
    Jacobian bands, plus the per-row operator scale used to normalize
    residual norms."""
    (a_m, a_0, a_p), (b_m, b_0, b_p) = _centered_coeffs(x)
    wm, w0, wp = w[:-2], w[1:-1], w[2:]
    ki = kv[1:-1]
    G = (-(b_m * wm + b_0 * w0 + b_p * wp)
         + ki * (a_m * wm + a_0 * w0 + a_p * wp)
         - nl.f(w0))
    J_lo = -b_m + ki * a_m
    J_di = -b_0 + ki * a_0 - nl.f_prime(w0)
    J_hi = -b_p + ki * a_p
    scale = np.abs(b_m) + np.abs(b_0) + np.abs(b_p) + np.abs(ki) * (
        np.abs(a_m) + np.abs(a_0) + np.abs(a_p)) + nl.sup_abs_f_prime()
    return G, (J_lo, J_di, J_hi), scale


def scaled_residual(w: WeightedFunction, d: DriftTerm,
                    nl: Nonlinearity) -> np.ndarray:
    """Interior residual of the stationary equation, divided by the
    local operator row norm so that sharply refined cells do not drown
    the informative part in roundoff."""
    kv = d.k(w.grid)
    G, _, scale = _residual_and_jac(w.grid, w.values, kv, nl)
    return G / scale


def solve_w_R(d: DriftTerm, nl: Nonlinearity, R: float, a: float,
              tol: float = 1e-10, delta: float | None = None,
              grid: np.ndarray | None = None,
              max_iter: int = 200) -> WeightedFunction:
    """Damped Newton for the barrier equation with Dirichlet data 0 at
    R and 1 at a, started from the ramp.

    Convergence is declared on the sup norm of the scaled residual; the
    merit for the Armijo backtracking is its 2-norm.  When the Newton
    direction stalls (the linearization around a detached front is
    nearly singular along the translation mode), the solver falls back
    to backward Euler steps on the parabolic flow with a growing
    pseudo-time step, which follows the energy descent until Newton
    re-engages.  When delta is given, the converged profile must stay
    within that weighted H1 distance of the ramp, else
    MinimizerEscaped is raised with the solution attached.
    """
    x = build_bvp_grid(d, R, a) if grid is None else np.asarray(grid, float)
    kv = d.k(x)
    w = reference_ramp(x, a)
    n = x.size
    psi_x = weight_psi(d, x)

    def merit(vec):
        G, _, scale = _residual_and_jac(x, vec, kv, nl)
        return float(np.linalg.norm(G / scale))

    def energy(vec):
        integrand = (0.5 * np.gradient(vec, x) ** 2 + eval_F(nl, vec)) * psi_x
        return float(np.trapezoid(integrand, x))

    def banded_solve(J_lo, J_di, J_hi, G, shift=0.0):
        ab = np.zeros((3, n))
        ab[1, 0] = ab[1, -1] = 1.0
        ab[0, 2:] = J_hi
        ab[1, 1:-1] = J_di + shift
        ab[2, :-2] = J_lo
        rhs = np.zeros(n)
        rhs[1:-1] = -G
        # boundary rows already satisfied exactly by the initial ramp
        return solve_banded((1, 1), ab, rhs)

    converged = False
    last = math.inf
    dtau = 1.0
    for _ in range(max_iter):
        G, (J_lo, J_di, J_hi), scale = _residual_and_jac(x, w, kv, nl)
        last = float(np.max(np.abs(G / scale)))
        if last <= tol:
            converged = True
            break
        m_old = float(np.linalg.norm(G / scale))
        step = banded_solve(J_lo, J_di, J_hi, G)
        if float(np.max(np.abs(step))) <= tol:
            # below the resolution of the merit test; take it and let
            # the residual check at the top decide
            w = w + step
            continue
        t = 1.0
        accepted = False
        while t >= 2.0 ** -6:
            m_new = merit(w + t * step)
            if np.isfinite(m_new) and m_new <= (1.0 - 0.5 * t) * m_old:
                w = w + t * step
                accepted = True
                break
            t *= 0.5
        if accepted:
            continue
        # pseudo-transient fallback: follow the parabolic flow.  The
        # weighted energy decreases along it even while the residual
        # of a front in transit stays flat, so accept on either.
        e_old = energy(w)
        e_slack = 1e-12 * max(1.0, abs(e_old))
        while dtau >= 1e-8:
            step = banded_solve(J_lo, J_di, J_hi, G, shift=1.0 / dtau)
            trial = w + step
            m_new = merit(trial)
            if np.isfinite(m_new) and (
                    m_new <= (1.0 - 1e-3) * m_old
                    or energy(trial) <= e_old + e_slack):
                w = trial
                dtau = min(dtau * 2.0, 1e6)
                accepted = True
                break
            dtau *= 0.25
        if not accepted:
            raise NonConvergence("globalization stalled", last)
    if not converged:
        raise NonConvergence("Newton iteration limit reached", last)

    w[0], w[-1] = 0.0, 1.0
    if float(np.min(w)) < -1e-6 or float(np.max(w)) > 1.0 + 1e-6:
        raise NonConvergence("solution left the unit range", last)
    w = np.clip(w, 0.0, 1.0)

    out = WeightedFunction(grid=x, values=w, R=R, a=a)
    if delta is not None:
        diff = WeightedFunction(grid=x, values=w - reference_ramp(x, a),
                                R=R, a=a)
        dist = h1_psi_norm(diff, d)
        if dist > delta:
            raise MinimizerEscaped(out, dist, delta)
    return out


def continue_to_minus_infinity(d: DriftTerm, nl: Nonlinearity, a: float,
                               tol: float = 1e-8,
                               R_start: float = -30.0,
                               max_doublings: int = 4,
                               delta: float | None = None,
                               ) -> StationarySupersolution:
    """Push the left endpoint to -infinity by doubling R until the
    profile stops changing and has vanished on the left half.

    The delta ball is checked at every stage when given.  The left
    tail of the final profile gets an exponential fit that serves as
    the decay certificate of the barrier.
    """
    prev: WeightedFunction | None = None
    prev_left_sup = math.inf
    R = R_start
    left_sup = math.inf
    for _ in range(max_doublings + 1):
        cur = solve_w_R(d, nl, R, a, delta=delta)
        left_sup = float(np.max(cur.values[cur.grid <= R / 2.0]))
        if prev is not None:
            # the coarse nodes are anchored at a, so nested grids share
            # their overlap exactly and the comparison needs no interp
            common = np.intersect1d(cur.grid, prev.grid)
            cv = cur.values[np.searchsorted(cur.grid, common)]
            pv = prev.values[np.searchsorted(prev.grid, common)]
            diff = float(np.max(np.abs(cv - pv)))
            if diff < tol and left_sup < tol:
                return _package(cur, d, delta)
            if left_sup > 0.5 and prev_left_sup > 0.5:
                # the profile saturates near 1 over the left half at two
                # consecutive stages: it hugs whatever boundary it gets,
                # so no amount of pushing R produces a vanishing tail
                raise TailNotDecaying(
                    "left half saturates near 1 at R = {:g} and {:g}; "
                    "no decaying barrier".format(R, R / 2.0))
        prev = cur
        prev_left_sup = left_sup
        R *= 2.0
    raise TailNotDecaying(
        "no left-vanishing limit up to R = {:g}; left sup {:.3e}".format(
            R / 2.0, left_sup))


def _package(w: WeightedFunction, d: DriftTerm,
             delta: float | None) -> StationarySupersolution:
    skip, length = 5.0, 10.0
    lo = w.R + skip
    hi = min(w.R + skip + length, -d.x0 - 5.0)
    mask = (w.grid >= lo) & (w.grid <= hi) & (w.values > 0)
    if np.count_nonzero(mask) < 4:
        raise TailNotDecaying("too few positive tail samples for a fit")
    coeff = np.polyfit(w.grid[mask], np.log(w.values[mask]), 1)
    rate, intercept = float(coeff[0]), float(coeff[1])
    if rate <= 0:
        raise TailNotDecaying(f"fitted tail rate {rate:.3e} not decaying")
    diff = WeightedFunction(grid=w.grid,
                            values=w.values - reference_ramp(w.grid, w.a),
                            R=w.R, a=w.a)
    dist = h1_psi_norm(diff, d)
    return StationarySupersolution(
        w_inf=w, delta_used=float("nan") if delta is None else delta,
        h1_psi_distance=dist, tail_rate=rate, tail_intercept=intercept)


@dataclass(frozen=True)
class SupersolutionReport:
    """Outcome of the pointwise barrier verification."""

    passed: bool
    h1_psi_distance: float
    delta_used: float
    residual_min: float
    witness_x: float
    kink_slope: float
    tail_rate: float
    strictly_inside: bool

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "h1_psi_distance": self.h1_psi_distance,
            "delta_used": self.delta_used,
            "residual_min": self.residual_min,
            "witness_x": self.witness_x,
            "kink_slope": self.kink_slope,
            "tail_rate": self.tail_rate,
            "strictly_inside": self.strictly_inside,
        }


def verify_supersolution(s: StationarySupersolution, d: DriftTerm,
                         nl: Nonlinearity,
                         tol: float = 1e-6) -> SupersolutionReport:
    """Check the barrier property of the extended profile: scaled
    stationary residual nonnegative up to tol, nonnegative one-sided
    slope at the pasting with the constant 1, and values strictly
    inside (0, 1) on the interior.  The extension itself is exact
    (f(1) = 0), so only the grid part is examined."""
    w = s.w_inf
    res = scaled_residual(w, d, nl)
    i_min = int(np.argmin(res))
    residual_min = float(res[i_min])
    witness = float(w.grid[1:-1][i_min])
    kink = float((w.values[-1] - w.values[-2])
                 / (w.grid[-1] - w.grid[-2]))
    interior = w.values[1:-1]
    strict = bool(np.all((interior > 0.0) & (interior < 1.0)))
    passed = (residual_min >= -tol) and (kink >= -tol) and strict
    return SupersolutionReport(
        passed=passed, h1_psi_distance=s.h1_psi_distance,
        delta_used=s.delta_used, residual_min=residual_min,
        witness_x=witness, kink_slope=kink, tail_rate=s.tail_rate,
        strictly_inside=strict)
