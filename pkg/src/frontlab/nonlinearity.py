"""Bistable reaction terms and the variational constants attached to them.

A reaction term f lives on [0, 1] with stable zeros at 0 and 1 and an
unstable zero at theta in between.  For the analysis we work with a C2
extension to the whole line: f > 0 left of 0, f < 0 right of 1, and
asymptotically linear tails with negative slopes d_minus, d_plus.  The
extension is built so that sup|f''| outside [0, 1] never exceeds the
norm on [0, 1].

Everything downstream (criterion right-hand side, delta radius, energy
functional) consumes the constants computed by blocking_constants().
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline, PPoly

__all__ = [
    "ExtensionParams",
    "Nonlinearity",
    "BlockingConstants",
    "ConditionResult",
    "make_cubic",
    "make_from_table",
    "eval_F",
    "eval_F0",
    "validate",
    "blocking_constants",
]

# Extent of the explicit piecewise representation.  Beyond it PPoly
# extrapolates the outermost pieces, which are exactly the linear tails,
# so evaluation is consistent on all of R.
_RANGE_LO = -10.0
_RANGE_HI = 11.0


@dataclass(frozen=True)
class ExtensionParams:
    """How f is continued outside [0, 1]."""

    d_minus: float
    d_plus: float
    blend_left: float
    blend_right: float


@dataclass(frozen=True)
class Nonlinearity:
    """Immutable bistable reaction term with its C2 extension.

    f, f_prime, f_double_prime are vectorized callables valid on all of R.
    norm_f_double_prime is sup|f''| over [0, 1].
    """

    theta: float
    extension: ExtensionParams
    norm_f_double_prime: float
    kind: str = "cubic"
    _pp: PPoly = field(repr=False, compare=False, default=None)
    _pp1: PPoly = field(repr=False, compare=False, default=None)
    _pp2: PPoly = field(repr=False, compare=False, default=None)
    _anti: PPoly = field(repr=False, compare=False, default=None)

    def f(self, u):
        return self._pp(u)

    def f_prime(self, u):
        return self._pp1(u)

    def f_double_prime(self, u):
        return self._pp2(u)

    def sup_abs_f_prime(self, lo: float = 0.0, hi: float = 1.0) -> float:
        grid = np.linspace(lo, hi, 4001)
        return float(np.max(np.abs(self.f_prime(grid))))


@dataclass(frozen=True)
class BlockingConstants:
    """Every f-derived constant entering the blocking criterion."""

    alpha: float
    K_quad: float
    nu: float
    a_opt: float
    beta_a: float
    gamma_a: float
    eta: float
    C_f: float
    norm_f_double_prime: float
    max_F: float


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    witness: float | None = None
    detail: str = ""


def _quintic_coeffs(h: float, v0, s0, c0, v1, s1, c1) -> np.ndarray:
    """Degree-5 coefficients in the local variable t in [0, h], matching
    value/slope/curvature (v0,s0,c0) at t=0 and (v1,s1,c1) at t=h.
    Returned highest power first (PPoly convention)."""
    # rows: p(0), p'(0), p''(0), p(h), p'(h), p''(h) against t^5..t^0
    A = np.zeros((6, 6))
    A[0, 5] = 1.0
    A[1, 4] = 1.0
    A[2, 3] = 2.0
    powers = np.array([5, 4, 3, 2, 1, 0], dtype=float)
    A[3] = h ** powers
    A[4] = powers * h ** np.maximum(powers - 1, 0)
    A[5] = powers * (powers - 1) * h ** np.maximum(powers - 2, 0)
    rhs = np.array([v0, s0, c0, v1, s1, c1], dtype=float)
    return np.linalg.solve(A, rhs)


def _build_extended_ppoly(core: PPoly, d_minus: float, d_plus: float,
                          norm_f2_core: float):
    """Attach C2 blends and linear tails to a core piece on [0, 1].

    Returns (ppoly, blend_left, blend_right).  With tangent slopes the
    blend keeps sup|f''| for every width; otherwise the smallest width
    from a geometric scan that preserves the norm and the sign pattern
    is used.
    """
    f0_s = float(core(0.0, 1))
    f0_c = float(core(0.0, 2))
    f1_s = float(core(1.0, 1))
    f1_c = float(core(1.0, 2))

    def assemble(w_l: float, w_r: float) -> PPoly:
        breaks = np.concatenate((
            [_RANGE_LO, -w_l],
            core.x,
            [1.0 + w_r, _RANGE_HI],
        ))
        kdeg = max(core.c.shape[0], 6)
        npieces = core.c.shape[1] + 4
        c = np.zeros((kdeg, npieces))
        # left linear tail, local t = x - _RANGE_LO
        c[-2, 0] = d_minus
        c[-1, 0] = d_minus * _RANGE_LO
        # left blend on [-w_l, 0], local t = x + w_l
        c[-6:, 1] = _quintic_coeffs(w_l, -d_minus * w_l, d_minus, 0.0,
                                    0.0, f0_s, f0_c)
        # core pieces
        c[-core.c.shape[0]:, 2:2 + core.c.shape[1]] = core.c
        # right blend on [1, 1+w_r], local t = x - 1
        c[-6:, 2 + core.c.shape[1]] = _quintic_coeffs(
            w_r, 0.0, f1_s, f1_c, d_plus * w_r, d_plus, 0.0)
        # right linear tail, local t = x - (1 + w_r)
        c[-2, 3 + core.c.shape[1]] = d_plus
        c[-1, 3 + core.c.shape[1]] = d_plus * w_r
        return PPoly(c, breaks, extrapolate=True)

    def passes(pp: PPoly, w_l: float, w_r: float) -> bool:
        pp2 = pp.derivative(2)
        tneg = np.linspace(-w_l, 0.0, 1501)[:-1]
        tpos = np.linspace(1.0, 1.0 + w_r, 1501)[1:]
        if np.max(np.abs(pp2(tneg))) > norm_f2_core * (1 + 1e-12) + 1e-12:
            return False
        if np.max(np.abs(pp2(tpos))) > norm_f2_core * (1 + 1e-12) + 1e-12:
            return False
        # sign pattern outside [0, 1]
        left = np.linspace(_RANGE_LO, -1e-9, 2001)
        right = np.linspace(1.0 + 1e-9, _RANGE_HI, 2001)
        return bool(np.all(pp(left) > 0.0) and np.all(pp(right) < 0.0))

    tangent = (abs(d_minus - f0_s) < 1e-12 and abs(d_plus - f1_s) < 1e-12)
    if tangent:
        w = 1.0
        pp = assemble(w, w)
        return pp, w, w
    for w in np.geomspace(0.25, 8.0, 36):
        pp = assemble(w, w)
        if passes(pp, w, w):
            return pp, float(w), float(w)
    raise ValueError(
        "no blend width preserves the curvature bound for slopes "
        f"d_minus={d_minus}, d_plus={d_plus}")


def _finish(core: PPoly, theta: float, kind: str,
            d_minus: float | None, d_plus: float | None) -> Nonlinearity:
    if d_minus is None:
        d_minus = float(core(0.0, 1))
    if d_plus is None:
        d_plus = float(core(1.0, 1))
    if d_minus >= 0 or d_plus >= 0:
        raise ValueError("extension slopes must be negative")
    grid = np.linspace(0.0, 1.0, 4001)
    norm_f2 = float(np.max(np.abs(core(grid, 2))))
    pp, w_l, w_r = _build_extended_ppoly(core, d_minus, d_plus, norm_f2)
    return Nonlinearity(
        theta=theta,
        extension=ExtensionParams(d_minus, d_plus, w_l, w_r),
        norm_f_double_prime=norm_f2,
        kind=kind,
        _pp=pp,
        _pp1=pp.derivative(1),
        _pp2=pp.derivative(2),
        _anti=pp.antiderivative(),
    )


def make_cubic(theta: float, d_minus: float | None = None,
               d_plus: float | None = None, check: bool = True) -> Nonlinearity:
    """Cubic reaction u(1-u)(u-theta) with the standard C2 extension.

    theta must lie in (0, 1/2): at theta >= 1/2 the potential drop
    integral of f over [0, 1] is not positive, and theta <= 0 is not
    bistable.  check=False skips the range test (diagnostics only).
    """
    if check and not (0.0 < theta < 0.5):
        raise ValueError(f"theta={theta} outside (0, 1/2)")
    if not (0.0 < theta < 1.0):
        raise ValueError(f"theta={theta} outside (0, 1)")
    # u(1-u)(u-theta) = -u^3 + (1+theta) u^2 - theta u
    coeffs = np.array([[-1.0], [1.0 + theta], [-theta], [0.0]])
    core = PPoly(coeffs, np.array([0.0, 1.0]), extrapolate=True)
    return _finish(core, theta, "cubic", d_minus, d_plus)


def make_from_table(u_samples, f_samples, d_minus: float | None = None,
                    d_plus: float | None = None) -> Nonlinearity:
    """Reaction term from (u, f(u)) samples on [0, 1], cubic-spline
    interpolated, with the same extension machinery as the cubic."""
    u = np.asarray(u_samples, dtype=float)
    fv = np.asarray(f_samples, dtype=float)
    if u.ndim != 1 or u.shape != fv.shape or u.size < 4:
        raise ValueError("need matching 1-d sample arrays with >= 4 points")
    if abs(u[0]) > 1e-12 or abs(u[-1] - 1.0) > 1e-12:
        raise ValueError("samples must cover [0, 1] with endpoints 0 and 1")
    spline = CubicSpline(u, fv)
    core = PPoly(spline.c, spline.x, extrapolate=True)
    # interior zero = unstable equilibrium
    sgrid = np.linspace(1e-3, 1.0 - 1e-3, 4001)
    vals = core(sgrid)
    crossings = np.where(np.diff(np.sign(vals)) > 0)[0]
    if len(crossings) != 1:
        raise ValueError("table does not define a single interior sign change")
    lo, hi = sgrid[crossings[0]], sgrid[crossings[0] + 1]
    from scipy.optimize import brentq
    theta = float(brentq(core, lo, hi, xtol=1e-14))
    return _finish(core, theta, "table", d_minus, d_plus)


def from_callables(f, f_prime, f_double_prime, theta: float,
                   norm_f_double_prime: float | None = None) -> Nonlinearity:
    """Wrap raw callables without extension machinery.  Test helper for
    degenerate inputs (for instance f identically zero); the energy
    antiderivative falls back to a dense-sample spline."""
    grid = np.linspace(_RANGE_LO, _RANGE_HI, 40001)
    pp = CubicSpline(grid, f(grid))
    if norm_f_double_prime is None:
        g01 = np.linspace(0.0, 1.0, 2001)
        norm_f_double_prime = float(np.max(np.abs(f_double_prime(g01))))
    obj = Nonlinearity(
        theta=theta,
        extension=ExtensionParams(-1.0, -1.0, 0.0, 0.0),
        norm_f_double_prime=norm_f_double_prime,
        kind="callable",
        _pp=pp,
        _pp1=pp.derivative(1),
        _pp2=pp.derivative(2),
        _anti=pp.antiderivative(),
    )
    object.__setattr__(obj, "f", f)
    object.__setattr__(obj, "f_prime", f_prime)
    object.__setattr__(obj, "f_double_prime", f_double_prime)
    return obj


def eval_F(nl: Nonlinearity, t):
    """Potential F(t) = integral of f from t to 1.  F(1) = 0 exactly."""
    a = nl._anti
    return a(1.0) - a(t)


def eval_F0(nl: Nonlinearity, s):
    """Running integral of f from 0 to s (the Lyapunov-density potential;
    distinct from eval_F)."""
    a = nl._anti
    return a(s) - a(0.0)


def validate(nl: Nonlinearity, tol: float = 1e-9) -> list[ConditionResult]:
    """Check the bistability conditions and the extension invariants.

    Returns one result per condition; never raises.
    """
    out: list[ConditionResult] = []
    th = nl.theta
    interior = np.linspace(0.0, 1.0, 10001)[1:-1]

    # smoothness: f'' exists and has no sampled jumps beyond knot tolerance
    g = np.linspace(_RANGE_LO + 0.1, _RANGE_HI - 0.1, 20001)
    f2 = np.asarray(nl.f_double_prime(g), dtype=float)
    finite = bool(np.all(np.isfinite(f2)))
    jump = float(np.max(np.abs(np.diff(f2)))) if finite else math.inf
    out.append(ConditionResult("C2_regularity", finite and jump < 1.0,
                               witness=jump,
                               detail="max sampled jump of f''"))

    z0 = abs(float(nl.f(0.0)))
    z1 = abs(float(nl.f(1.0)))
    out.append(ConditionResult("zeros_at_0_1", z0 <= tol and z1 <= tol,
                               witness=max(z0, z1)))

    s0 = float(nl.f_prime(0.0))
    s1 = float(nl.f_prime(1.0))
    out.append(ConditionResult("stable_slopes", s0 < -tol and s1 < -tol,
                               witness=max(s0, s1),
                               detail="f'(0) and f'(1) must be negative"))

    lower = interior[interior < th - 1e-12]
    upper = interior[interior > th + 1e-12]
    neg_ok = bool(np.all(nl.f(lower) < 0.0)) if lower.size else False
    pos_ok = bool(np.all(nl.f(upper) > 0.0)) if upper.size else False
    bad = None
    if not neg_ok and lower.size:
        bad = float(lower[np.argmax(nl.f(lower))])
    elif not pos_ok and upper.size:
        bad = float(upper[np.argmin(nl.f(upper))])
    out.append(ConditionResult("sign_pattern", neg_ok and pos_ok, witness=bad,
                               detail="f < 0 on (0, theta), f > 0 on (theta, 1)"))

    drop = float(eval_F(nl, 0.0))
    out.append(ConditionResult("positive_drop", drop > tol, witness=drop,
                               detail="integral of f over [0, 1]"))

    left = np.linspace(_RANGE_LO, -1e-6, 10001)
    right = np.linspace(1.0 + 1e-6, _RANGE_HI, 10001)
    ext_sign = bool(np.all(nl.f(left) > 0.0) and np.all(nl.f(right) < 0.0))
    out.append(ConditionResult("extension_signs", ext_sign,
                               detail="f > 0 left of 0, f < 0 right of 1"))

    sl = float(nl.f_prime(_RANGE_LO))
    sr = float(nl.f_prime(_RANGE_HI))
    asym = (abs(sl - nl.extension.d_minus) <= tol
            and abs(sr - nl.extension.d_plus) <= tol)
    out.append(ConditionResult("asymptotic_slopes", asym,
                               witness=max(abs(sl - nl.extension.d_minus),
                                           abs(sr - nl.extension.d_plus))))

    outside = np.concatenate((left, right))
    norm_out = float(np.max(np.abs(nl.f_double_prime(outside))))
    out.append(ConditionResult(
        "curvature_bound", norm_out <= nl.norm_f_double_prime + tol,
        witness=norm_out,
        detail="sup|f''| outside [0,1] bounded by the norm on [0,1]"))
    return out


def _golden_min(g, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section minimum of a unimodal g on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    gc, gd = g(c), g(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = g(d)
    return 0.5 * (a + b)


def _refine_extremum(xs: np.ndarray, ys: np.ndarray, idx: int) -> float:
    """Parabolic refinement of a grid extremum value."""
    if idx == 0 or idx == len(xs) - 1:
        return float(ys[idx])
    x0, x1, x2 = xs[idx - 1], xs[idx], xs[idx + 1]
    y0, y1, y2 = ys[idx - 1], ys[idx], ys[idx + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    if denom == 0:
        return float(y1)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a == 0:
        return float(y1)
    xv = -b / (2 * a)
    if not (min(x0, x2) <= xv <= max(x0, x2)):
        return float(y1)
    c = y1 - a * x1 * x1 - b * x1
    return float(a * xv * xv + b * xv + c)


def blocking_constants(nl: Nonlinearity, quad_lo: float = -5.0,
                       quad_hi: float = 6.0, a_max: float = 50.0,
                       n_grid: int = 22001) -> BlockingConstants:
    """Assemble the constants of the variational blocking bound.

    alpha = min(1/4, -f'(0)/4).  K_quad is the largest constant with
    F(s) >= K_quad (s-1)^2 on the validation window, found by grid
    minimization of the ratio with the removable point at s=1 handled
    by its limit -f'(1)/2.  The ramp length a minimizes
    nu*gamma(a) + beta(a) by golden section, and
    C_f = alpha^2 eta / (||f''||^2 (nu gamma + beta)).
    """
    fp0 = float(nl.f_prime(0.0))
    fp1 = float(nl.f_prime(1.0))
    if fp0 >= 0 or fp1 >= 0:
        raise ValueError("need f'(0) < 0 and f'(1) < 0")
    alpha = min(0.25, -fp0 / 4.0)

    s = np.linspace(quad_lo, quad_hi, n_grid)
    mask = np.abs(s - 1.0) > 1e-3
    ratios = np.full_like(s, np.inf)
    ratios[mask] = eval_F(nl, s[mask]) / (s[mask] - 1.0) ** 2
    idx = int(np.argmin(ratios))
    K_quad = _refine_extremum(s, ratios, idx)
    K_quad = min(K_quad, -fp1 / 2.0)
    if K_quad <= 0:
        raise ValueError(f"no positive quadratic lower bound (K={K_quad})")
    nu = min(K_quad, 0.5)

    g01 = np.linspace(0.0, 1.0, 4001)
    Fvals = eval_F(nl, g01)
    imax = int(np.argmax(Fvals))
    max_F = _refine_extremum(g01, Fvals, imax)

    def cost(a: float) -> float:
        return nu * (1.0 / a + a / 3.0) + 1.0 / (2.0 * a) + a * max_F

    a_opt = _golden_min(cost, 1e-3, a_max)
    beta_a = 1.0 / (2.0 * a_opt) + a_opt * max_F
    gamma_a = 1.0 / a_opt + a_opt / 3.0
    eta = min(nu / 2.0, alpha)
    C_f = alpha * alpha * eta / (
        nl.norm_f_double_prime ** 2 * (nu * gamma_a + beta_a))
    return BlockingConstants(
        alpha=alpha, K_quad=float(K_quad), nu=float(nu), a_opt=float(a_opt),
        beta_a=float(beta_a), gamma_a=float(gamma_a), eta=float(eta),
        C_f=float(C_f), norm_f_double_prime=nl.norm_f_double_prime,
        max_F=float(max_F))
