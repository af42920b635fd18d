"""Closed-form laws used as oracles by the statistical tests.

Laws covered: the first-passage time tau of a Brownian motion from level x
to 0 (density, cdf, quantile), the time-rescaled pre-hitting process
V_u = W_{x, u*tau} at a fixed fraction u (density, cdf, quantile, tail
constant), the running-maximum tail P(sup V > y) = x/y, the density of
sqrt(tau), and the large-z asymptote of the conditional density given a
high maximum.  All are pure functions; quadrature helpers use adaptive
Simpson with tangent substitutions for the polynomial tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, ndtri

from .core import DegenerateLawError, DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT_2_PI = math.sqrt(2.0 / math.pi)


def norm_sf(z):
    """Standard normal upper tail, computed directly from erfc so the far
    tail does not cancel."""
    return 0.5 * erfc(np.asarray(z, dtype=np.float64) / _SQRT2)


def norm_isf(q: float) -> float:
    """Inverse of norm_sf."""
    if not 0.0 < q < 1.0:
        raise DomainError("tail probability must lie in (0, 1)")
    return float(-ndtri(q))


# ---------------------------------------------------------------------------
# adaptive quadrature


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9,
                     max_depth: int = 50) -> float:
    """Adaptive Simpson on [a, b], absolute tolerance ``tol``."""
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    # explicit stack: (a, fa, m, fm, b, fb, whole, tol, depth)
    stack = [(a, fa, m, fm, b, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a, fa, m, fm, b, fb, whole, tol, depth = stack.pop()
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        err = left + right - whole
        if abs(err) <= 15.0 * tol or depth >= max_depth:
            total += left + right + err / 15.0
        else:
            stack.append((a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1))
            stack.append((m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1))
    return total


def integrate_half_line(f, tol: float = 1e-9, power: int = 1) -> float:
    """Integral of f over (0, inf) via a tangent substitution.

    power=1 maps t = tan(theta) (suits ~t^-2 tails); power=2 maps
    t = tan(theta)^2 (suits ~t^-3/2 tails with an integrable endpoint
    singularity at 0).
    """
    if power == 1:
        def g(theta):
            c = math.cos(theta)
            if c <= 0.0:
                return 0.0
            t = math.tan(theta)
            return f(t) / (c * c) if t > 0.0 else 0.0
    elif power == 2:
        def g(theta):
            c = math.cos(theta)
            if c <= 0.0:
                return 0.0
            s = math.tan(theta)
            t = s * s
            return f(t) * 2.0 * s / (c * c) if t > 0.0 else 0.0
    else:
        raise DomainError("power must be 1 or 2")
    return adaptive_simpson(g, 0.0, 0.5 * math.pi, tol=tol)


# ---------------------------------------------------------------------------
# first-passage time tau


def _check_positive(**kwargs):
    for name, val in kwargs.items():
        arr = np.asarray(val, dtype=np.float64)
        if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
            raise DomainError(f"{name} must be positive and finite")


def tau_density(x: float, t):
    """Density x * exp(-x^2 / 2t) / sqrt(2 pi t^3) of the hitting time."""
    _check_positive(x=x, t=t)
    t = np.asarray(t, dtype=np.float64)
    out = x * np.exp(-x * x / (2.0 * t)) / np.sqrt(2.0 * np.pi * t ** 3)
    return float(out) if out.ndim == 0 else out


def tau_cdf(x: float, t):
    """P(tau <= t) = 2 * norm_sf(x / sqrt(t))."""
    _check_positive(x=x, t=t)
    t = np.asarray(t, dtype=np.float64)
    out = 2.0 * norm_sf(x / np.sqrt(t))
    return float(out) if out.ndim == 0 else out


def tau_quantile(x: float, q):
    """Inverse of tau_cdf in t: t = (x / norm_isf(q/2))^2."""
    _check_positive(x=x)
    q_arr = np.asarray(q, dtype=np.float64)
    if np.any(q_arr <= 0.0) or np.any(q_arr >= 1.0):
        raise DomainError("quantile level must lie in (0, 1)")
    z = -ndtri(0.5 * q_arr)
    out = (x / z) ** 2
    return float(out) if out.ndim == 0 else out


def sqrt_tau_density(y):
    """Density of sqrt(tau(1)): sqrt(2/pi) y^-2 exp(-1/(2 y^2))."""
    _check_positive(y=y)
    y = np.asarray(y, dtype=np.float64)
    out = _SQRT_2_PI * np.exp(-0.5 / (y * y)) / (y * y)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# the rescaled pre-hitting marginal V_u


def _check_u(u: float):
    if u == 0.0 or u == 1.0:
        raise DegenerateLawError(
            "law degenerates to a point mass at u in {0, 1}")
    if not 0.0 < u < 1.0:
        raise DomainError("u must lie in (0, 1)")


def v_density(x: float, u: float, y):
    """Marginal density of V_u = W_{x, u*tau(x)} at level y > 0."""
    _check_positive(x=x)
    _check_u(u)
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0.0):
        raise DomainError("y must be positive")
    a = u * y * y + (1.0 - u) * (y - x) ** 2
    b = u * y * y + (1.0 - u) * (y + x) ** 2
    out = 4.0 * math.sqrt(u * (1.0 - u)) * x * y * y / (np.pi * a * b)
    return float(out) if out.ndim == 0 else out


def v_cdf(x: float, u: float, y):
    """Distribution function of V_u, in closed form.

    The density's denominator factors as A*B with B - A = 4(1-u)x y, so the
    integrand splits into y/A - y/B; each piece has a log + arctan
    antiderivative.
    """
    _check_positive(x=x)
    _check_u(u)
    y = np.asarray(y, dtype=np.float64)
    if np.any(y < 0.0):
        raise DomainError("y must be nonnegative")
    beta = (1.0 - u) * x
    gamma = (1.0 - u) * x * x
    delta = x * math.sqrt(u * (1.0 - u))
    a = y * y - 2.0 * beta * y + gamma
    b = y * y + 2.0 * beta * y + gamma
    k = math.sqrt(u * (1.0 - u)) / (np.pi * (1.0 - u))
    out = k * (0.5 * np.log(a / b)
               + (beta / delta) * (np.arctan((y - beta) / delta)
                                   + np.arctan((y + beta) / delta)))
    out = np.where(y == 0.0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def v_cdf_quad(x: float, u: float, y: float, tol: float = 1e-9) -> float:
    """Quadrature evaluation of the V_u cdf (independent cross-check of
    v_cdf)."""
    _check_positive(x=x, y=y)
    _check_u(u)
    return adaptive_simpson(lambda s: v_density(x, u, s) if s > 0 else 0.0,
                            0.0, float(y), tol=tol)


def v_quantile(x: float, u: float, q):
    """Inverse of v_cdf in y, by bisection on the closed form."""
    _check_positive(x=x)
    _check_u(u)
    q_arr = np.atleast_1d(np.asarray(q, dtype=np.float64))
    if np.any(q_arr <= 0.0) or np.any(q_arr >= 1.0):
        raise DomainError("quantile level must lie in (0, 1)")
    c = v_tail_constant(x, u)
    lo = np.full_like(q_arr, 1e-12)
    # complementary cdf ~ c/y, so y = 2c/(1-q) safely brackets from above
    hi = np.maximum(2.0 * c / (1.0 - q_arr), 4.0 * x)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = v_cdf(x, u, mid) >= q_arr
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
        if np.max(hi - lo) < 1e-13 * np.max(hi):
            break
    out = 0.5 * (lo + hi)
    return float(out[0]) if np.ndim(q) == 0 else out


def v_tail_constant(x: float, u: float) -> float:
    """Constant c with y^2 * v_density(x, u, y) -> c as y -> inf."""
    _check_positive(x=x)
    _check_u(u)
    return 4.0 * x * math.sqrt(u * (1.0 - u)) / math.pi


def max_tail(x: float, y: float) -> float:
    """P(sup_u V_u > y) = x/y for y > x, else 1."""
    _check_positive(x=x)
    if y <= x:
        return 1.0
    return x / y


def q_asymptote(u: float, z):
    """Large-z form of the conditional density of V_u / y given a maximum
    above y: 4 sqrt(u(1-u)) / (pi z^2).  Independent of the start level."""
    _check_u(u)
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0.0):
        raise DomainError("z must be positive")
    out = 4.0 * math.sqrt(u * (1.0 - u)) / (np.pi * z * z)
    return float(out) if out.ndim == 0 else out


def mills_integral_check(tol: float = 1e-10) -> float:
    """Numerical value of the Mills-ratio constant integral
    int_0^inf u * norm_sf(u) du (= 1/4)."""
    return integrate_half_line(lambda t: t * float(norm_sf(t)), tol=tol)


# ---------------------------------------------------------------------------
# law registry for tabulation


_LAWS = ("tau_density", "v_density", "v_tail_asymptote", "max_tail",
         "sqrt_tau_density", "q_asymptote")
_NEEDS_U = {"v_density", "v_tail_asymptote", "q_asymptote"}


@dataclass(frozen=True)
class DensitySpec:
    """Identifies one analytic law and its parameters for tabulation."""

    law: str
    x: float = 1.0
    u: float | None = None
    y: float | None = None  # threshold, only meaningful for q_asymptote

    def __post_init__(self):
        if self.law not in _LAWS:
            raise DomainError(f"unknown law {self.law!r}; "
                              f"expected one of {_LAWS}")
        if self.x <= 0.0:
            raise DomainError("x must be positive")
        if self.law in _NEEDS_U:
            if self.u is None:
                raise DomainError(f"{self.law} requires u")
            _check_u(self.u)

    def evaluate(self, arg):
        """Value of the law at the given argument (t, y, or z)."""
        if self.law == "tau_density":
            return tau_density(self.x, arg)
        if self.law == "v_density":
            return v_density(self.x, self.u, arg)
        if self.law == "v_tail_asymptote":
            c = v_tail_constant(self.x, self.u)
            arr = np.asarray(arg, dtype=np.float64)
            out = c / (arr * arr)
            return float(out) if out.ndim == 0 else out
        if self.law == "max_tail":
            arr = np.atleast_1d(np.asarray(arg, dtype=np.float64))
            out = np.array([max_tail(self.x, float(v)) for v in arr])
            return float(out[0]) if np.ndim(arg) == 0 else out
        if self.law == "sqrt_tau_density":
            return sqrt_tau_density(arg)
        return q_asymptote(self.u, arg)
