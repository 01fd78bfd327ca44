"""Laplace-type integral behind the product rule, and a quadrature oracle for it.

The integral is

    I(u) = int_{a(u)}^{A(u)} x**gamma * exp(-beta1 * u**alpha1 / x**alpha1 - beta2 * x**alpha2) dx

over the window ``a(u) = u**(alpha1 / (2 s))``, ``A(u) = u**(2 alpha1 / s)`` with
``s = alpha1 + alpha2``.  Its leading asymptotics ``c * u**delta * exp(-beta3 * u**alpha3)``
come from the saddle point of the exponent; the oracle integrates the same
expression numerically so the two can be compared.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError, DomainError

__all__ = [
    "LaplaceIntegralParams",
    "LaplaceAsymptotic",
    "l1fed_closed_form",
    "saddle_point",
    "exponent",
    "exponent_second_derivative",
    "window",
    "l1fed_integral_oracle",
    "l1fed_log_integral_oracle",
    "u_for_exponent",
    "interior_threshold",
]


@dataclass(frozen=True)
class LaplaceIntegralParams:
    alpha1: float
    beta1: float
    alpha2: float
    beta2: float
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("alpha1", "beta1", "alpha2", "beta2"):
            value = float(getattr(self, name))
            if not (value > 0.0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "gamma", float(self.gamma))


@dataclass(frozen=True)
class LaplaceAsymptotic:
    """``c * u**delta * exp(-beta3 * u**alpha3)``."""

    alpha3: float
    beta3: float
    delta: float
    c: float

    def log_value(self, u: float) -> float:
        return math.log(self.c) + self.delta * math.log(u) - self.beta3 * u**self.alpha3

    def value(self, u: float) -> float:
        return math.exp(self.log_value(u))


def l1fed_closed_form(p: LaplaceIntegralParams) -> LaplaceAsymptotic:
    a1, b1, a2, b2, g = p.alpha1, p.beta1, p.alpha2, p.beta2, p.gamma
    s = a1 + a2
    alpha3 = a1 * a2 / s
    beta3 = b1 ** (a2 / s) * b2 ** (a1 / s) * ((a1 / a2) ** (a2 / s) + (a2 / a1) ** (a1 / s))
    delta = a1 * (-a2 + 2.0 * g + 2.0) / (2.0 * s)
    log_c = (
        0.5 * math.log(2.0 * math.pi)
        - 0.5 * math.log(s)
        + (-a2 + 2.0 * g + 2.0) / (2.0 * s) * math.log(a1 * b1)
        + (-a1 - 2.0 * g - 2.0) / (2.0 * s) * math.log(a2 * b2)
    )
    return LaplaceAsymptotic(alpha3, beta3, delta, math.exp(log_c))


def exponent(p: LaplaceIntegralParams, x, u: float):
    """``S(x, u) = -beta1 u^alpha1 / x^alpha1 - beta2 x^alpha2``."""
    x = np.asarray(x, dtype=float)
    return -p.beta1 * u**p.alpha1 * x ** (-p.alpha1) - p.beta2 * x**p.alpha2


def exponent_second_derivative(p: LaplaceIntegralParams, x, u: float):
    x = np.asarray(x, dtype=float)
    a1, a2 = p.alpha1, p.alpha2
    return -a1 * (a1 + 1.0) * p.beta1 * u**a1 * x ** (-a1 - 2.0) - a2 * (a2 - 1.0) * p.beta2 * x ** (a2 - 2.0)


def saddle_point(p: LaplaceIntegralParams, u: float) -> float:
    """Unique maximiser of ``S(., u)`` on ``(0, inf)``."""
    s = p.alpha1 + p.alpha2
    return (p.alpha1 * p.beta1 / (p.alpha2 * p.beta2)) ** (1.0 / s) * u ** (p.alpha1 / s)


def window(p: LaplaceIntegralParams, u: float) -> tuple[float, float]:
    s = p.alpha1 + p.alpha2
    return u ** (p.alpha1 / (2.0 * s)), u ** (2.0 * p.alpha1 / s)


def interior_threshold(p: LaplaceIntegralParams) -> float:
    """Smallest ``u0 >= 1`` with ``a(u) < x0(u) < A(u)`` for every ``u > u0``.

    With ``k = (alpha1 beta1 / (alpha2 beta2))**(1/s)`` the conditions read
    ``u**(alpha1/(2s)) > 1/k`` and ``u**(alpha1/s) > k``.
    """
    s = p.alpha1 + p.alpha2
    k = (p.alpha1 * p.beta1 / (p.alpha2 * p.beta2)) ** (1.0 / s)
    lower = k ** (-2.0 * s / p.alpha1)
    upper = k ** (s / p.alpha1)
    return max(1.0, lower, upper)


def u_for_exponent(p: LaplaceIntegralParams, target: float) -> float:
    """``u`` at which ``beta3 * u**alpha3`` equals ``target``."""
    asym = l1fed_closed_form(p)
    return (target / asym.beta3) ** (1.0 / asym.alpha3)


# QUADPACK refuses relative tolerances below 50 machine epsilons
_QUAD_MIN_REL = 50.0 * np.finfo(float).eps * 1.01


def _log_integrand_y(p: LaplaceIntegralParams, y, u: float):
    # substitution x = e^y: integrand x^gamma e^S dx = exp((gamma + 1) y + S(e^y, u)) dy
    y = np.asarray(y, dtype=float)
    return (
        (p.gamma + 1.0) * y
        - p.beta1 * u**p.alpha1 * np.exp(-p.alpha1 * y)
        - p.beta2 * np.exp(p.alpha2 * y)
    )


def l1fed_log_integral_oracle(
    p: LaplaceIntegralParams, u: float, rel_tol: float = 1e-8, limit: int = 200
) -> float:
    """Logarithm of the window integral, by adaptive Gauss-Kronrod quadrature.

    In ``y = log x`` the integrand is log-concave, so its peak ``y*`` is found
    by a root solve and the window is split at ``y*`` and at ``y* +- 8 w`` with
    ``w`` the curvature width.  Every evaluation is ``exp(h(y) - h(y*))``; the
    peak factor is added back in log space.
    """
    u = float(u)
    if not u > 0.0:
        raise DomainError(f"u must be positive, got {u!r}")
    if not 0.0 < rel_tol <= 1e-3:
        raise DomainError(f"rel_tol must lie in (0, 1e-3], got {rel_tol!r}")
    a, big_a = window(p, u)
    if not a < big_a:
        raise DomainError(f"empty integration window [{a}, {big_a}] at u={u}")
    ya, yb = math.log(a), math.log(big_a)

    g1 = p.gamma + 1.0
    c1 = p.alpha1 * p.beta1 * u**p.alpha1
    c2 = p.alpha2 * p.beta2

    def dh(y):
        return g1 + c1 * math.exp(-p.alpha1 * y) - c2 * math.exp(p.alpha2 * y)

    # dh is strictly decreasing; clip the maximiser to the window
    if dh(ya) <= 0.0:
        y_star = ya
    elif dh(yb) >= 0.0:
        y_star = yb
    else:
        y_star = optimize.brentq(dh, ya, yb, xtol=1e-14, rtol=1e-14, maxiter=500)
    h_star = float(_log_integrand_y(p, y_star, u))
    curvature = p.alpha1 * c1 * math.exp(-p.alpha1 * y_star) + p.alpha2 * c2 * math.exp(
        p.alpha2 * y_star
    )
    width = 1.0 / math.sqrt(curvature)

    breaks = sorted({ya, yb, y_star, *(min(yb, max(ya, y_star + k * width)) for k in (-8.0, 8.0))})

    def f(y):
        return math.exp(float(_log_integrand_y(p, y, u)) - h_star)

    total = 0.0
    abs_err = 0.0
    failed = None
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            out = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=max(rel_tol, _QUAD_MIN_REL), limit=limit,
                                 full_output=1)
        value, err = out[0], out[1]
        total += value
        abs_err += err
        if len(out) > 3 and failed is None:
            failed = out[3]
    if not total > 0.0:
        raise ConvergenceError("quadrature returned a non-positive integral", best_estimate=total)
    best_log = h_star + math.log(total)
    if failed is not None or abs_err > rel_tol * total:
        raise ConvergenceError(
            f"tolerance {rel_tol} not reached within {limit} subdivisions per piece "
            f"(relative error estimate {abs_err / total:.3g}): {failed or ''}".strip(),
            best_estimate=math.exp(best_log),
            error_estimate=abs_err * math.exp(h_star),
        )
    return best_log


def l1fed_integral_oracle(
    p: LaplaceIntegralParams, u: float, rel_tol: float = 1e-8, limit: int = 200
) -> float:
    """Numerical value of the window integral (underflows to 0 only past ~745 in the exponent)."""
    return math.exp(l1fed_log_integral_oracle(p, u, rel_tol=rel_tol, limit=limit))
