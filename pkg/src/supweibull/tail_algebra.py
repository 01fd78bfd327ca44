"""Weibullian tail classes and their closed-form algebra.

A nonnegative random variable ``V`` belongs to the class ``W(alpha, beta, gamma, c)``
when ``P(V > u) = c * u**gamma * exp(-beta * u**alpha) * (1 + o(1))`` as
``u -> inf``.  The class is closed under products of independent variables,
powers and positive scalings, which is what every downstream closed form is
built from.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from scipy import optimize

from .errors import DomainError

__all__ = [
    "WeibullTailClass",
    "tail_value",
    "log_tail_value",
    "product",
    "power",
    "scale",
    "normal_tail_class",
    "normal_sf",
    "threshold_for",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0.0 and math.isfinite(value)):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")
    return value


@dataclass(frozen=True)
class WeibullTailClass:
    """Quadruple ``(alpha, beta, gamma, c)`` of an asymptotically Weibullian tail.

    ``meta`` is free-form provenance (e.g. a Monte Carlo Pickands estimate that
    entered ``c``); it takes no part in equality or hashing.
    """

    alpha: float
    beta: float
    gamma: float
    c: float
    meta: Mapping[str, Any] | None = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_positive("alpha", self.alpha))
        object.__setattr__(self, "beta", _check_positive("beta", self.beta))
        object.__setattr__(self, "c", _check_positive("c", self.c))
        gamma = float(self.gamma)
        if not math.isfinite(gamma):
            raise DomainError(f"gamma must be finite, got {gamma!r}")
        object.__setattr__(self, "gamma", gamma)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.c)

    def to_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "c": self.c}

    def tail_value(self, u: float) -> float:
        return tail_value(self, u)

    def log_tail_value(self, u: float) -> float:
        return log_tail_value(self, u)

    def decreasing_from(self) -> float:
        """A threshold past which ``tail_value`` is strictly decreasing."""
        return (max(0.0, self.gamma) / (self.alpha * self.beta)) ** (1.0 / self.alpha) + 1.0


def log_tail_value(w: WeibullTailClass, u: float) -> float:
    """``log(c) + gamma*log(u) - beta*u**alpha``; finite where ``tail_value`` underflows."""
    u = float(u)
    if not u > 0.0:
        raise DomainError(f"threshold u must be positive, got {u!r}")
    return math.log(w.c) + w.gamma * math.log(u) - w.beta * u**w.alpha


def tail_value(w: WeibullTailClass, u: float) -> float:
    """Asymptotic surrogate ``c * u**gamma * exp(-beta * u**alpha)``.

    Not clamped to [0, 1]: for small ``u`` the surrogate can exceed one.
    """
    return math.exp(log_tail_value(w, u))


def product(w1: WeibullTailClass, w2: WeibullTailClass) -> WeibullTailClass:
    """Tail class of ``X * Y`` for independent ``X in w1`` and ``Y in w2``."""
    a1, b1, g1, c1 = w1.as_tuple()
    a2, b2, g2, c2 = w2.as_tuple()
    s = a1 + a2
    alpha = a1 * a2 / s
    log_bracket = math.log((a1 / a2) ** (a2 / s) + (a2 / a1) ** (a1 / s))
    beta = math.exp((a2 / s) * math.log(b1) + (a1 / s) * math.log(b2) + log_bracket)
    gamma = (a1 * a2 + 2.0 * a1 * g2 + 2.0 * a2 * g1) / (2.0 * s)
    log_c = (
        _LOG_SQRT_2PI
        + math.log(c1)
        + math.log(c2)
        - 0.5 * math.log(s)
        + (a2 - 2.0 * g1 + 2.0 * g2) / (2.0 * s) * math.log(a1 * b1)
        + (a1 - 2.0 * g2 + 2.0 * g1) / (2.0 * s) * math.log(a2 * b2)
    )
    return WeibullTailClass(alpha, beta, gamma, math.exp(log_c))


def power(w: WeibullTailClass, h: float) -> WeibullTailClass:
    """Tail class of ``T**h``."""
    h = _check_positive("exponent h", h)
    return WeibullTailClass(w.alpha / h, w.beta, w.gamma / h, w.c)


def scale(w: WeibullTailClass, k: float) -> WeibullTailClass:
    """Tail class of ``k * T``."""
    k = _check_positive("scale k", k)
    log_k = math.log(k)
    return WeibullTailClass(
        w.alpha,
        w.beta * math.exp(-w.alpha * log_k),
        w.gamma,
        w.c * math.exp(-w.gamma * log_k),
    )


def threshold_for(w: WeibullTailClass, p: float) -> float:
    """``u`` on the decreasing branch with ``tail_value(w, u) == p``."""
    if not 0.0 < p:
        raise DomainError(f"target probability must be positive, got {p!r}")
    target = math.log(p)
    lo = w.decreasing_from()
    if log_tail_value(w, lo) <= target:
        raise DomainError(f"tail surrogate is already below {p!r} where it starts decreasing")
    hi = 2.0 * lo
    while log_tail_value(w, hi) > target:
        hi *= 2.0
    return optimize.brentq(lambda u: log_tail_value(w, u) - target, lo, hi, xtol=1e-14, rtol=1e-15)


def normal_tail_class() -> WeibullTailClass:
    """Class of a standard normal variable, ``(2, 1/2, -1, 1/sqrt(2 pi))``."""
    return WeibullTailClass(2.0, 0.5, -1.0, 1.0 / math.sqrt(2.0 * math.pi))


def normal_sf(u: float) -> float:
    """Standard normal upper tail via ``erfc``."""
    return 0.5 * math.erfc(u / math.sqrt(2.0))
