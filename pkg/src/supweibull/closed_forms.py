"""Tail classes of suprema over a Weibullian random horizon.

For a centered Gaussian process ``X`` with stationary increments and variance
``sigma^2(t) ~ D t^a_inf`` and an independent horizon ``T in W(alpha, beta, gamma, C)``,
``sup_{[0,T]} X`` is Weibullian with an explicit quadruple.  fBm is handled for
every Hurst index through self-similarity, and fractional Laplace motion
(fBm time-changed by a gamma subordinator) through sandwich bounds.

Every quadruple here is also reachable as a composition of
:func:`~supweibull.tail_algebra.product`, :func:`~supweibull.tail_algebra.power`
and :func:`~supweibull.tail_algebra.scale`; the explicit formulas are kept
separate so that the test-suite can compare the two routes.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import integrate, special

from .errors import DomainError
from .tail_algebra import WeibullTailClass, normal_tail_class, power, scale

__all__ = [
    "VarianceModel",
    "FlmTailResult",
    "sigma_tail_class",
    "sup_tail_general",
    "sup_tail_ig",
    "ig_effective_d",
    "sup_fbm_unit_interval",
    "sup_tail_fbm",
    "m_h",
    "flm_sup_tail",
    "gamma_tail",
    "brownian_exp_exact",
    "resolve_pickands",
]

PickandsArg = float | Literal["auto"] | None


def _check_hurst(h: float) -> float:
    h = float(h)
    if not 0.0 < h <= 1.0:
        raise DomainError(f"Hurst index must lie in (0, 1], got {h!r}")
    return h


def _check_alpha_inf(alpha_inf: float) -> float:
    alpha_inf = float(alpha_inf)
    if not 1.0 < alpha_inf < 2.0:
        raise DomainError(f"alpha_inf must lie in (1, 2), got {alpha_inf!r}")
    return alpha_inf


@dataclass(frozen=True)
class VarianceModel:
    """Variance function ``t -> sigma_X^2(t)`` with leading term ``d * t**alpha_inf``.

    ``remainder_exponent`` is the ``r`` in ``sigma^2(t) = d t^a_inf + o(t^(a_inf - r))``.
    """

    d: float
    alpha_inf: float
    eval: Callable[[float], float]
    remainder_exponent: float = 0.0
    name: str = "custom"

    @classmethod
    def power_law(cls, d: float, alpha_inf: float) -> "VarianceModel":
        d, alpha_inf = float(d), float(alpha_inf)
        return cls(d, alpha_inf, lambda t: d * float(t) ** alpha_inf, math.inf, "power_law")

    @classmethod
    def integrated_cauchy(cls, alpha_inf: float) -> "VarianceModel":
        """Integral of a stationary process with ``R(t) = (1 + t^2)^(-(2 - a_inf)/2)``.

        ``sigma^2(t) = 2 int_0^t (t - v) R(v) dv``; the leading coefficient is
        ``2/(a_inf (a_inf - 1))`` since ``R(t) ~ t^(a_inf - 2)``.
        """
        alpha_inf = _check_alpha_inf(alpha_inf)
        expo = -(2.0 - alpha_inf) / 2.0

        def var(t: float) -> float:
            t = float(t)
            if t <= 0.0:
                return 0.0
            val, _ = integrate.quad(lambda v: (t - v) * (1.0 + v * v) ** expo, 0.0, t, limit=200)
            return 2.0 * val

        return cls(ig_effective_d(1.0, alpha_inf), alpha_inf, var, 1.0, "integrated_cauchy")

    def leading_ratio(self, times) -> np.ndarray:
        """``sigma^2(t) / (d t^a_inf)`` on the given times."""
        times = np.asarray(times, dtype=float)
        return np.array([self.eval(t) for t in times]) / (self.d * times**self.alpha_inf)

    def satisfies_bound(self, times, rtol: float = 1e-9) -> bool:
        """Spot-check ``sigma^2(t) <= d t^a_inf`` on sampled times."""
        return bool(np.all(self.leading_ratio(times) <= 1.0 + rtol))

    def looks_convex(self, times) -> bool:
        """Second differences of ``sigma^2`` on a sorted grid are nonnegative."""
        times = np.sort(np.asarray(times, dtype=float))
        vals = np.array([self.eval(t) for t in times])
        slopes = np.diff(vals) / np.diff(times)
        return bool(np.all(np.diff(slopes) >= -1e-9 * np.abs(slopes[1:]).max()))


@dataclass(frozen=True)
class FlmTailResult:
    """Tail description of ``sup_{[0,S]} L_H`` for fractional Laplace motion.

    ``regime == "exact"`` carries ``tail``; ``regime == "bounds"`` carries
    ``lower`` and ``upper`` (both share ``alpha = log_exponent`` and ``beta = m_h``).
    ``extension`` marks results for ``nu != 1``.
    """

    regime: Literal["exact", "bounds"]
    m_h: float
    log_exponent: float
    tail: WeibullTailClass | None = None
    lower: WeibullTailClass | None = None
    upper: WeibullTailClass | None = None
    extension: bool = False

    def to_dict(self) -> dict:
        out = {"regime": self.regime, "m_h": self.m_h, "log_exponent": self.log_exponent,
               "extension": self.extension}
        for key in ("tail", "lower", "upper"):
            w = getattr(self, key)
            out[key] = None if w is None else w.to_dict()
        return out


def sigma_tail_class(d: float, alpha_inf: float, horizon: WeibullTailClass) -> WeibullTailClass:
    """Class of ``sqrt(d) * T**(alpha_inf/2)``, the standard deviation at the horizon."""
    return scale(power(horizon, alpha_inf / 2.0), math.sqrt(d))


def sup_tail_general(v: VarianceModel, horizon: WeibullTailClass, check: bool = True) -> WeibullTailClass:
    """Class of ``sup_{[0,T]} X`` for ``sigma_X^2(t) ~ D t^a_inf``, ``a_inf in (1, 2)``.

    With ``s = alpha + a_inf``::

        alpha~ = 2 alpha / s
        beta~  = beta^(a_inf/s) (1/(2D))^(alpha/s) [(alpha/a_inf)^(a_inf/s) + (a_inf/alpha)^(alpha/s)]
        gamma~ = 2 gamma / s
        C~     = C sqrt(a_inf/(2s)) (a_inf/(2 alpha beta))^(gamma/s) D^(-gamma/s)

    Convexity of ``v.eval`` is spot-checked on a log grid when ``check`` is set;
    failure only warns.
    """
    a_inf = _check_alpha_inf(v.alpha_inf)
    d = float(v.d)
    if not d > 0.0:
        raise DomainError(f"variance coefficient D must be positive, got {d!r}")
    if check and v.name != "power_law":
        grid = np.logspace(-2, 3, 26)
        if not v.looks_convex(grid):
            warnings.warn("variance function failed a numerical convexity spot-check", RuntimeWarning)
        if not v.satisfies_bound(grid, rtol=1e-6):
            warnings.warn("variance function exceeds D t^alpha_inf on a sampled point", RuntimeWarning)
    al, be, ga, c = horizon.as_tuple()
    s = al + a_inf
    bracket = (al / a_inf) ** (a_inf / s) + (a_inf / al) ** (al / s)
    beta_t = math.exp((a_inf / s) * math.log(be) - (al / s) * math.log(2.0 * d) + math.log(bracket))
    log_c = (
        math.log(c)
        + 0.5 * math.log(a_inf / (2.0 * s))
        + (ga / s) * (math.log(a_inf / (2.0 * al * be)) - math.log(d))
    )
    return WeibullTailClass(2.0 * al / s, beta_t, 2.0 * ga / s, math.exp(log_c))


def ig_effective_d(d_cov: float, alpha_inf: float) -> float:
    """Leading variance coefficient ``2 d_cov / (a_inf (a_inf - 1))`` of ``int_0^t Z``."""
    return 2.0 * d_cov / (alpha_inf * (alpha_inf - 1.0))


def sup_tail_ig(d_cov: float, alpha_inf: float, horizon: WeibullTailClass) -> WeibullTailClass:
    """Supremum class for an integrated stationary process with ``R(t) ~ d_cov t^(a_inf - 2)``."""
    alpha_inf = _check_alpha_inf(alpha_inf)
    if not d_cov > 0.0:
        raise DomainError(f"d_cov must be positive, got {d_cov!r}")
    return sup_tail_general(VarianceModel.power_law(ig_effective_d(d_cov, alpha_inf), alpha_inf), horizon)


def resolve_pickands(h: float, pickands: PickandsArg, seed: int = 0, **mc_kwargs) -> tuple[float, dict | None]:
    """Return ``(value, provenance)`` for a Pickands constant argument.

    ``"auto"`` runs :func:`supweibull.mc_estimator.estimate_pickands`.
    """
    if pickands is None:
        raise DomainError(f"H={h} < 1/2 needs the Pickands constant: pass a value or 'auto'")
    if isinstance(pickands, str):
        if pickands != "auto":
            raise DomainError(f"pickands must be a positive number or 'auto', got {pickands!r}")
        from .mc_estimator import estimate_pickands

        kwargs = {"t_window": 20.0, "grid_n": 2**13, "n_paths": 4000}
        kwargs.update(mc_kwargs)
        est = estimate_pickands(h, seed=seed, **kwargs)
        return est.estimate, {"pickands": est.to_dict()}
    value = float(pickands)
    if not value > 0.0:
        raise DomainError(f"Pickands constant must be positive, got {value!r}")
    return value, {"pickands": {"h": h, "estimate": value, "source": "pinned"}}


def sup_fbm_unit_interval(h: float, pickands: PickandsArg = None, seed: int = 0) -> WeibullTailClass:
    """Class of ``sup_{[0,1]} B_H``.

    ``H < 1/2`` gives ``(2, 1/2, 1/H - 3, P_H 2^(-(H+1)/(2H)) / (H sqrt(pi)))`` with
    ``P_H`` the Pickands constant; ``H = 1/2`` doubles the normal prefactor;
    ``H > 1/2`` is the normal class itself.
    """
    h = _check_hurst(h)
    if h < 0.5:
        value, meta = resolve_pickands(h, pickands, seed=seed)
        c = value * 2.0 ** (-(h + 1.0) / (2.0 * h)) / (h * math.sqrt(math.pi))
        return WeibullTailClass(2.0, 0.5, 1.0 / h - 3.0, c, meta=meta)
    if h == 0.5:
        return WeibullTailClass(2.0, 0.5, -1.0, 2.0 / math.sqrt(2.0 * math.pi))
    return normal_tail_class()


def _fbm_beta(h: float, al: float, be: float) -> float:
    q = 2.0 * h + al
    return be ** (2.0 * h / q) * (0.5 * (al / h) ** (2.0 * h / q) + (al / h) ** (-al / q))


def _fbm_c2(h: float, horizon: WeibullTailClass) -> float:
    al, be, ga, c = horizon.as_tuple()
    q = al + 2.0 * h
    return c * math.sqrt(h) / math.sqrt(q) * (h / (al * be)) ** (ga / q)


def sup_tail_fbm(h: float, horizon: WeibullTailClass, pickands: PickandsArg = None, seed: int = 0) -> WeibullTailClass:
    """Class of ``sup_{[0,T]} B_H`` for every ``H in (0, 1]``.

    All three regimes share ``alpha~ = 2 alpha/(2H + alpha)`` and
    ``beta_1 = beta^(2H/q) [(1/2)(alpha/H)^(2H/q) + (alpha/H)^(-alpha/q)]``, ``q = 2H + alpha``.

    * ``H > 1/2``: ``gamma~ = 2 gamma/q``, prefactor
      ``C_2 = C sqrt(H/q) (H/(alpha beta))^(gamma/q)``.
    * ``H = 1/2``: same exponent, prefactor ``2 C_2``.
    * ``H < 1/2``: ``gamma~ = (alpha/H - 2 alpha + 2 gamma)/q`` and prefactor
      ``P_H 2^(-1/(2H)) C q^(-1/2) H^((2H + 2 gamma - alpha - 2)/(2q)) (alpha beta)^((1 - 2H - gamma)/q)``.
    """
    h = _check_hurst(h)
    al, be, ga, c = horizon.as_tuple()
    q = 2.0 * h + al
    alpha_t = 2.0 * al / q
    beta_t = _fbm_beta(h, al, be)
    if h > 0.5:
        return WeibullTailClass(alpha_t, beta_t, 2.0 * ga / q, _fbm_c2(h, horizon))
    if h == 0.5:
        return WeibullTailClass(alpha_t, beta_t, 2.0 * ga / q, 2.0 * _fbm_c2(h, horizon))
    value, meta = resolve_pickands(h, pickands, seed=seed)
    gamma_t = (al / h - 2.0 * al + 2.0 * ga) / q
    log_c1 = (
        math.log(value)
        - math.log(2.0) / (2.0 * h)
        + math.log(c)
        - 0.5 * math.log(q)
        + (2.0 * h + 2.0 * ga - al - 2.0) / (2.0 * q) * math.log(h)
        + (1.0 - 2.0 * h - ga) / q * math.log(al * be)
    )
    return WeibullTailClass(alpha_t, beta_t, gamma_t, math.exp(log_c1), meta=meta)


def m_h(h: float) -> float:
    """Log-asymptotic rate of ``sup_{[0,S]} L_H``.

    ``m_H = (1/2)^(1/(2H+1)) [(1/(2H))^(2H/(2H+1)) + (2H)^(1/(2H+1))]``, which is
    the fBm rate ``beta_1`` for a unit-rate exponential horizon.
    """
    h = _check_hurst(h)
    q = 2.0 * h + 1.0
    return 0.5 ** (1.0 / q) * ((1.0 / (2.0 * h)) ** (2.0 * h / q) + (2.0 * h) ** (1.0 / q))


def gamma_tail(s: float, nu: float = 1.0) -> WeibullTailClass:
    """Class of ``Gamma_s ~ G(s/nu, 1)``: ``(1, 1, s/nu - 1, 1/Gamma(s/nu))``."""
    if not (s > 0.0 and nu > 0.0):
        raise DomainError(f"s and nu must be positive, got s={s!r}, nu={nu!r}")
    k = s / nu
    return WeibullTailClass(1.0, 1.0, k - 1.0, math.exp(-special.gammaln(k)))


def flm_sup_tail(h: float, s_horizon: float, nu: float = 1.0, pickands: PickandsArg = None,
                 seed: int = 0) -> FlmTailResult:
    """Tail of ``sup_{[0,S]} L_H`` for ``L_H(t) = B_H(Gamma_t)``.

    Lower bound ``B_H(Gamma_S) = Gamma_S^H N``, upper bound ``sup_{[0, Gamma_S]} B_H``.
    For ``H > 1/2`` they coincide; with ``k = S/nu``::

        (2/(2H+1), m_H, (2k - 2)/(1 + 2H), H^((2k + 2H - 1)/(2 + 4H)) / (Gamma(k) sqrt(1 + 2H)))

    For ``H <= 1/2`` the upper bound is the fBm class over the gamma horizon
    (needs the Pickands constant when ``H < 1/2``).
    """
    h = _check_hurst(h)
    if not s_horizon > 0.0:
        raise DomainError(f"S must be positive, got {s_horizon!r}")
    if not nu > 0.0:
        raise DomainError(f"nu must be positive, got {nu!r}")
    k = s_horizon / nu
    q = 2.0 * h + 1.0
    log_c = (2.0 * k + 2.0 * h - 1.0) / (2.0 * q) * math.log(h) - special.gammaln(k) - 0.5 * math.log(q)
    exact = WeibullTailClass(2.0 / q, m_h(h), (2.0 * k - 2.0) / q, math.exp(log_c))
    extension = nu != 1.0
    if h > 0.5:
        return FlmTailResult("exact", m_h(h), 2.0 / q, tail=exact, extension=extension)
    upper = sup_tail_fbm(h, gamma_tail(s_horizon, nu), pickands=pickands, seed=seed)
    return FlmTailResult("bounds", m_h(h), 2.0 / q, lower=exact, upper=upper, extension=extension)


def brownian_exp_exact(a_rate: float, u: float) -> float:
    """``P(sup_{[0,T]} B > u) = exp(-sqrt(2 A) u)`` for ``T ~ Exp(A)``, exact for ``u >= 0``."""
    if not a_rate > 0.0:
        raise DomainError(f"rate must be positive, got {a_rate!r}")
    if u < 0.0:
        raise DomainError(f"u must be nonnegative, got {u!r}")
    return math.exp(-math.sqrt(2.0 * a_rate) * u)
