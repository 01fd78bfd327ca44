"""Exact-in-law path samplers: fBm, integrated stationary Gaussian, gamma
subordinator, fractional Laplace motion, and the random horizons.

Stationary Gaussian vectors are drawn by circulant embedding; one complex FFT
yields two independent real samples.  Batch helpers (``*_paths``) return
``(m, n)`` arrays and are what the Monte Carlo estimators use; the
``simulate_*`` functions return a single seeded :class:`Path`.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy import linalg, special, stats

from .errors import DomainError, SimulationError
from .tail_algebra import WeibullTailClass

__all__ = [
    "ProcessModel",
    "HorizonModel",
    "Path",
    "task_rng",
    "stationary_gaussian",
    "fgn_autocov",
    "cauchy_autocov",
    "fbm_paths",
    "ig_paths",
    "ig_sup_end",
    "gamma_paths",
    "fbm_at_times",
    "flm_paths",
    "simulate_fbm",
    "simulate_integrated_gaussian",
    "sample_gamma_path",
    "simulate_flm",
    "sample_horizon",
]

EIG_RTOL = 1e-10
HORIZON_TAIL_CUTOFF = 1e-8


def task_rng(master_seed: int, index: int = 0) -> np.random.Generator:
    """Independent generator for task ``index`` of a run seeded with ``master_seed``."""
    if master_seed < 0 or index < 0:
        raise DomainError("seeds and task indices must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(index)]))


def _check_hurst(h: float) -> float:
    h = float(h)
    if not 0.0 < h <= 1.0:
        raise DomainError(f"Hurst index must lie in (0, 1], got {h!r}")
    return h


def _check_grid(n: int, t_max: float) -> None:
    if int(n) != n or n < 2:
        raise DomainError(f"grid needs at least 2 points, got {n!r}")
    if not t_max > 0.0:
        raise DomainError(f"t_max must be positive, got {t_max!r}")


@dataclass(frozen=True)
class ProcessModel:
    """Which process to simulate.

    ``kind`` is ``"fbm"`` (uses ``h``), ``"integrated_gaussian"`` (uses
    ``alpha_inf``) or ``"flm"`` (uses ``h``, ``nu`` and ``t_max = S``).
    ``t_max`` is the deterministic horizon used when no random horizon is given.
    """

    kind: Literal["fbm", "integrated_gaussian", "flm"]
    h: float | None = None
    alpha_inf: float | None = None
    nu: float = 1.0
    t_max: float = 1.0

    def __post_init__(self):
        if self.kind in ("fbm", "flm"):
            _check_hurst(self.h)
        elif self.kind == "integrated_gaussian":
            if self.alpha_inf is None or not 1.0 < self.alpha_inf < 2.0:
                raise DomainError(f"alpha_inf must lie in (1, 2), got {self.alpha_inf!r}")
        else:
            raise DomainError(f"unknown process kind {self.kind!r}")
        if not (self.nu > 0.0 and self.t_max > 0.0):
            raise DomainError("nu and t_max must be positive")

    @classmethod
    def fbm(cls, h: float) -> "ProcessModel":
        return cls("fbm", h=h)

    @classmethod
    def integrated_gaussian(cls, alpha_inf: float) -> "ProcessModel":
        return cls("integrated_gaussian", alpha_inf=alpha_inf)

    @classmethod
    def flm(cls, h: float, nu: float = 1.0, s: float = 1.0) -> "ProcessModel":
        return cls("flm", h=h, nu=nu, t_max=s)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind in ("fbm", "flm"):
            out["h"] = self.h
        if self.kind == "integrated_gaussian":
            out["alpha_inf"] = self.alpha_inf
        if self.kind == "flm":
            out["nu"] = self.nu
            out["s"] = self.t_max
        return out


@dataclass(frozen=True)
class HorizonModel:
    """Exactly samplable positive horizon with a known tail class."""

    family: Literal["pure_weibull", "exponential", "gamma"]
    alpha: float = 1.0
    beta: float = 1.0
    shape: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in ("pure_weibull", "exponential", "gamma"):
            raise DomainError(f"unknown horizon family {self.family!r}")
        for name in ("alpha", "beta", "shape", "scale"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"horizon parameter {name} must be positive")

    @classmethod
    def pure_weibull(cls, alpha: float, beta: float) -> "HorizonModel":
        """``P(T > t) = exp(-beta t^alpha)``."""
        return cls("pure_weibull", alpha=alpha, beta=beta)

    @classmethod
    def exponential(cls, rate: float) -> "HorizonModel":
        return cls("exponential", alpha=1.0, beta=rate)

    @classmethod
    def gamma(cls, shape: float, scale: float = 1.0) -> "HorizonModel":
        return cls("gamma", shape=shape, scale=scale)

    @property
    def tail(self) -> WeibullTailClass:
        if self.family == "gamma":
            k, th = self.shape, self.scale
            c = math.exp(-special.gammaln(k) - (k - 1.0) * math.log(th))
            return WeibullTailClass(1.0, 1.0 / th, k - 1.0, c)
        return WeibullTailClass(self.alpha, self.beta, 0.0, 1.0)

    def isf(self, p: float) -> float:
        """``t`` with ``P(T > t) = p``."""
        if self.family == "gamma":
            return float(stats.gamma.isf(p, self.shape, scale=self.scale))
        return (-math.log(p) / self.beta) ** (1.0 / self.alpha)

    def sf(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "gamma":
            return stats.gamma.sf(t, self.shape, scale=self.scale)
        return np.exp(-self.beta * t**self.alpha)

    def _raw(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.family == "gamma":
            return rng.gamma(self.shape, self.scale, size)
        # inverse transform of exp(-beta t^alpha)
        return (rng.standard_exponential(size) / self.beta) ** (1.0 / self.alpha)

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """``size`` draws; values past the ``1 - 1e-8`` quantile (or nonpositive) are redrawn."""
        cap = self.isf(HORIZON_TAIL_CUTOFF)
        out = self._raw(size, rng)
        bad = (out > cap) | (out <= 0.0)
        while bad.any():
            out[bad] = self._raw(int(bad.sum()), rng)
            bad = (out > cap) | (out <= 0.0)
        return out

    def to_dict(self) -> dict:
        if self.family == "gamma":
            return {"family": "gamma", "shape": self.shape, "scale": self.scale}
        if self.family == "exponential":
            return {"family": "exponential", "rate": self.beta}
        return {"family": "pure_weibull", "alpha": self.alpha, "beta": self.beta}


@dataclass
class Path:
    times: np.ndarray
    values: np.ndarray
    model: ProcessModel | None = None
    extra: dict = field(default_factory=dict)

    def to_csv(self, target) -> None:
        """Write ``t,value`` rows to a path or an open text stream."""
        if hasattr(target, "write"):
            self._write(target)
        else:
            with open(target, "w", newline="") as fh:
                self._write(fh)

    def _write(self, fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for t, v in zip(self.times, self.values):
            writer.writerow([repr(float(t)), repr(float(v))])


# ---------------------------------------------------------------------------
# stationary Gaussian vectors
# ---------------------------------------------------------------------------


def fgn_autocov(h: float) -> Callable[[np.ndarray], np.ndarray]:
    """Autocovariance of unit-step fractional Gaussian noise."""

    def r(k):
        k = np.abs(np.asarray(k, dtype=float))
        return 0.5 * (np.abs(k + 1.0) ** (2 * h) + np.abs(k - 1.0) ** (2 * h) - 2.0 * k ** (2 * h))

    return r


def cauchy_autocov(alpha_inf: float, dt: float) -> Callable[[np.ndarray], np.ndarray]:
    """``R(k dt)`` for the generalized Cauchy covariance ``(1 + t^2)^(-(2 - a_inf)/2)``."""
    expo = -(2.0 - alpha_inf) / 2.0

    def r(k):
        t = np.asarray(k, dtype=float) * dt
        return (1.0 + t * t) ** expo

    return r


def _embedding_eigs(acov: Callable, n: int, pad: int) -> np.ndarray:
    big_n = pad * (n - 1) + 1
    lags = np.arange(big_n)
    row = acov(lags)
    c = np.concatenate([row, row[-2:0:-1]])
    return np.fft.fft(c).real


def _circulant_root(acov: Callable, n: int, max_pad: int = 64) -> np.ndarray | None:
    """``sqrt(lambda / M)`` of the smallest admissible embedding, or ``None``."""
    pad = 1
    while pad <= max_pad:
        lam = _embedding_eigs(acov, n, pad)
        top = lam.max()
        if top > 0.0 and lam.min() >= -EIG_RTOL * top:
            return np.sqrt(np.clip(lam, 0.0, None) / lam.size)
        pad *= 2
    return None


def _dense_root(acov: Callable, n: int) -> np.ndarray:
    cov = linalg.toeplitz(acov(np.arange(n)))
    return _psd_root(cov)


def _psd_root(cov: np.ndarray) -> np.ndarray:
    """Lower factor ``L`` with ``L L^T = cov``; eigen-clipping fallback for near-singular cases."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    lam, vec = np.linalg.eigh(cov)
    top = max(lam.max(), 0.0)
    if top == 0.0:
        return np.zeros_like(cov)
    if lam.min() < -EIG_RTOL * top * max(1, cov.shape[0]):
        raise SimulationError(
            f"covariance is not positive semidefinite (min eigenvalue {lam.min():.3g}, max {top:.3g})"
        )
    return vec * np.sqrt(np.clip(lam, 0.0, None))


def stationary_gaussian(acov: Callable, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` independent centred stationary vectors of length ``n`` with autocovariance ``acov``.

    Circulant embedding (padded up to 64x while the most negative eigenvalue
    exceeds ``1e-10`` of the largest); dense factorization otherwise.
    """
    if n == 1:
        return rng.standard_normal((m, 1)) * math.sqrt(float(acov(np.array([0]))[0]))
    root = _circulant_root(acov, n)
    if root is None:
        factor = _dense_root(acov, n)
        return rng.standard_normal((m, n)) @ factor.T
    big_m = root.size
    out = np.empty((m, n))
    # bound the complex work array to roughly 32 MB
    block = max(1, (1 << 21) // big_m)
    done = 0
    while done < m:
        rows = min(2 * block, m - done)
        k = (rows + 1) // 2
        z = rng.standard_normal((k, big_m)) + 1j * rng.standard_normal((k, big_m))
        y = np.fft.fft(root * z, axis=1)[:, :n]
        out[done:done + rows] = np.concatenate([y.real, y.imag], axis=0)[:rows]
        done += rows
    return out


# ---------------------------------------------------------------------------
# batch path generators
# ---------------------------------------------------------------------------


def fbm_paths(h: float, n: int, m: int, rng: np.random.Generator, t_max: float = 1.0) -> np.ndarray:
    """``m`` fBm paths on ``linspace(0, t_max, n)``, shape ``(m, n)``, first column zero."""
    h = _check_hurst(h)
    _check_grid(n, t_max)
    dt = t_max / (n - 1)
    if h == 0.5:
        inc = rng.standard_normal((m, n - 1))
    else:
        inc = stationary_gaussian(fgn_autocov(h), n - 1, m, rng)
    out = np.zeros((m, n))
    np.cumsum(inc * dt**h, axis=1, out=out[:, 1:])
    return out


def ig_paths(alpha_inf: float, n: int, t_max, rng: np.random.Generator) -> np.ndarray:
    """Integrated generalized-Cauchy paths on ``linspace(0, T_i, n)`` for each ``T_i`` in ``t_max``.

    ``Z`` is simulated at the grid points and integrated by the trapezoidal
    rule.  Paths sharing a horizon share one factorization; rows come out in
    input order.
    """
    t_max = np.atleast_1d(np.asarray(t_max, dtype=float))
    out = np.zeros((t_max.size, n))
    uniq, inverse = np.unique(t_max, return_inverse=True)
    for j, tm in enumerate(uniq):
        _check_grid(n, tm)
        rows = np.flatnonzero(inverse == j)
        dt = tm / (n - 1)
        z = stationary_gaussian(cauchy_autocov(alpha_inf, dt), n, rows.size, rng)
        out[rows, 1:] = np.cumsum(0.5 * (z[:, 1:] + z[:, :-1]) * dt, axis=1)
    return out


def ig_sup_end(alpha_inf: float, n: int, t_max, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Grid supremum and endpoint of integrated generalized-Cauchy paths with varying horizons.

    All paths share one grid of ``n`` points on ``[0, max(t_max)]``; path ``i``
    keeps the grid points below ``T_i`` and adds ``X(T_i)`` by a final partial
    trapezoid step with ``Z(T_i)`` linearly interpolated.  One factorization
    serves the whole batch, so this is the route for random horizons.
    """
    t_max = np.atleast_1d(np.asarray(t_max, dtype=float))
    top = float(t_max.max())
    _check_grid(n, top)
    if np.any(t_max <= 0.0):
        raise DomainError("horizons must be positive")
    dt = top / (n - 1)
    z = stationary_gaussian(cauchy_autocov(alpha_inf, dt), n, t_max.size, rng)
    x = np.zeros_like(z)
    x[:, 1:] = np.cumsum(0.5 * (z[:, 1:] + z[:, :-1]) * dt, axis=1)
    k = np.minimum((t_max / dt).astype(int), n - 2)
    rows = np.arange(t_max.size)
    frac = t_max / dt - k
    z_end = z[rows, k] + frac * (z[rows, k + 1] - z[rows, k])
    end = x[rows, k] + 0.5 * (z[rows, k] + z_end) * frac * dt
    inside = np.arange(n)[None, :] <= k[:, None]
    sup = np.maximum(np.where(inside, x, -np.inf).max(axis=1), end)
    return sup, end


def gamma_paths(s_max: float, nu: float, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Gamma subordinator on ``linspace(0, s_max, n)``; increments ``G(ds/nu, 1)``."""
    _check_grid(n, s_max)
    if not nu > 0.0:
        raise DomainError(f"nu must be positive, got {nu!r}")
    shape = s_max / (n - 1) / nu
    out = np.zeros((m, n))
    np.cumsum(rng.gamma(shape, 1.0, (m, n - 1)), axis=1, out=out[:, 1:])
    return out


def _fbm_cov(h: float, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)[:, None]
    t = np.asarray(t, dtype=float)[None, :]
    return 0.5 * (s ** (2 * h) + t ** (2 * h) - np.abs(t - s) ** (2 * h))


def _dedupe(times: np.ndarray, rtol: float = 1e-12):
    """Distinct positive times and an index map into them (``-1`` marks time zero)."""
    tol = rtol * max(1.0, float(np.max(times)))
    order = np.argsort(times, kind="stable")
    st = times[order]
    starts = np.diff(st, prepend=0.0) > tol
    index = np.empty(times.size, dtype=int)
    index[order] = np.cumsum(starts) - 1
    return st[starts], index


def fbm_at_times(h: float, times, rng: np.random.Generator) -> np.ndarray:
    """Exact fBm values at arbitrary nonnegative times (dense factorization).

    Times closer than ``1e-12 * max(1, max(times))`` share one value; times at
    zero get ``B_H(0) = 0``.
    """
    h = _check_hurst(h)
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return times.copy()
    if np.any(times < 0.0):
        raise DomainError("fBm times must be nonnegative")
    uniq, index = _dedupe(times)
    values = np.zeros(times.size)
    if uniq.size == 0:
        return values
    if h == 0.5:
        b = np.cumsum(rng.standard_normal(uniq.size) * np.sqrt(np.diff(uniq, prepend=0.0)))
    else:
        b = _psd_root(_fbm_cov(h, uniq, uniq)) @ rng.standard_normal(uniq.size)
    mask = index >= 0
    values[mask] = b[index[mask]]
    return values


def flm_paths(h: float, nu: float, s_max: float, n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` fractional Laplace paths ``B_H(Gamma_s)`` on ``linspace(0, s_max, n)``."""
    h = _check_hurst(h)
    g = gamma_paths(s_max, nu, n, m, rng)
    if h == 0.5:
        inc = rng.standard_normal((m, n - 1)) * np.sqrt(np.diff(g, axis=1))
        out = np.zeros((m, n))
        np.cumsum(inc, axis=1, out=out[:, 1:])
        return out
    return np.stack([fbm_at_times(h, row, rng) for row in g])


# ---------------------------------------------------------------------------
# single seeded paths
# ---------------------------------------------------------------------------


def simulate_fbm(h: float, n: int, t_max: float, seed: int) -> Path:
    _check_grid(n, t_max)
    values = fbm_paths(h, n, 1, task_rng(seed), t_max=t_max)[0]
    return Path(np.linspace(0.0, t_max, n), values, ProcessModel.fbm(h))


def simulate_integrated_gaussian(alpha_inf: float, n: int, t_max: float, seed: int) -> Path:
    model = ProcessModel.integrated_gaussian(alpha_inf)
    _check_grid(n, t_max)
    values = ig_paths(alpha_inf, n, t_max, task_rng(seed))[0]
    return Path(np.linspace(0.0, t_max, n), values, model)


def sample_gamma_path(s_max: float, nu: float, n: int, seed: int) -> Path:
    values = gamma_paths(s_max, nu, n, 1, task_rng(seed))[0]
    return Path(np.linspace(0.0, s_max, n), values, None)


def simulate_flm(h: float, nu: float, s_max: float, n: int, seed: int, fbm_grid: int = 0) -> Path:
    """One fLm path; with ``fbm_grid > 0`` the underlying fBm is also sampled
    jointly on ``fbm_grid`` uniform points of ``[0, Gamma_S]`` and returned in
    ``path.extra`` (keys ``gamma``, ``fbm_times``, ``fbm_values``).
    """
    model = ProcessModel.flm(h, nu, s_max)
    rng = task_rng(seed)
    g = gamma_paths(s_max, nu, n, 1, rng)[0]
    times = np.linspace(0.0, s_max, n)
    if fbm_grid <= 0:
        return Path(times, fbm_at_times(h, g, rng), model, {"gamma": g})
    extra_t = np.linspace(0.0, g[-1], fbm_grid)
    joint = fbm_at_times(h, np.concatenate([g, extra_t]), rng)
    return Path(times, joint[:n], model,
                {"gamma": g, "fbm_times": np.concatenate([g, extra_t]), "fbm_values": joint})


def sample_horizon(hm: HorizonModel, seed: int) -> float:
    return float(hm.sample(1, task_rng(seed))[0])
