"""Monte Carlo estimates of supremum and endpoint tails, and of Pickands constants.

Reproducibility contract: paths are generated in fixed-size chunks; chunk
``i`` draws from ``task_rng(seed, i)``.  Chunks may run on any number of
threads and their results are reassembled in chunk order, so every record
is bit-identical for a given seed regardless of ``threads``.
"""
from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import __version__
from .errors import DomainError, InsufficientDataError
from .gaussian_sim import (
    HorizonModel,
    ProcessModel,
    fbm_paths,
    flm_paths,
    ig_paths,
    ig_sup_end,
    task_rng,
)

__all__ = [
    "CHUNK_SIZE",
    "TailEstimate",
    "PickandsEstimate",
    "SlopeDiagnostic",
    "PathSummary",
    "wilson_interval",
    "simulate_extremes",
    "estimate_sup_tail",
    "estimate_endpoint_tail",
    "shared_path_estimates",
    "estimate_pickands",
    "log_tail_slope_check",
    "fit_log_slope",
    "dominance_ratio_from_hits",
    "tail_exponent",
]

CHUNK_SIZE = 1024
Z95 = 1.959963984540054


def wilson_interval(hits: int, n: int, z: float = Z95) -> tuple[float, float]:
    """95% Wilson score interval for ``hits`` successes out of ``n``."""
    if n <= 0:
        raise DomainError("need at least one trial")
    # at 0 or n hits the interval is one-sided with the same coverage
    z1 = 1.6448536269514722
    if hits == 0:
        return 0.0, z1 * z1 / (n + z1 * z1)
    if hits == n:
        return n / (n + z1 * z1), 1.0
    p = hits / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4 * n * n)) / denom
    return min(p, max(0.0, centre - half)), max(p, min(1.0, centre + half))


@dataclass(frozen=True)
class TailEstimate:
    u: float
    p_hat: float
    ci_low: float
    ci_high: float
    n_paths: int
    grid_n: int
    seed: int
    hits: int
    kind: str = "sup"
    below_resolution: bool = False
    params: dict = field(default_factory=dict)
    version: str = __version__

    @classmethod
    def from_hits(cls, u, hits, n_paths, grid_n, seed, kind="sup", params=None) -> "TailEstimate":
        lo, hi = wilson_interval(int(hits), int(n_paths))
        p = int(hits) / int(n_paths)
        return cls(float(u), p, lo, hi, int(n_paths), int(grid_n), int(seed), int(hits),
                   kind, hits == 0, dict(params or {}))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def csv_row(self) -> dict:
        row = {k: v for k, v in self.to_dict().items() if k != "params"}
        row["params"] = json.dumps(self.params, sort_keys=True)
        return row


@dataclass(frozen=True)
class PickandsEstimate:
    h: float
    t_window: float
    estimate: float
    ci_low: float
    ci_high: float
    grid_n: int
    n_paths: int
    seed: int
    method: str = "dieker_yakir"
    heavy_tail: bool = False
    version: str = __version__

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class SlopeDiagnostic:
    """Weighted least-squares fit of ``log p_hat(u)`` against ``u**alpha_tilde``."""

    slope: float
    ci_low: float
    ci_high: float
    intercept: float
    alpha_tilde: float
    u_grid: tuple
    p_hat: tuple
    n_used: int
    n_paths: int
    grid_n: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PathSummary:
    """Per-path extremes from one simulation run, in path order."""

    sup: np.ndarray
    end: np.ndarray
    n_paths: int
    grid_n: int
    seed: int
    params: dict

    def sup_estimate(self, u: float) -> TailEstimate:
        hits = int(np.count_nonzero(self.sup > u))
        return TailEstimate.from_hits(u, hits, self.n_paths, self.grid_n, self.seed, "sup", self.params)

    def endpoint_estimate(self, u: float) -> TailEstimate:
        hits = int(np.count_nonzero(self.end > u))
        return TailEstimate.from_hits(u, hits, self.n_paths, self.grid_n, self.seed, "endpoint", self.params)

    def dominance_ratio(self, u: float) -> tuple[float, float]:
        """``p_sup / p_end`` and its standard error on the shared paths."""
        return dominance_ratio_from_hits(int(np.count_nonzero(self.sup > u)), int(np.count_nonzero(self.end > u)))


def dominance_ratio_from_hits(sup_hits: int, end_hits: int) -> tuple[float, float]:
    """``p_sup / p_end`` and its delta-method standard error from shared-path counts.

    Pathwise ``sup >= end``, so ``a = end_hits`` paths end above ``u`` and
    ``b = sup_hits - end_hits`` cross it but end below.  The ratio is ``1 + b/a``
    and ``Var(b/a) ~ (b/a)^2 (1/a + 1/b)``.
    """
    a, b = int(end_hits), int(sup_hits) - int(end_hits)
    if b < 0:
        raise DomainError("sup_hits must be at least end_hits on shared paths")
    if a == 0:
        raise InsufficientDataError("no endpoint exceedances")
    if b == 0:
        return 1.0, 0.0
    q = b / a
    return 1.0 + q, q * math.sqrt(1.0 / a + 1.0 / b)


def _run_params(model, horizon, grid_n, exact_endpoint) -> dict:
    out = {"model": model.to_dict(), "grid_n": grid_n}
    out["horizon"] = None if horizon is None else horizon.to_dict()
    if exact_endpoint:
        out["exact_endpoint"] = True
    return out


def _chunk(model: ProcessModel, horizon: HorizonModel | None, m: int, grid_n: int,
           rng: np.random.Generator, exact_endpoint: bool):
    if horizon is not None:
        t = horizon.sample(m, rng)
    else:
        t = np.full(m, model.t_max)
    if model.kind == "fbm":
        # self-similarity: B_H on [0, T] equals T^H times B_H on [0, 1] in law
        paths = fbm_paths(model.h, grid_n, m, rng)
        factor = t**model.h
        sup = factor * paths.max(axis=1)
        if exact_endpoint:
            end = factor * rng.standard_normal(m)
        else:
            end = factor * paths[:, -1]
        return sup, end
    if model.kind == "integrated_gaussian":
        if horizon is not None:
            return ig_sup_end(model.alpha_inf, grid_n, t, rng)
        paths = ig_paths(model.alpha_inf, grid_n, t, rng)
    elif model.kind == "flm":
        if horizon is not None:
            raise DomainError("fLm runs use the deterministic horizon model.t_max")
        paths = flm_paths(model.h, model.nu, model.t_max, grid_n, m, rng)
    else:  # pragma: no cover - guarded by ProcessModel
        raise DomainError(model.kind)
    return paths.max(axis=1), paths[:, -1].copy()


def simulate_extremes(model: ProcessModel, horizon: HorizonModel | None, n_paths: int, grid_n: int,
                      seed: int, threads: int = 1, exact_endpoint: bool = False) -> PathSummary:
    """Simulate ``n_paths`` paths and keep each path's grid supremum and endpoint."""
    if n_paths < 1:
        raise DomainError("n_paths must be positive")
    if grid_n < 2:
        raise DomainError("grid_n must be at least 2")
    if exact_endpoint and model.kind != "fbm":
        raise DomainError("exact endpoint sampling is only available for fBm")
    sizes = [min(CHUNK_SIZE, n_paths - start) for start in range(0, n_paths, CHUNK_SIZE)]

    def work(i):
        return _chunk(model, horizon, sizes[i], grid_n, task_rng(seed, i), exact_endpoint)

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(len(sizes))))
    else:
        results = [work(i) for i in range(len(sizes))]
    sup = np.concatenate([r[0] for r in results])
    end = np.concatenate([r[1] for r in results])
    return PathSummary(sup, end, n_paths, grid_n, seed, _run_params(model, horizon, grid_n, exact_endpoint))


def estimate_sup_tail(model, horizon, u, n_paths, grid_n, seed, threads=1) -> TailEstimate:
    """Estimate ``P(sup_{[0,T]} X > u)`` with a Wilson 95% interval."""
    if not u >= 0.0:
        raise DomainError("u must be nonnegative")
    return simulate_extremes(model, horizon, n_paths, grid_n, seed, threads).sup_estimate(u)


def estimate_endpoint_tail(model, horizon, u, n_paths, grid_n, seed, threads=1,
                           exact_endpoint=False) -> TailEstimate:
    """Estimate ``P(X(T) > u)``; ``exact_endpoint`` samples ``T^H N`` directly (fBm only)."""
    if not u >= 0.0:
        raise DomainError("u must be nonnegative")
    run = simulate_extremes(model, horizon, n_paths, grid_n, seed, threads, exact_endpoint)
    return run.endpoint_estimate(u)


def shared_path_estimates(model, horizon, u_grid: Sequence[float], n_paths, grid_n, seed,
                          threads=1) -> list[tuple[TailEstimate, TailEstimate]]:
    """``(sup, endpoint)`` estimates for every ``u`` from one common set of paths."""
    run = simulate_extremes(model, horizon, n_paths, grid_n, seed, threads)
    return [(run.sup_estimate(u), run.endpoint_estimate(u)) for u in u_grid]


# ---------------------------------------------------------------------------
# Pickands constants
# ---------------------------------------------------------------------------


def _pickands_chunk_dy(h, t_window, n_side, m, rng):
    n = 2 * n_side + 1
    dt = t_window / n_side
    paths = fbm_paths(h, n, m, rng, t_max=2.0 * t_window)
    # two-sided fBm centred at the middle grid point
    b = paths - paths[:, [n_side]]
    t = np.linspace(-t_window, t_window, n)
    w = math.sqrt(2.0) * b - np.abs(t) ** (2.0 * h)
    top = w.max(axis=1, keepdims=True)
    return 1.0 / (dt * np.exp(w - top).sum(axis=1))


def _pickands_chunk_ratio(h, t_window, grid_n, m, rng):
    paths = fbm_paths(h, grid_n, m, rng, t_max=t_window)
    t = np.linspace(0.0, t_window, grid_n)
    w = math.sqrt(2.0) * paths - t ** (2.0 * h)
    return np.exp(w.max(axis=1)) / t_window


def estimate_pickands(h: float, t_window: float = 10.0, grid_n: int = 4096, n_paths: int = 10000,
                      seed: int = 0, method: str = "dieker_yakir", threads: int = 1) -> PickandsEstimate:
    """Monte Carlo estimate of the Pickands constant ``H_H``.

    ``method="dieker_yakir"`` averages ``sup e^W / int e^W`` for
    ``W(t) = sqrt(2) B_H(t) - |t|^(2H)`` on the two-sided grid over
    ``[-t_window, t_window]`` (``grid_n`` intervals).  This has bounded
    variance and no ``1/T`` bias.

    ``method="ratio"`` averages ``exp(max_{[0,T]} W) / T`` on ``grid_n`` points;
    its bias is of order ``1/T`` and its variance grows like ``e^(2T)`` for
    ``H = 1/2``, so it is mainly useful for illustration.

    The interval is ``mean +- 1.96 * sd / sqrt(n)``.  ``heavy_tail`` is set
    (and a warning issued) when one sample exceeds 10% of the sum.
    """
    if not 0.0 < h <= 1.0:
        raise DomainError(f"Hurst index must lie in (0, 1], got {h!r}")
    if not t_window > 0.0:
        raise DomainError("t_window must be positive")
    if n_paths < 2:
        raise DomainError("n_paths must be at least 2")
    if method == "dieker_yakir":
        n_side = max(1, grid_n // 2)

        def work(i, m):
            return _pickands_chunk_dy(h, t_window, n_side, m, task_rng(seed, i))
    elif method == "ratio":
        def work(i, m):
            return _pickands_chunk_ratio(h, t_window, grid_n, m, task_rng(seed, i))
    else:
        raise DomainError(f"unknown Pickands method {method!r}")
    chunk = max(1, min(CHUNK_SIZE, (1 << 22) // max(grid_n, 1)))
    sizes = [min(chunk, n_paths - start) for start in range(0, n_paths, chunk)]
    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(sizes)), sizes))
    else:
        parts = [work(i, m) for i, m in enumerate(sizes)]
    x = np.concatenate(parts)
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    heavy = bool(x.max() > 0.1 * x.sum())
    if heavy:
        warnings.warn("Pickands estimate dominated by a single path; treat the interval with care",
                      RuntimeWarning)
    return PickandsEstimate(float(h), float(t_window), mean, max(mean - Z95 * se, 0.0), mean + Z95 * se,
                            int(grid_n), int(n_paths), int(seed), method, heavy)


# ---------------------------------------------------------------------------
# log-scale regression
# ---------------------------------------------------------------------------


def tail_exponent(model: ProcessModel, horizon: HorizonModel | None) -> float:
    """Weibull index of ``sup X`` for the model and horizon (no Pickands constant needed)."""
    if model.kind == "flm":
        return 2.0 / (2.0 * model.h + 1.0)
    if horizon is None:
        return 2.0
    a = horizon.tail.alpha
    if model.kind == "fbm":
        return 2.0 * a / (2.0 * model.h + a)
    return 2.0 * a / (a + model.alpha_inf)


def fit_log_slope(u_grid, p_hat, n_paths: int, alpha_tilde: float) -> tuple[float, float, float, int]:
    """Weighted fit of ``log p_hat`` on ``u**alpha_tilde``: ``(slope, se, intercept, n_used)``.

    Weights come from the binomial delta-method variance ``(1 - p)/(n p)``
    of ``log p_hat``; zero-hit points are dropped.
    """
    u_grid = np.asarray(u_grid, dtype=float)
    p = np.asarray(p_hat, dtype=float)
    keep = p > 0.0
    if keep.sum() < 2:
        raise InsufficientDataError("fewer than two thresholds with nonzero hits")
    x = u_grid[keep] ** alpha_tilde
    y = np.log(p[keep])
    sd = np.maximum(np.sqrt((1.0 - p[keep]) / (n_paths * p[keep])), 1e-12)
    if keep.sum() == 2:
        slope = (y[1] - y[0]) / (x[1] - x[0])
        return float(slope), math.hypot(sd[0], sd[1]) / (x[1] - x[0]), float(y[0] - slope * x[0]), 2
    coef, cov = np.polyfit(x, y, 1, w=1.0 / sd, cov="unscaled")
    return float(coef[0]), float(math.sqrt(cov[0, 0])), float(coef[1]), int(keep.sum())


def log_tail_slope_check(model, horizon, u_grid, n_paths, grid_n, seed, alpha_tilde=None,
                         threads=1, run: PathSummary | None = None) -> SlopeDiagnostic:
    """Regress ``log p_hat(u)`` on ``u**alpha_tilde``; the slope estimates ``-beta``.

    See :func:`fit_log_slope` for the weighting.
    """
    u_grid = np.asarray(u_grid, dtype=float)
    if u_grid.size < 3 or np.any(np.diff(u_grid) <= 0.0):
        raise DomainError("u_grid must be increasing with at least 3 points")
    if alpha_tilde is None:
        alpha_tilde = tail_exponent(model, horizon)
    if run is None:
        run = simulate_extremes(model, horizon, n_paths, grid_n, seed, threads)
    p = np.array([run.sup_estimate(u).p_hat for u in u_grid])
    slope, se, intercept, n_used = fit_log_slope(u_grid, p, run.n_paths, alpha_tilde)
    return SlopeDiagnostic(float(slope), float(slope - Z95 * se), float(slope + Z95 * se), float(intercept),
                           float(alpha_tilde), tuple(float(u) for u in u_grid), tuple(float(v) for v in p),
                           n_used, run.n_paths, run.grid_n, run.seed)
