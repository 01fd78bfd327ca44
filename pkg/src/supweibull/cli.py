"""``supweibull`` command line: closed forms, the Laplace oracle, Monte Carlo comparisons.

Exit codes: 0 success, 1 tolerance failure, 2 usage error, 3 domain error,
4 numerical failure (quadrature, factorization, too few hits).

Every record carries ``command``, ``version``, ``seed``, ``grid_n``, the full
``params`` and a ``result`` object.  JSON output is one object per line; CSV
output flattens ``result`` into ``result.<key>`` columns and stores ``params``
as a JSON string.  With ``--out`` unset, records go to stdout unless
``SUPWEIBULL_OUT_DIR`` is set, in which case they are written to
``$SUPWEIBULL_OUT_DIR/<command>-seed<seed>.<format>``.
"""
from __future__ import annotations

import csv
import functools
import io
import json
import math
import os
import sys

import click

from . import __version__
from .closed_forms import brownian_exp_exact, flm_sup_tail, sup_fbm_unit_interval, sup_tail_fbm, sup_tail_ig
from .errors import ConvergenceError, DomainError, InsufficientDataError, SimulationError
from .gaussian_sim import HorizonModel, ProcessModel, simulate_fbm, simulate_flm, simulate_integrated_gaussian
from .laplace import LaplaceIntegralParams, l1fed_closed_form, l1fed_log_integral_oracle
from .mc_estimator import dominance_ratio_from_hits, estimate_pickands, simulate_extremes
from .tail_algebra import WeibullTailClass, scale

OUT_DIR_ENV = "SUPWEIBULL_OUT_DIR"

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 1, 2, 3, 4

RECORD_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "version", "seed", "grid_n", "params", "result"],
    "properties": {
        "command": {"enum": ["tail-params", "laplace-check", "compare", "pickands", "simulate"]},
        "version": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "grid_n": {"type": ["integer", "null"], "minimum": 2},
        "params": {"type": "object"},
        "result": {"type": "object"},
    },
    "additionalProperties": False,
}


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------


def _record(command, seed, grid_n, params, result) -> dict:
    return {"command": command, "version": __version__, "seed": int(seed),
            "grid_n": None if grid_n is None else int(grid_n), "params": params, "result": result}


def _flatten(prefix: str, value, out: dict) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}", v, out)
    else:
        out[prefix] = value


def _csv_text(records: list[dict]) -> str:
    rows = []
    for rec in records:
        row = {k: rec[k] for k in ("command", "version", "seed", "grid_n")}
        row["params"] = json.dumps(rec["params"], sort_keys=True)
        _flatten("result", rec["result"], row)
        rows.append(row)
    header = list(dict.fromkeys(k for row in rows for k in row))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _emit(records: list[dict], fmt: str, out_path: str | None) -> None:
    if fmt == "json":
        text = "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)
    else:
        text = _csv_text(records)
    if out_path is None and os.environ.get(OUT_DIR_ENV):
        first = records[0]
        out_path = os.path.join(os.environ[OUT_DIR_ENV], f"{first['command']}-seed{first['seed']}.{fmt}")
    if out_path is None:
        click.echo(text, nl=False)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _guard(fn):
    """Translate library errors into the exit-code contract."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DomainError as exc:
            click.echo(f"domain error: {exc}", err=True)
            sys.exit(EXIT_DOMAIN)
        except (ConvergenceError, SimulationError, InsufficientDataError, FloatingPointError) as exc:
            click.echo(f"numerical error: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)

    return wrapper


def _parse_grid(ctx, param, value):
    if value is None:
        return None
    try:
        grid = [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected comma-separated numbers, e.g. 1,2,3")
    if not grid or any(not math.isfinite(u) or u <= 0.0 for u in grid):
        raise click.BadParameter("values must be positive and finite")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise click.BadParameter("values must be strictly increasing")
    return grid


def _parse_pickands(ctx, param, value):
    if value is None or value == "auto":
        return value
    try:
        return float(value)
    except ValueError:
        raise click.BadParameter("expected a positive number or 'auto'")


def output_options(fn):
    fn = click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
                      help="Write records to this file instead of stdout.")(fn)
    fn = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json",
                      show_default=True)(fn)
    return fn


def model_options(fn):
    opts = [
        click.option("--model", type=click.Choice(["fbm", "ig", "flm"]), required=True,
                     help="fBm, integrated generalized-Cauchy process, or fractional Laplace motion."),
        click.option("--h", type=float, default=None, help="Hurst index (fbm, flm)."),
        click.option("--alpha-inf", type=float, default=None, help="Variance index in (1, 2) (ig)."),
        click.option("--d-cov", type=float, default=1.0, show_default=True,
                     help="Covariance tail coefficient for ig tail classes."),
        click.option("--s", "s_horizon", type=float, default=1.0, show_default=True, help="Time horizon S (flm)."),
        click.option("--nu", type=float, default=1.0, show_default=True, help="Gamma subordinator scale (flm)."),
        click.option("--horizon", type=click.Choice(["exp", "weibull", "gamma", "fixed"]), default="exp",
                     show_default=True, help="Law of the random horizon T (ignored for flm)."),
        click.option("--rate", type=float, default=1.0, show_default=True, help="Exponential rate."),
        click.option("--alpha", type=float, default=1.0, show_default=True, help="Weibull index of T."),
        click.option("--beta", type=float, default=1.0, show_default=True, help="Weibull rate of T."),
        click.option("--shape", type=float, default=1.0, show_default=True, help="Gamma shape of T."),
        click.option("--scale", "scale_", type=float, default=1.0, show_default=True, help="Gamma scale of T."),
        click.option("--t-max", type=float, default=1.0, show_default=True, help="Deterministic horizon (fixed)."),
        click.option("--pickands", callback=_parse_pickands, default=None,
                     help="Pickands constant for H < 1/2: a number or 'auto' (Monte Carlo)."),
        click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _model_params(kw: dict) -> dict:
    keys = {"fbm": ["h"], "ig": ["alpha_inf", "d_cov"], "flm": ["h", "s_horizon", "nu"]}[kw["model"]]
    out = {"model": kw["model"]}
    for k in keys:
        if kw[k] is None:
            raise click.UsageError(f"--{k.replace('_', '-')} is required for --model {kw['model']}")
        out[k] = kw[k]
    if kw["model"] != "flm":
        out["horizon"] = kw["horizon"]
        out.update({"exp": {"rate": kw["rate"]}, "weibull": {"alpha": kw["alpha"], "beta": kw["beta"]},
                    "gamma": {"shape": kw["shape"], "scale": kw["scale_"]},
                    "fixed": {"t_max": kw["t_max"]}}[kw["horizon"]])
    if kw.get("pickands") is not None:
        out["pickands"] = kw["pickands"]
    return out


def _process(kw: dict) -> ProcessModel:
    if kw["model"] == "fbm":
        return ProcessModel("fbm", h=kw["h"], t_max=kw["t_max"])
    if kw["model"] == "ig":
        return ProcessModel("integrated_gaussian", alpha_inf=kw["alpha_inf"], t_max=kw["t_max"])
    return ProcessModel.flm(kw["h"], kw["nu"], kw["s_horizon"])


def _horizon(kw: dict) -> HorizonModel | None:
    if kw["model"] == "flm" or kw["horizon"] == "fixed":
        return None
    if kw["horizon"] == "exp":
        return HorizonModel.exponential(kw["rate"])
    if kw["horizon"] == "weibull":
        return HorizonModel.pure_weibull(kw["alpha"], kw["beta"])
    return HorizonModel.gamma(kw["shape"], kw["scale_"])


def _sup_class(kw: dict, horizon: HorizonModel | None):
    """Closed-form description of ``sup X`` for the flags in ``kw``."""
    if kw["model"] == "flm":
        return flm_sup_tail(kw["h"], kw["s_horizon"], kw["nu"], pickands=kw["pickands"], seed=kw["seed"])
    if kw["model"] == "fbm":
        if horizon is None:
            if not kw["t_max"] > 0.0:
                raise DomainError("t_max must be positive")
            unit = sup_fbm_unit_interval(kw["h"], kw["pickands"], seed=kw["seed"])
            return WeibullTailClass(*scale(unit, kw["t_max"] ** kw["h"]).as_tuple(), meta=unit.meta)
        return sup_tail_fbm(kw["h"], horizon.tail, pickands=kw["pickands"], seed=kw["seed"])
    if horizon is None:
        raise DomainError("the ig tail class needs a random horizon")
    return sup_tail_ig(kw["d_cov"], kw["alpha_inf"], horizon.tail)


def _class_result(obj) -> dict:
    if isinstance(obj, WeibullTailClass):
        out = {"regime": "exact", "tail": obj.to_dict()}
        if obj.meta:
            out.update(obj.meta)
        return out
    return obj.to_dict()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="supweibull")
def main():
    """Weibullian tails of Gaussian suprema over random horizons."""


@main.command("tail-params")
@model_options
@output_options
@_guard
def tail_params(fmt, out_path, **kw):
    """Print the closed-form tail class (alpha, beta, gamma, C) of sup X."""
    params = _model_params(kw)
    horizon = _horizon(kw)
    result = _class_result(_sup_class(kw, horizon))
    _emit([_record("tail-params", kw["seed"], None, params, result)], fmt, out_path)


@main.command("laplace-check")
@click.option("--alpha1", type=float, required=True)
@click.option("--beta1", type=float, required=True)
@click.option("--alpha2", type=float, required=True)
@click.option("--beta2", type=float, required=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--u-grid", callback=_parse_grid, required=True, help="Comma-separated increasing thresholds.")
@click.option("--rel-tol", type=float, default=1e-8, show_default=True, help="Quadrature relative tolerance.")
@click.option("--limit", type=click.IntRange(min=1), default=200, show_default=True,
              help="Quadrature subdivision budget per piece.")
@click.option("--tol", type=float, default=0.05, show_default=True, help="Allowed |ratio - 1| at the last u.")
@output_options
@_guard
def laplace_check(alpha1, beta1, alpha2, beta2, gamma, u_grid, rel_tol, limit, tol, fmt, out_path):
    """Quadrature against the saddle-point closed form over a threshold grid."""
    p = LaplaceIntegralParams(alpha1, beta1, alpha2, beta2, gamma)
    asym = l1fed_closed_form(p)
    params = {"alpha1": alpha1, "beta1": beta1, "alpha2": alpha2, "beta2": beta2, "gamma": gamma,
              "u_grid": u_grid, "rel_tol": rel_tol, "limit": limit, "tol": tol}
    records = []
    ratio = float("nan")
    for u in u_grid:
        log_oracle = l1fed_log_integral_oracle(p, u, rel_tol=rel_tol, limit=limit)
        log_closed = asym.log_value(u)
        ratio = math.exp(log_oracle - log_closed)
        records.append(_record("laplace-check", 0, None, params, {
            "u": u, "log_oracle": log_oracle, "log_closed_form": log_closed,
            "oracle": math.exp(log_oracle), "closed_form": math.exp(log_closed), "ratio": ratio,
            "exponent": asym.beta3 * u**asym.alpha3,
        }))
    passed = abs(ratio - 1.0) <= tol
    records[-1]["result"]["pass"] = passed
    _emit(records, fmt, out_path)
    if not passed:
        click.echo(f"final ratio {ratio:.6g} outside 1 +- {tol}", err=True)
        sys.exit(EXIT_TOLERANCE)


@main.command("compare")
@model_options
@click.option("--u-grid", callback=_parse_grid, required=True, help="Comma-separated increasing thresholds.")
@click.option("--n-paths", type=click.IntRange(min=1), default=100_000, show_default=True)
@click.option("--grid-n", type=click.IntRange(min=2), default=4096, show_default=True)
@click.option("--coarse-grid", type=click.IntRange(min=2), default=None,
              help="Also report p_sup from an independent run on this coarser grid.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
@output_options
@_guard
def compare(u_grid, n_paths, grid_n, coarse_grid, threads, fmt, out_path, **kw):
    """Monte Carlo sup and endpoint tails against the closed-form asymptotics."""
    params = _model_params(kw)
    params.update({"u_grid": u_grid, "n_paths": n_paths, "coarse_grid": coarse_grid})
    model, horizon = _process(kw), _horizon(kw)
    try:
        closed = _sup_class(kw, horizon)
    except DomainError as exc:
        if kw["pickands"] is not None or "Pickands" not in str(exc):
            raise
        closed = None
    run = simulate_extremes(model, horizon, n_paths, grid_n, kw["seed"], threads)
    coarse = None
    if coarse_grid is not None:
        coarse = simulate_extremes(model, horizon, n_paths, coarse_grid, kw["seed"], threads)
    exact = None
    if kw["model"] == "fbm" and kw["h"] == 0.5 and horizon is not None and horizon.family == "exponential":
        exact = horizon.beta
    records = []
    for u in u_grid:
        sup, end = run.sup_estimate(u), run.endpoint_estimate(u)
        row = {"u": u, "p_sup": sup.p_hat, "sup_ci_low": sup.ci_low, "sup_ci_high": sup.ci_high,
               "sup_hits": sup.hits, "p_end": end.p_hat, "end_ci_low": end.ci_low, "end_ci_high": end.ci_high,
               "end_hits": end.hits,
               "ratio_sup_end": None, "ratio_sup_end_se": None}
        if end.hits > 0:
            row["ratio_sup_end"], row["ratio_sup_end_se"] = dominance_ratio_from_hits(sup.hits, end.hits)
        if isinstance(closed, WeibullTailClass):
            row["asympt"] = closed.tail_value(u)
        elif closed is not None and closed.regime == "exact":
            row["asympt"] = closed.tail.tail_value(u)
        elif closed is not None:
            row["asympt"] = None
            row["lower"] = closed.lower.tail_value(u)
            row["upper"] = closed.upper.tail_value(u)
        else:
            row["asympt"] = None
        row["ratio_sup_asympt"] = sup.p_hat / row["asympt"] if row["asympt"] else None
        if exact is not None:
            row["exact"] = brownian_exp_exact(exact, u)
        if coarse is not None:
            row["p_sup_coarse"] = coarse.sup_estimate(u).p_hat
        records.append(_record("compare", kw["seed"], grid_n, params, row))
    _emit(records, fmt, out_path)


@main.command("pickands")
@click.option("--h", type=float, required=True, help="Hurst index in (0, 1].")
@click.option("--t-window", type=float, default=10.0, show_default=True)
@click.option("--grid-n", type=click.IntRange(min=2), default=4096, show_default=True)
@click.option("--n-paths", type=click.IntRange(min=2), default=10_000, show_default=True)
@click.option("--method", type=click.Choice(["dieker_yakir", "ratio"]), default="dieker_yakir", show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True)
@output_options
@_guard
def pickands(h, t_window, grid_n, n_paths, method, seed, threads, fmt, out_path):
    """Monte Carlo estimate of the Pickands constant."""
    est = estimate_pickands(h, t_window=t_window, grid_n=grid_n, n_paths=n_paths, seed=seed,
                            method=method, threads=threads)
    params = {"h": h, "t_window": t_window, "n_paths": n_paths, "method": method}
    result = {k: v for k, v in est.to_dict().items() if k in ("estimate", "ci_low", "ci_high", "heavy_tail")}
    _emit([_record("pickands", seed, grid_n, params, result)], fmt, out_path)


@main.command("simulate")
@click.option("--model", type=click.Choice(["fbm", "ig", "flm"]), required=True)
@click.option("--h", type=float, default=None)
@click.option("--alpha-inf", type=float, default=None)
@click.option("--nu", type=float, default=1.0, show_default=True)
@click.option("--t-max", type=float, default=1.0, show_default=True, help="Horizon (S for flm).")
@click.option("--grid-n", type=click.IntRange(min=2), default=4096, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@_guard
def simulate(model, h, alpha_inf, nu, t_max, grid_n, seed, out_path):
    """Write one sample path as plot-ready ``t,value`` CSV."""
    if model in ("fbm", "flm") and h is None:
        raise click.UsageError(f"--h is required for --model {model}")
    if model == "ig" and alpha_inf is None:
        raise click.UsageError("--alpha-inf is required for --model ig")
    if model == "fbm":
        path = simulate_fbm(h, grid_n, t_max, seed)
    elif model == "ig":
        path = simulate_integrated_gaussian(alpha_inf, grid_n, t_max, seed)
    else:
        path = simulate_flm(h, nu, t_max, grid_n, seed)
    if out_path is None:
        path.to_csv(sys.stdout)
    else:
        path.to_csv(out_path)


if __name__ == "__main__":  # pragma: no cover
    main()
