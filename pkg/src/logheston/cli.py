"""Command-line pipeline: ingest, diagnose, fit, hill, simulate, report.

Stages communicate through files in the output directory, so each one can
be re-run on its own. Exit codes: 0 success, 1 input or usage error,
2 precondition refusal, 3 non-convergence.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
import warnings
from pathlib import Path

import click
import numpy as np

from . import dataio, estimation, report, simulate, stats, tails, vargamma
from .config import SERIES, RunConfig, load_config
from .errors import ConvergenceError, InputError, PreconditionError

SCHEMA_VERSION = "1.0"
PLOT_LAGS = 20


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path: Path, obj) -> None:
    text = json.dumps(_clean(obj), indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")


def read_json(path: Path, stage: str) -> dict:
    if not path.is_file():
        raise InputError(f"{path.name} not found; run the '{stage}' stage first")
    return json.loads(path.read_text(encoding="utf-8"))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _out_dir(cfg: RunConfig) -> Path:
    out = cfg.resolve(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_panel(out: Path) -> dataio.AlignedPanel:
    path = out / "panel.csv"
    if not path.is_file():
        raise InputError("panel.csv not found; run the 'ingest' stage first")
    return dataio.read_panel_csv(path)


def _trim(panel: dataio.AlignedPanel, cfg: RunConfig) -> dataio.AlignedPanel:
    lo, hi = panel.vix.start_index, panel.vix.end_index
    if cfg.start is not None:
        lo = max(lo, dataio.month_index(dataio.parse_month(cfg.start)))
    if cfg.end is not None:
        hi = min(hi, dataio.month_index(dataio.parse_month(cfg.end)))
    if hi < lo:
        raise InputError("sample window does not overlap the data")
    first, last = dataio.index_month(lo), dataio.index_month(hi)
    return dataio.AlignedPanel(panel.vix.between(first, last),
                               {k: s.between(first, last) for k, s in panel.returns.items()})


# -- stages ---------------------------------------------------------------


def run_ingest(cfg: RunConfig) -> dataio.AlignedPanel:
    out = _out_dir(cfg)
    paths = {"vxo": cfg.resolve(cfg.vxo), "vix": cfg.resolve(cfg.vix)}
    vxo = dataio.monthly_average(dataio.load_csv(paths["vxo"], "daily", name="vxo"))
    vix = dataio.monthly_average(dataio.load_csv(paths["vix"], "daily", name="vix"))
    spliced = dataio.splice_vix(vxo, vix, cfg.switch)
    returns = {}
    for name in SERIES:
        if name not in cfg.returns:
            raise InputError(f"config lacks a path for return series {name!r}")
        paths[name] = cfg.resolve(cfg.returns[name])
        returns[name] = dataio.load_csv(paths[name], "monthly", dataio.PERCENT_RETURN, name)
    panel = _trim(dataio.align(spliced, returns), cfg)
    dataio.write_panel_csv(panel, out / "panel.csv")
    write_json(out / "provenance.json", {
        "schema_version": SCHEMA_VERSION,
        "sources": {k: {"path": str(p), "sha256": _sha256(p)} for k, p in paths.items()},
        "switch_month": dataio.format_month(cfg.switch),
        "start": dataio.format_month(panel.start),
        "end": dataio.format_month(panel.vix.end),
        "T": len(panel),
        "series": list(panel.returns),
    })
    return panel


def _acf_table(x: np.ndarray, lags: int) -> dict:
    lags = min(lags, len(x) - 3)
    return {
        "lag": np.arange(1, lags + 1),
        "acf": stats.acf(x, lags),
        "abs_acf": stats.acf(np.abs(x), lags),
        "band": np.full(lags, 2.0 / math.sqrt(len(x))),
    }


def run_diagnose(cfg: RunConfig) -> dict:
    out = _out_dir(cfg)
    panel = _load_panel(out)
    v = panel.vix.values
    result = {}
    for name, q in panel.returns.items():
        entry = {}
        for variant, x in (("raw", q.values), ("normalized", q.values / v)):
            entry[variant] = stats.diagnostics(x, cfg.max_lag).to_dict()
            qq = stats.qq_points(x)
            dataio.write_column_csv(out / f"qq_{name}_{variant}.csv",
                                    {"normal_quantile": qq[:, 0], "sample_quantile": qq[:, 1]})
            dataio.write_column_csv(out / f"acf_{name}_{variant}.csv", _acf_table(x, PLOT_LAGS))
        result[name] = entry
    doc = {"schema_version": SCHEMA_VERSION, "T": len(panel), "max_lag": cfg.max_lag, "series": result}
    write_json(out / "diagnostics.json", doc)
    return doc


def _moments(x: np.ndarray, max_lag: int) -> dict:
    s, k = stats.skewness_kurtosis(x)
    jb, p = stats.jarque_bera(x)
    return {"mean": float(x.mean()), "std": float(x.std()), "skewness": s, "excess_kurtosis": k,
            "acf_norm": stats.acf_norm(x, max_lag), "abs_acf_norm": stats.acf_norm(x, max_lag, absolute=True),
            "jb_stat": jb, "jb_pvalue": p}


def run_fit(cfg: RunConfig) -> dict:
    out = _out_dir(cfg)
    panel = _load_panel(out)
    v = panel.vix.values
    heston = estimation.fit_heston_ar1(v)
    log_fit = estimation.fit_log_heston(v)
    w = log_fit.residuals
    heston_doc = heston.to_dict()
    heston_doc["abs_acf"] = stats.acf(np.abs(heston.residuals), cfg.max_lag)
    heston_doc["white_noise_band"] = 2.0 / math.sqrt(heston.nobs)

    months = panel.vix.months()
    returns_fits = {}
    z_columns = {"month": [dataio.format_month(m) for m in months]}
    for name, q in panel.returns.items():
        fit = estimation.fit_returns_regression(q.values, v)
        mean, std = estimation.normalized_moments(q.values, v)
        z = fit.residuals
        zs, zk = stats.skewness_kurtosis(z)
        doc = fit.to_dict()
        doc.update(
            corr_with_w=estimation.residual_cross_correlation(fit, log_fit),
            normalized_mean=mean,
            normalized_std=std,
            normalized_corr_with_w=estimation.residual_cross_correlation(q.values / v, w),
            z_skewness=zs,
            z_excess_kurtosis=zk,
            z_acf_norm=stats.acf_norm(z, cfg.max_lag),
            z_abs_acf_norm=stats.acf_norm(z, cfg.max_lag, absolute=True),
        )
        returns_fits[name] = doc
        z_columns[name] = z

    mom = vargamma.vg_fit_mom(w)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mle = vargamma.vg_fit_mle(w, init=mom, maxiter=cfg.vg_maxiter)
    adf = estimation.adf_test(np.log(v), cfg.adf_lags)

    dataio.write_column_csv(out / "w_residuals.csv",
                            {"month": [dataio.format_month(m) for m in months[1:]], "w": w})
    dataio.write_column_csv(out / "z_residuals.csv", z_columns)
    qq = stats.qq_points(w, vargamma.vg_ppf(mle.params, stats.plotting_positions(len(w))))
    pp = stats.pp_points(w, lambda x: vargamma.vg_cdf(mle.params, x))
    dataio.write_column_csv(out / "w_vg_qq.csv", {"vg_quantile": qq[:, 0], "sample_quantile": qq[:, 1]})
    dataio.write_column_csv(out / "w_vg_pp.csv", {"vg_cdf": pp[:, 0], "empirical": pp[:, 1]})

    doc = {
        "schema_version": SCHEMA_VERSION,
        "T": len(panel),
        "heston_fit": heston_doc,
        "log_heston_fit": log_fit.to_dict(),
        "returns_fits": returns_fits,
        "w_moments": _moments(w, cfg.max_lag),
        "vg_fit": {
            "params": mle.params.to_dict(),
            "loglik": mle.loglik,
            "converged": mle.converged,
            "iterations": mle.iterations,
            "mom_params": mom.to_dict(),
            "mgf_domain": vargamma.vg_mgf_domain(mle.params),
        },
        "adf": adf.to_dict(),
    }
    write_json(out / "fits.json", doc)
    if not mle.converged:
        raise ConvergenceError(f"variance-gamma MLE did not converge in {cfg.vg_maxiter} iterations")
    return doc


def run_hill(cfg: RunConfig, r: int | None = None) -> dict:
    out = _out_dir(cfg)
    path = out / "w_residuals.csv"
    if not path.is_file():
        raise InputError("w_residuals.csv not found; run the 'fit' stage first")
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")
    w = np.asarray(data["w"], dtype=float)
    r = cfg.hill_r if r is None else r
    gl, gr = tails.hill_estimates(w, r)
    r_max = min(cfg.hill_r_max, len(w) - 2)
    curve = tails.hill_curve(w, min(cfg.hill_r_min, r_max), r_max)
    curve.to_csv(out / "hill_curve.csv")
    try:
        interval = tails.mgf_interval_from_hill(gl, gr)
    except PreconditionError:
        interval = None
    doc = {"schema_version": SCHEMA_VERSION, "r": r, "n": len(w), "gamma_left": gl,
           "gamma_right": gr, "mgf_interval": interval}
    write_json(out / "hill.json", doc)
    return doc


def model_from_fits(fits: dict, series: str) -> simulate.SvModelParams:
    lh = fits["log_heston_fit"]
    rf = fits["returns_fits"][series]
    vg = vargamma.VgParams.from_dict(fits["vg_fit"]["params"])
    return simulate.SvModelParams(lh["alpha"], lh["beta"], rf["theta"], rf["mu"], rf["sigma"], vg)


def run_simulate(cfg: RunConfig, u: float | None = None) -> dict:
    out = _out_dir(cfg)
    sim = cfg.simulation
    u = sim.moment_u if u is None else u
    seeds = np.random.SeedSequence(cfg.seed).spawn(5)
    calibration = None
    if cfg.model is not None:
        model = simulate.SvModelParams.from_dict(cfg.model)
    else:
        fits = read_json(out / "fits.json", "fit")
        model = model_from_fits(fits, sim.series)
        if sim.coupling == "gaussian-copula":
            target = sim.target_corr
            if target is None:
                target = fits["returns_fits"][sim.series]["corr_with_w"]
            rho = simulate.calibrate_copula(model, target, seed=seeds[0])
            model = dataclasses.replace(model, copula_rho=rho)
            calibration = {"target_corr": target, "copula_rho": rho}

    moment = simulate.stationary_moment_mc(model, u, n=sim.moment_n, reps=sim.moment_reps, seed=seeds[1])
    path = simulate.simulate_path(model, sim.path_sample, seeds[2])
    path.to_csv(out / "sim_path.csv")
    clt = simulate.lln_clt_experiment(model, sim.clt_T, sim.clt_reps, seed=seeds[3])
    tail = simulate.tail_index_experiment(model, sim.tail_n, sim.tail_r, seed=seeds[4])

    reports = {"stationary_moment": moment, "lln_clt": clt, "tail_index": tail}
    for key, rep in reports.items():
        write_json(out / f"sim_{key}.json", {"schema_version": SCHEMA_VERSION, **rep.to_dict()})
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "model": model.to_dict() if not isinstance(model.w_dist, simulate.EmpiricalInnovations)
        else {**model.to_dict(), "w_dist": {"kind": "empirical", "size": len(model.w_dist.pool)}},
        "calibration": calibration,
        "reports": {k: r.to_dict() for k, r in reports.items()},
    }
    write_json(out / "simulate.json", doc)
    return doc


def run_report(cfg: RunConfig) -> dict:
    out = cfg.resolve(cfg.out)
    doc = report.build_report(out)
    write_json(out / "report.json", doc)
    (out / "report.txt").write_text(report.format_report(doc), encoding="utf-8", newline="\n")
    return doc


# -- click front end --------------------------------------------------------


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="JSON run configuration.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Root RNG seed.")
@click.pass_context
def cli(ctx, config_path, out, seed):
    """Log-scale stochastic volatility toolkit for monthly VIX and stock returns."""
    if out is not None:
        out = str(Path(out).resolve())
    ctx.obj = load_config(config_path, out=out, seed=seed)


@cli.command()
@click.pass_obj
def ingest(cfg):
    """Build the monthly VIX/returns panel from raw CSV files."""
    panel = run_ingest(cfg)
    click.echo(f"panel: {len(panel)} months, {dataio.format_month(panel.start)} to "
               f"{dataio.format_month(panel.vix.end)}")


@cli.command()
@click.pass_obj
def diagnose(cfg):
    """Moments, ACF norms and QQ data for raw and normalized returns."""
    doc = run_diagnose(cfg)
    for name, entry in doc["series"].items():
        raw, norm = entry["raw"], entry["normalized"]
        click.echo(f"{name:12s} skew {raw['skewness']:+.2f}/{norm['skewness']:+.2f}  "
                   f"kurt {raw['excess_kurtosis']:+.2f}/{norm['excess_kurtosis']:+.2f}")


@cli.command()
@click.pass_obj
def fit(cfg):
    """Volatility autoregressions, return regressions, VG innovations and ADF test."""
    doc = run_fit(cfg)
    lh = doc["log_heston_fit"]
    vg = doc["vg_fit"]["params"]
    click.echo(f"log-scale AR(1): alpha {lh['alpha']:.4f} beta {lh['beta']:.4f} R2 {lh['r_squared']:.4f}")
    click.echo(f"VG: a {vg['a']:.4f} b {vg['b']:.4f} c {vg['c']:.4f} nu {vg['nu']:.4f}")
    click.echo(f"ADF statistic {doc['adf']['statistic']:.3f} rejects at {doc['adf']['reject_at']}")


@cli.command()
@click.option("--r", "r", type=int, default=None, help="Cutoff for the summary (default from config).")
@click.pass_obj
def hill(cfg, r):
    """Hill tail indices of exp(W) and the implied MGF interval."""
    if r is not None and r < 1:
        raise click.BadParameter("cutoff must be at least 1", param_hint="--r")
    doc = run_hill(cfg, r)
    click.echo(f"r={doc['r']}: gamma_right {doc['gamma_right']:.3f} gamma_left {doc['gamma_left']:.3f}")


@cli.command("simulate")
@click.option("--u", type=float, default=None, help="Moment order for E[V^u].")
@click.pass_obj
def simulate_cmd(cfg, u):
    """Monte Carlo checks of stationarity, moments, LLN/CLT and tails."""
    doc = run_simulate(cfg, u)
    for key, rep in doc["reports"].items():
        click.echo(f"{key}: estimate {rep['estimate']:.6g} (stderr {rep['mc_stderr']:.3g})")


@cli.command("report")
@click.pass_obj
def report_cmd(cfg):
    """Merge stage outputs and compare with reference values."""
    doc = run_report(cfg)
    click.echo(report.format_report(doc), nl=False)


@cli.command()
@click.pass_context
def run(ctx):
    """Run every stage in order."""
    for command in (ingest, diagnose, fit, hill, simulate_cmd, report_cmd):
        ctx.invoke(command)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="logheston", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except PreconditionError as exc:
        click.echo(f"refused: {exc}", err=True)
        return 2
    except ConvergenceError as exc:
        click.echo(f"not converged: {exc}", err=True)
        return 3
    except (InputError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
