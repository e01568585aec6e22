"""Consolidated report: computed values against published reference values.

Coefficients, moments and correlations are compared by absolute
difference; Hill indices and variance-gamma parameters by relative
difference.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError

SCHEMA_VERSION = "1.0"

SERIES = ("small_total", "large_total", "small_price", "large_price")
SERIES_LABELS = {
    "small_total": "Small Total",
    "large_total": "Large Total",
    "small_price": "Small Price",
    "large_price": "Large Price",
}

STAGE_FILES = {
    "ingest": "provenance.json",
    "diagnose": "diagnostics.json",
    "fit": "fits.json",
    "hill": "hill.json",
    "simulate": "simulate.json",
}


@dataclass(frozen=True)
class Reference:
    key: str
    stage: str
    path: tuple
    value: float
    tol: float
    kind: str = "abs"


def _return_refs():
    vals = {
        "small_total": ((-0.72, -0.02), (2.52, -0.40), (0.0121, 0.0096), (0.0629, 0.0038)),
        "large_total": ((-0.67, -0.11), (1.73, -0.33), (0.0072, 0.0127), (0.104, 0.0167)),
        "small_price": ((-0.72, -0.02), (2.54, -0.40), (0.0121, 0.0101), (0.0668, 0.0043)),
        "large_price": ((-0.67, -0.11), (1.75, -0.33), (0.0072, 0.0129), (0.1145, 0.0150)),
    }
    fields = (("skewness", 0.05), ("excess_kurtosis", 0.05), ("acf_norm", 0.005), ("abs_acf_norm", 0.005))
    out = []
    for name, rows in vals.items():
        for (field, tol), (raw, norm) in zip(fields, rows):
            for variant, v in (("raw", raw), ("normalized", norm)):
                out.append(Reference(f"returns.{name}.{variant}.{field}", "diagnose",
                                     ("series", name, variant, field), v, tol))
    return out


def _normalized_refs():
    vals = {
        "small_total": (0.075, 0.25, -0.54),
        "large_total": (0.072, 0.203, -0.53),
        "small_price": (0.069, 0.249, -0.54),
        "large_price": (0.062, 0.202, -0.53),
    }
    out = []
    for name, (m, s, c) in vals.items():
        for field, v, tol in (("normalized_mean", m, 0.005), ("normalized_std", s, 0.01),
                              ("normalized_corr_with_w", c, 0.03)):
            out.append(Reference(f"normalized.{name}.{field}", "fit", ("returns_fits", name, field), v, tol))
    return out


def _regression_refs():
    vals = {
        "small_total": (3.6655, -0.1304, 0.2421, -0.44, 0.022, -0.392, 0.009, 0.0174),
        "large_total": (3.3981, -0.1191, 0.1945, -0.42, 0.024, -0.275, 0.0177, 0.0134),
        "small_price": (3.5628, -0.1316, 0.2416, -0.44, 0.026, -0.391, 0.0092, 0.0177),
        "large_price": (3.2224, -0.1195, 0.1941, -0.42, 0.026, -0.270, 0.0177, 0.0149),
    }
    fields = (("theta", 0.02), ("mu", 0.02), ("sigma", 0.02), ("corr_with_w", 0.03),
              ("z_skewness", 0.05), ("z_excess_kurtosis", 0.05), ("z_acf_norm", 0.005),
              ("z_abs_acf_norm", 0.005))
    out = []
    for name, row in vals.items():
        for (field, tol), v in zip(fields, row):
            out.append(Reference(f"regression.{name}.{field}", "fit", ("returns_fits", name, field), v, tol))
    return out


REFERENCES: tuple[Reference, ...] = (
    Reference("log_heston.alpha", "fit", ("log_heston_fit", "alpha"), 0.346, 0.02),
    Reference("log_heston.beta", "fit", ("log_heston_fit", "beta"), 0.882, 0.01),
    Reference("log_heston.corr", "fit", ("log_heston_fit", "corr"), -0.24, 0.02),
    Reference("log_heston.r_squared", "fit", ("log_heston_fit", "r_squared"), 0.058, 0.01),
    Reference("heston.alpha", "fit", ("heston_fit", "alpha"), 3.097, 0.1),
    Reference("heston.beta", "fit", ("heston_fit", "beta"), 0.844, 0.01),
    Reference("vg.a", "fit", ("vg_fit", "params", "a"), 0.0621, 0.20, "rel"),
    Reference("vg.b", "fit", ("vg_fit", "params", "b"), 0.1392, 0.20, "rel"),
    Reference("vg.c", "fit", ("vg_fit", "params", "c"), -0.0621, 0.20, "rel"),
    Reference("vg.nu", "fit", ("vg_fit", "params", "nu"), 0.6573, 0.20, "rel"),
    Reference("w.skewness", "fit", ("w_moments", "skewness"), 2.0, 0.5),
    Reference("w.excess_kurtosis", "fit", ("w_moments", "excess_kurtosis"), 9.0, 1.5),
    Reference("hill.gamma_right", "hill", ("gamma_right",), 7.3, 0.5 / 7.3, "rel"),
    Reference("hill.gamma_left", "hill", ("gamma_left",), 15.7, 1.0 / 15.7, "rel"),
    Reference("hill.mgf_lower", "hill", ("mgf_interval", 0), -14.7, 1.0 / 14.7, "rel"),
    Reference("hill.mgf_upper", "hill", ("mgf_interval", 1), 6.3, 0.5 / 6.3, "rel"),
    *_return_refs(),
    *_normalized_refs(),
    *_regression_refs(),
)


def _lookup(doc, path):
    for key in path:
        if doc is None:
            return None
        try:
            doc = doc[key]
        except (KeyError, IndexError, TypeError):
            return None
    return doc


def compare(ref: Reference, computed) -> dict:
    row = {"key": ref.key, "stage": ref.stage, "reference": ref.value, "computed": computed,
           "delta_kind": ref.kind, "tolerance": ref.tol, "delta": None, "pass": None}
    if computed is None or not math.isfinite(computed):
        return row
    diff = computed - ref.value
    delta = diff if ref.kind == "abs" else diff / abs(ref.value)
    row["delta"] = delta
    row["pass"] = bool(abs(delta) <= ref.tol)
    return row


SNAPSHOT_EXTRA = {
    "adf.statistic": ("fit", ("adf", "statistic")),
    "vg.loglik": ("fit", ("vg_fit", "loglik")),
    "log_heston.slope_pvalue": ("fit", ("log_heston_fit", "slope_pvalue")),
    **{f"regression.{s}.{f}": ("fit", ("returns_fits", s, f)) for s in SERIES for f in ("theta_pvalue", "mu_pvalue")},
}


def snapshot_values(docs: dict) -> dict:
    """Every compared quantity plus test statistics, keyed for an expected-values file."""
    out = {}
    for ref in REFERENCES:
        out[ref.key] = _lookup(docs.get(ref.stage), ref.path)
    for key, (stage, path) in SNAPSHOT_EXTRA.items():
        out[key] = _lookup(docs.get(stage), path)
    return out


def load_stage_outputs(out_dir) -> tuple[dict, list[str]]:
    out_dir = Path(out_dir)
    if not out_dir.is_dir():
        raise InputError(f"output directory {out_dir} does not exist")
    docs, missing = {}, []
    for stage, fname in STAGE_FILES.items():
        p = out_dir / fname
        if p.is_file():
            docs[stage] = json.loads(p.read_text(encoding="utf-8"))
        else:
            missing.append(stage)
    if not docs:
        raise InputError(f"no stage outputs found in {out_dir}")
    return docs, missing


def build_report(out_dir) -> dict:
    docs, missing = load_stage_outputs(out_dir)
    rows = []
    for ref in REFERENCES:
        doc = docs.get(ref.stage)
        value = _lookup(doc, ref.path)
        rows.append(compare(ref, None if value is None else float(value)))
    fits = docs.get("fit", {})
    adf = fits.get("adf")
    checks = {}
    if adf is not None:
        checks["adf_rejects_at_1pct"] = "1%" in adf.get("reject_at", [])
    heston = fits.get("heston_fit")
    if heston is not None and "abs_acf" in heston:
        band = heston["white_noise_band"]
        checks["heston_abs_w_acf_lags_1_2_outside_band"] = all(abs(v) > band for v in heston["abs_acf"][:2])
    diag = docs.get("diagnose")
    if diag is not None:
        closer = 0
        total = 0
        for name in SERIES:
            s = diag.get("series", {}).get(name)
            if s is None:
                continue
            for field in ("skewness", "excess_kurtosis", "acf_norm", "abs_acf_norm"):
                total += 1
                closer += abs(s["normalized"][field]) < abs(s["raw"][field])
        # each raw/normalized pair covers two of the 32 compared cells
        checks["normalized_closer_to_zero"] = {"pairs_closer": closer, "pairs": total,
                                               "pass": total == 16 and 2 * closer >= 30}
    compared = [r for r in rows if r["pass"] is not None]
    return {
        "schema_version": SCHEMA_VERSION,
        "stages_present": sorted(docs),
        "stages_missing": missing,
        "rows": rows,
        "checks": checks,
        "summary": {"compared": len(compared), "passed": sum(r["pass"] for r in compared)},
        "stages": docs,
    }


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v)
    return f"{v:.4g}"


def format_report(report: dict) -> str:
    lines = ["stages present: " + ", ".join(report["stages_present"])]
    if report["stages_missing"]:
        lines.append("stages missing: " + ", ".join(report["stages_missing"]))
    lines.append("")
    width = max(len(r["key"]) for r in report["rows"])
    lines.append(f"{'quantity':<{width}}  {'reference':>10}  {'computed':>10}  {'delta':>10}  result")
    for r in report["rows"]:
        verdict = "n/a" if r["pass"] is None else ("ok" if r["pass"] else "FAIL")
        if r["delta_kind"] == "rel" and r["delta"] is not None:
            delta = f"{100 * r['delta']:.3g}%"
        else:
            delta = _fmt(r["delta"])
        lines.append(f"{r['key']:<{width}}  {_fmt(r['reference']):>10}  {_fmt(r['computed']):>10}  "
                     f"{delta:>10}  {verdict}")
    if report["checks"]:
        lines.append("")
        for k, v in report["checks"].items():
            lines.append(f"{k}: {v}")
    s = report["summary"]
    lines.append("")
    lines.append(f"{s['passed']} of {s['compared']} compared values within tolerance")
    return "\n".join(lines) + "\n"
