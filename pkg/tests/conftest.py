import datetime as dt
import json
from importlib import resources
from pathlib import Path

import numpy as np
import pytest
from scipy import signal

from logheston.vargamma import VgParams, vg_sample

FITTED_VG = VgParams(0.0621, 0.1392, -0.0621, 0.6573)

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for mark in report.keywords:
        if mark.startswith("criterion_"):
            n = int(mark.split("_")[1])
            _ACCEPTANCE.setdefault(n, []).append((report.nodeid, report.outcome))


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.keywords[f"criterion_{m.args[0]}"] = True


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        outcomes = [o for _, o in _ACCEPTANCE[n]]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict} ({len(outcomes)} test(s))")


def load_schema(name: str) -> dict:
    text = resources.files("logheston").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _business_days(year, month):
    d = dt.date(year, month, 1)
    while d.month == month:
        if d.weekday() < 5:
            yield d
        d += dt.timedelta(days=1)


def write_synthetic_raw(root: Path, n_months: int = 462, seed: int = 7, start=(1986, 1),
                        switch=(1990, 3)) -> dict:
    """Write raw daily VXO/VIX and monthly return files drawn from the model."""
    rng = np.random.default_rng(seed)
    alpha, beta = 0.346, 0.882
    w = vg_sample(FITTED_VG, n_months, rng)
    logv = signal.lfilter([1.0], [1.0, -beta], alpha + w, zi=[beta * alpha / (1 - beta)])[0]
    v = np.exp(logv)
    months = [((start[0] * 12 + start[1] - 1 + k) // 12, (start[0] * 12 + start[1] - 1 + k) % 12 + 1)
              for k in range(n_months)]
    root.mkdir(parents=True, exist_ok=True)
    switch_k = months.index(switch)
    vxo_lines, vix_lines = ["DATE,VXOCLS"], ["DATE,VIXCLS"]
    for k, (y, m) in enumerate(months):
        for d in _business_days(y, m):
            value = v[k] * np.exp(0.03 * rng.standard_normal())
            cell = f"{value:.2f}" if rng.random() > 0.02 else "."
            if k < switch_k + 2:
                vxo_lines.append(f"{d.isoformat()},{cell}")
            if k >= switch_k - 2:
                vix_lines.append(f"{d.isoformat()},{cell}")
    (root / "vxocls.csv").write_text("\n".join(vxo_lines) + "\n")
    (root / "vixcls.csv").write_text("\n".join(vix_lines) + "\n")
    specs = {"small_total": (3.67, -0.13, 0.24), "large_total": (3.40, -0.12, 0.19),
             "small_price": (3.56, -0.13, 0.24), "large_price": (3.22, -0.12, 0.19)}
    xi = rng.standard_normal(n_months)
    w_std = (w - w.mean()) / w.std()
    for name, (theta, mu, sigma) in specs.items():
        z = sigma * (-0.45 * w_std + np.sqrt(1 - 0.45**2) * xi)
        q = theta + v * (mu + z)
        lines = ["Date,Return"] + [f"{y}{m:02d},{x:.4f}" for (y, m), x in zip(months, q)]
        (root / f"{name}.csv").write_text("\n".join(lines) + "\n")
    return {"vxo": str(root / "vxocls.csv"), "vix": str(root / "vixcls.csv"),
            "returns": {name: str(root / f"{name}.csv") for name in specs}}


@pytest.fixture(scope="session")
def synthetic_raw(tmp_path_factory):
    root = tmp_path_factory.mktemp("raw")
    return write_synthetic_raw(root)


@pytest.fixture()
def fitted_vg():
    return FITTED_VG
