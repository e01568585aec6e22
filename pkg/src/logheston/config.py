"""Run configuration for the command-line pipeline."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .dataio import Month, parse_month
from .errors import InputError

SERIES = ("small_total", "large_total", "small_price", "large_price")


@dataclass
class SimulationConfig:
    series: str = "small_total"
    coupling: str = "gaussian-copula"
    target_corr: float | None = None
    moment_u: float = 2.0
    moment_n: int = 10**6
    moment_reps: int = 4
    clt_T: tuple = (256, 1024, 4096)
    clt_reps: int = 500
    tail_n: int = 10**6
    tail_r: int | None = None
    path_sample: int = 1000


@dataclass
class RunConfig:
    """Paths and analysis settings.

    Relative data paths are resolved against ``base_dir`` (the directory of
    the config file when loaded from disk).
    """

    vxo: str = "data/raw/vxocls.csv"
    vix: str = "data/raw/vixcls.csv"
    returns: dict = field(default_factory=lambda: {s: f"data/raw/{s}.csv" for s in SERIES})
    switch_month: str = "1990-03"
    start: str | None = "1986-01"
    end: str | None = "2024-06"
    max_lag: int = 5
    hill_r: int = 100
    hill_r_min: int = 10
    hill_r_max: int = 200
    adf_lags: int = 15
    vg_maxiter: int = 2000
    seed: int = 20240601
    out: str = "results"
    model: dict | None = None
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    base_dir: str = "."

    def __post_init__(self):
        if isinstance(self.simulation, dict):
            known = {f.name for f in fields(SimulationConfig)}
            unknown = set(self.simulation) - known
            if unknown:
                raise InputError(f"unknown simulation settings: {sorted(unknown)}")
            self.simulation = SimulationConfig(**self.simulation)
        self.simulation.clt_T = tuple(self.simulation.clt_T)
        if self.simulation.series not in SERIES:
            raise InputError(f"unknown series {self.simulation.series!r}")
        if self.simulation.coupling not in ("independent", "gaussian-copula"):
            raise InputError(f"unknown coupling {self.simulation.coupling!r}")
        if self.max_lag < 1 or self.adf_lags < 0:
            raise InputError("lag settings must be positive")
        if self.hill_r < 1:
            raise InputError("hill_r must be at least 1")
        for name in ("switch_month", "start", "end"):
            value = getattr(self, name)
            if value is not None:
                parse_month(value)

    @property
    def switch(self) -> Month:
        return parse_month(self.switch_month)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def to_dict(self) -> dict:
        d = asdict(self)
        d["simulation"]["clt_T"] = list(self.simulation.clt_T)
        return d


def load_config(path=None, **overrides) -> RunConfig:
    """Read a JSON config; ``overrides`` with value ``None`` are ignored."""
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise InputError(f"config file {p} not found")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InputError(f"{p}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise InputError(f"{p}: config must be a JSON object")
        data.setdefault("base_dir", str(p.parent))
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise InputError(str(exc)) from None

