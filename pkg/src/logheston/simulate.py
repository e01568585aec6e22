"""Simulation of the combined volatility/return model and Monte Carlo checks.

The model is::

    ln V_t = alpha + beta * ln V_{t-1} + W_t
    Q_t    = theta + V_t * (mu + Z_t),        Z_t ~ N(0, sigma^2)

Each replicate draws from its own :class:`numpy.random.SeedSequence` child,
so replicate ``i`` is identical whether run alone or as part of a batch.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import optimize, signal, special
from scipy import stats as sps

from . import stats
from .errors import InputError, PreconditionError
from .tails import hill_estimates, mgf_interval_from_hill
from .vargamma import VgParams, vg_mgf_domain, vg_ppf_from_normal, vg_sample

CHUNK = 2**20
NO_TAIL_THRESHOLD = 30.0


@dataclass(frozen=True)
class NormalInnovations:
    scale: float

    def __post_init__(self):
        if not self.scale >= 0:
            raise InputError("normal innovation scale must be non-negative")


@dataclass(frozen=True)
class EmpiricalInnovations:
    """Resample from a fixed pool of residuals."""

    pool: tuple

    def __post_init__(self):
        pool = np.sort(np.asarray(self.pool, dtype=float))
        if pool.ndim != 1 or len(pool) < 3 or not np.all(np.isfinite(pool)):
            raise InputError("residual pool must hold at least 3 finite values")
        object.__setattr__(self, "pool", tuple(pool.tolist()))

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.pool)


WDist = Union[VgParams, NormalInnovations, EmpiricalInnovations]


@dataclass(frozen=True)
class SvModelParams:
    """Parameters of the combined model.

    ``copula_rho=None`` draws ``Z`` and ``W`` independently; otherwise they
    are joined through a Gaussian copula with that correlation. ``v0``
    defaults to ``exp(alpha / (1 - beta))``.
    """

    alpha: float
    beta: float
    theta: float
    mu: float
    sigma: float
    w_dist: WDist
    copula_rho: float | None = None
    v0: float | None = None

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise InputError("beta must lie in (0, 1)")
        if not self.sigma >= 0:
            raise InputError("sigma must be non-negative")
        if self.copula_rho is not None and not -1 < self.copula_rho < 1:
            raise InputError("copula correlation must lie in (-1, 1)")
        if self.v0 is not None and not self.v0 > 0:
            raise InputError("v0 must be positive")
        if not isinstance(self.w_dist, (VgParams, NormalInnovations, EmpiricalInnovations)):
            raise InputError("unsupported innovation distribution")

    @property
    def log_v0(self) -> float:
        return math.log(self.v0) if self.v0 is not None else self.stationary_log_mean

    @property
    def stationary_log_mean(self) -> float:
        return self.alpha / (1.0 - self.beta)

    def default_burnin(self) -> int:
        return int(math.ceil(10.0 / (1.0 - self.beta)))

    def to_dict(self) -> dict:
        w = self.w_dist
        if isinstance(w, VgParams):
            wd = {"kind": "vg", **w.to_dict()}
        elif isinstance(w, NormalInnovations):
            wd = {"kind": "normal", "scale": w.scale}
        else:
            wd = {"kind": "empirical", "pool": list(w.pool)}
        coupling = ({"kind": "independent"} if self.copula_rho is None
                    else {"kind": "gaussian-copula", "rho": self.copula_rho})
        return {"alpha": self.alpha, "beta": self.beta, "theta": self.theta, "mu": self.mu,
                "sigma": self.sigma, "w_dist": wd, "coupling": coupling, "v0": self.v0}

    @classmethod
    def from_dict(cls, d: dict) -> "SvModelParams":
        try:
            wd = d["w_dist"]
            kind = wd["kind"]
            if kind == "vg":
                w = VgParams.from_dict(wd)
            elif kind == "normal":
                w = NormalInnovations(float(wd["scale"]))
            elif kind == "empirical":
                w = EmpiricalInnovations(tuple(wd["pool"]))
            else:
                raise InputError(f"unknown innovation kind {kind!r}")
            coupling = d.get("coupling") or {"kind": "independent"}
            if coupling["kind"] == "independent":
                rho = None
            elif coupling["kind"] == "gaussian-copula":
                rho = float(coupling["rho"])
            else:
                raise InputError(f"unknown coupling {coupling['kind']!r}")
            return cls(float(d["alpha"]), float(d["beta"]), float(d["theta"]), float(d["mu"]),
                       float(d["sigma"]), w, rho, d.get("v0"))
        except KeyError as exc:
            raise InputError(f"missing model field {exc}") from None


def mgf_domain(w: WDist, r: int = 100) -> tuple[float, float]:
    """Interval of ``t`` on which ``E[exp(t W)]`` is finite (or estimated so)."""
    if isinstance(w, VgParams):
        return vg_mgf_domain(w)
    if isinstance(w, NormalInnovations):
        return (-math.inf, math.inf)
    pool = w.values
    r = min(r, len(pool) - 2)
    return mgf_interval_from_hill(*hill_estimates(pool, r))


def _draw_innovations(m: SvModelParams, rng: np.random.Generator, size: int):
    xi = rng.standard_normal(size)
    z = m.sigma * xi
    w_dist = m.w_dist
    if m.copula_rho is None:
        if isinstance(w_dist, VgParams):
            w = vg_sample(w_dist, size, rng)
        elif isinstance(w_dist, NormalInnovations):
            w = w_dist.scale * rng.standard_normal(size)
        else:
            pool = w_dist.values
            w = pool[rng.integers(0, len(pool), size)]
        return z, w
    rho = m.copula_rho
    score = rho * xi + math.sqrt(1.0 - rho * rho) * rng.standard_normal(size)
    return z, _marginal_from_score(w_dist, score)


def _marginal_from_score(w_dist: WDist, score: np.ndarray) -> np.ndarray:
    if isinstance(w_dist, VgParams):
        return vg_ppf_from_normal(w_dist, score)
    if isinstance(w_dist, NormalInnovations):
        return w_dist.scale * score
    pool = w_dist.values
    idx = np.floor(special.ndtr(score) * len(pool)).astype(np.int64)
    return pool[np.clip(idx, 0, len(pool) - 1)]


@dataclass(frozen=True)
class SimPath:
    V: np.ndarray
    Q: np.ndarray
    Z: np.ndarray
    W: np.ndarray
    seed: object

    def __len__(self):
        return len(self.V)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["V", "Q"])
            for v, q in zip(self.V, self.Q):
                w.writerow([repr(float(v)), repr(float(q))])


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _iterate(m: SvModelParams, T: int, rng: np.random.Generator, log_v_prev: float):
    """Yield chunks ``(logV, Z, W)`` of a path of length ``T``."""
    done = 0
    zi = np.array([m.beta * log_v_prev])
    while done < T:
        size = min(CHUNK, T - done)
        z, w = _draw_innovations(m, rng, size)
        logv, zi = signal.lfilter([1.0], [1.0, -m.beta], m.alpha + w, zi=zi)
        yield logv, z, w
        done += size


def simulate_path(m: SvModelParams, T: int, seed=None) -> SimPath:
    """Simulate ``T`` months starting from ``ln V_0 = ln v0``."""
    if T < 1:
        raise InputError("T must be at least 1")
    ss = _seed_sequence(seed)
    rng = np.random.default_rng(ss)
    parts = list(_iterate(m, T, rng, m.log_v0))
    logv = np.concatenate([p[0] for p in parts])
    z = np.concatenate([p[1] for p in parts])
    w = np.concatenate([p[2] for p in parts])
    v = np.exp(logv)
    q = m.theta + v * (m.mu + z)
    return SimPath(v, q, z, w, {"entropy": ss.entropy, "spawn_key": list(ss.spawn_key)})


@dataclass
class McReport:
    experiment: str
    estimate: float
    mc_stderr: float
    n: int
    burnin: int
    reps: int
    verdicts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "estimate": self.estimate, "mc_stderr": self.mc_stderr,
                "n": self.n, "burnin": self.burnin, "reps": self.reps, "verdicts": self.verdicts}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def batch_means_stderr(x, n_batches: int = 50) -> float:
    """Standard error of the mean of a correlated series by non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    size = len(x) // n_batches
    if size < 1:
        raise InputError("series too short for batch means")
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(n_batches))


def _check_domain(m: SvModelParams, u: float) -> tuple[float, float]:
    lo, hi = mgf_domain(m.w_dist)
    if not lo < u < hi:
        raise PreconditionError(
            f"E[V^u] needs E[exp(u W)] finite: u={u} is outside the MGF domain ({lo:.4g}, {hi:.4g})")
    return lo, hi


def stationary_moment_mc(m: SvModelParams, u: float, n: int = 10**6, burnin: int | None = None,
                         reps: int = 4, seed=0) -> McReport:
    """Time-average estimate of ``E[V^u]`` under the stationary law.

    The ``relative_drift`` verdict is the largest relative distance between
    the running mean and its final value over the second half of the samples.
    """
    lo, hi = _check_domain(m, u)
    burnin = m.default_burnin() if burnin is None else burnin
    if n <= burnin or reps < 1:
        raise InputError("need n > burnin and reps >= 1")
    domain = [lo if math.isfinite(lo) else None, hi if math.isfinite(hi) else None]
    if u == 0:
        return McReport("stationary_moment", 1.0, 0.0, n, burnin, reps,
                        {"u": u, "mgf_domain": domain, "relative_drift": 0.0, "stabilized": True})
    pooled = np.zeros(n - burnin)
    rep_means = []
    for child in _seed_sequence(seed).spawn(reps):
        path = simulate_path(m, n, child)
        vu = path.V[burnin:] ** u
        rep_means.append(vu.mean())
        pooled += vu
    pooled /= reps
    running = np.cumsum(pooled) / np.arange(1, len(pooled) + 1)
    final = running[-1]
    drift = float(np.max(np.abs(running[len(running) // 2:] - final)) / abs(final))
    estimate = float(np.mean(rep_means))
    stderr = (float(np.std(rep_means, ddof=1) / math.sqrt(reps)) if reps > 1
              else batch_means_stderr(pooled))
    return McReport("stationary_moment", estimate, stderr, n, burnin, reps,
                    {"u": u, "mgf_domain": domain, "relative_drift": drift, "stabilized": drift < 0.02})


def _mean_returns(m: SvModelParams, T: int, reps: int, burnin: int, seed_seq) -> np.ndarray:
    out = np.empty(reps)
    for i, child in enumerate(seed_seq.spawn(reps)):
        path = simulate_path(m, burnin + T, child)
        out[i] = path.Q[burnin:].mean()
    return out


def lln_clt_experiment(m: SvModelParams, T=(256, 1024, 4096), reps: int = 500, seed=0,
                       burnin: int | None = None, level: float = 0.01) -> McReport:
    """Scaling and normality of the mean monthly return across replicates.

    For every horizon in ``T`` the mean return of ``reps`` independent paths
    is computed after burn-in. The spread must shrink like ``T**-0.5``
    (ratio ``0.5 +/- 0.1`` per quadrupling) and the standardized means at
    the largest horizon must pass Jarque-Bera and Kolmogorov-Smirnov tests
    at ``level``.
    """
    Ts = sorted({int(t) for t in np.atleast_1d(T)})
    if reps < 200:
        raise InputError("need at least 200 replicates")
    if Ts[0] < 1:
        raise InputError("horizons must be positive")
    burnin = m.default_burnin() if burnin is None else burnin
    levels = _seed_sequence(seed).spawn(len(Ts))
    qbars = [_mean_returns(m, t, reps, burnin, ss) for t, ss in zip(Ts, levels)]
    spread = [float(q.std(ddof=1)) for q in qbars]

    ratios = []
    for i in range(len(Ts) - 1):
        if spread[i] == 0:
            ratios.append(None)
            continue
        ratio = spread[i + 1] / spread[i]
        ratios.append(float(ratio ** (math.log(4.0) / math.log(Ts[i + 1] / Ts[i]))))

    T_max = Ts[-1]
    last = qbars[-1]
    grand = float(last.mean())
    scaled = math.sqrt(T_max) * last
    sigma_q = float(scaled.std(ddof=1))
    verdicts = {"T": Ts, "qbar_std": spread, "ratio_per_quadrupling": ratios,
                "sigma_q": sigma_q, "max_abs_qbar": float(np.max(np.abs(last)))}
    if sigma_q == 0:
        verdicts.update(degenerate=True, lln_pass=bool(np.all(last == last[0])), clt_pass=None,
                        jb_pvalue=None, ks_pvalue=None)
    else:
        standardized = (scaled - math.sqrt(T_max) * grand) / sigma_q
        _, jb_p = stats.jarque_bera(standardized)
        ks_p = float(sps.kstest(standardized, "norm").pvalue)
        lln = all(r is not None and abs(r - 0.5) <= 0.1 for r in ratios)
        verdicts.update(degenerate=False, lln_pass=lln, jb_pvalue=jb_p, ks_pvalue=ks_p,
                        clt_pass=bool(jb_p > level and ks_p > level))
    return McReport("lln_clt", grand, float(last.std(ddof=1) / math.sqrt(reps)), T_max, burnin, reps, verdicts)


def tail_index_experiment(m: SvModelParams, n: int = 10**7, r: int | None = None, seed=0,
                          burnin: int | None = None) -> McReport:
    """Hill index of ``|Q - theta|`` on one long path, compared with the MGF edge of ``W``.

    A power tail is reported only when the index stays below
    ``NO_TAIL_THRESHOLD``.
    """
    if n < 10**6:
        raise InputError("tail experiment needs n >= 1e6")
    r = n // 1000 if r is None else r
    burnin = m.default_burnin() if burnin is None else burnin
    rng = np.random.default_rng(_seed_sequence(seed))
    pieces = []
    for logv, z, _ in _iterate(m, burnin + n, rng, m.log_v0):
        pieces.append(np.log(np.abs(np.exp(logv) * (m.mu + z))))
    logabs = np.concatenate(pieces)[burnin:]
    logabs = logabs[np.isfinite(logabs)]
    _, gamma = hill_estimates(logabs, r)
    _, gamma_deep = hill_estimates(logabs, max(1, r // 10))
    t_max = mgf_domain(m.w_dist)[1]
    detected = gamma < NO_TAIL_THRESHOLD
    rel = abs(gamma - t_max) / t_max if math.isfinite(t_max) else None
    verdicts = {
        "r": r,
        "gamma_right": gamma,
        "gamma_right_deep": gamma_deep,
        "mgf_t_max": t_max if math.isfinite(t_max) else None,
        "relative_error": rel,
        "within_25pct": None if rel is None else bool(rel <= 0.25),
        "pareto_tail_detected": bool(detected),
        "note": "power tail detected" if detected else "no Pareto tail detected",
    }
    # asymptotic Hill standard error gamma / sqrt(r)
    return McReport("tail_index", float(gamma), float(gamma / math.sqrt(r)), n, burnin, 1, verdicts)


def calibrate_copula(m: SvModelParams, target_corr: float, n: int = 200_000, seed=0) -> float:
    """Copula correlation giving Pearson ``corr(Z, W) == target_corr``.

    Uses common random numbers so the simulated correlation is a smooth,
    monotone function of the copula parameter.
    """
    rng = np.random.default_rng(_seed_sequence(seed))
    xi = rng.standard_normal(n)
    eta = rng.standard_normal(n)

    def corr(rho):
        w = _marginal_from_score(m.w_dist, rho * xi + math.sqrt(1 - rho * rho) * eta)
        return stats.pearson_corr(xi, w)

    lo, hi = -0.999, 0.999
    c_lo, c_hi = corr(lo), corr(hi)
    if not min(c_lo, c_hi) <= target_corr <= max(c_lo, c_hi):
        raise PreconditionError(
            f"target correlation {target_corr} outside attainable range [{c_lo:.3f}, {c_hi:.3f}]")
    return float(optimize.brentq(lambda r: corr(r) - target_corr, lo, hi, xtol=1e-6))
