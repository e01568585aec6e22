"""Descriptive statistics and white-noise diagnostics.

Moments use the population convention (divide by ``T``).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import DegenerateError, InputError

PLOTTING_OFFSET = 0.5


def _as_array(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError("expected a 1-D sequence")
    if not np.all(np.isfinite(x)):
        raise InputError("sequence contains non-finite values")
    return x


def _is_constant(x: np.ndarray) -> bool:
    if len(x) == 0:
        return True
    scale = max(np.max(np.abs(x)), np.finfo(float).tiny)
    return np.ptp(x) <= 1e-14 * scale


def central_moment(x, k: int) -> float:
    x = _as_array(x)
    return float(np.mean((x - x.mean()) ** k))


def skewness_kurtosis(x) -> tuple[float, float]:
    """Return sample skewness and excess kurtosis.

    ``s = m3 / m2**1.5`` and ``kappa = m4 / m2**2 - 3`` with population
    central moments ``m_k = mean((x - mean(x))**k)``.
    """
    x = _as_array(x)
    if len(x) < 4:
        raise InputError("need at least 4 observations")
    if _is_constant(x):
        raise DegenerateError("constant input has no skewness or kurtosis")
    d = x - x.mean()
    m2 = np.mean(d**2)
    m3 = np.mean(d**3)
    m4 = np.mean(d**4)
    return float(m3 / m2**1.5), float(m4 / m2**2 - 3.0)


def pearson_corr(x, y) -> float:
    x = _as_array(x)
    y = _as_array(y)
    if len(x) != len(y):
        raise InputError("sequences must have equal length")
    if len(x) < 2 or _is_constant(x) or _is_constant(y):
        raise DegenerateError("correlation undefined for constant input")
    dx = x - x.mean()
    dy = y - y.mean()
    denom = np.sqrt(np.dot(dx, dx)) * np.sqrt(np.dot(dy, dy))
    if denom == 0.0:
        raise DegenerateError("correlation undefined for constant input")
    return float(np.clip(np.dot(dx, dy) / denom, -1.0, 1.0))


def acf(x, max_lag: int = 5, conventional: bool = False) -> np.ndarray:
    """Empirical autocorrelations at lags ``1..max_lag``.

    By default lag ``k`` is the Pearson correlation between ``x[:-k]`` and
    ``x[k:]``, each window centred by its own mean. With
    ``conventional=True`` the usual estimator (common mean, full-sample
    variance in the denominator) is returned instead.
    """
    x = _as_array(x)
    if max_lag < 1:
        raise InputError("max_lag must be at least 1")
    if len(x) <= max_lag + 2:
        raise InputError(f"need more than {max_lag + 2} observations")
    out = np.empty(max_lag)
    if conventional:
        if _is_constant(x):
            raise DegenerateError("constant input")
        d = x - x.mean()
        denom = np.dot(d, d)
        for k in range(1, max_lag + 1):
            out[k - 1] = np.dot(d[:-k], d[k:]) / denom
        return out
    for k in range(1, max_lag + 1):
        out[k - 1] = pearson_corr(x[:-k], x[k:])
    return out


def acf_norm(x, max_lag: int = 5, absolute: bool = False, conventional: bool = False) -> float:
    """Sum of squared autocorrelations over lags ``1..max_lag``.

    No factor ``T`` is applied. With ``absolute=True`` the ACF of ``|x|`` is used.
    """
    x = _as_array(x)
    if absolute:
        x = np.abs(x)
    rho = acf(x, max_lag, conventional=conventional)
    return float(np.sum(rho**2))


def jb_statistic(n: int, skewness: float, excess_kurtosis: float) -> float:
    return n / 6.0 * (skewness**2 + excess_kurtosis**2 / 4.0)


def jarque_bera(x) -> tuple[float, float]:
    """Jarque-Bera statistic and its chi-square(2) upper-tail p-value."""
    x = _as_array(x)
    if len(x) < 20:
        raise InputError("Jarque-Bera needs at least 20 observations")
    s, k = skewness_kurtosis(x)
    stat = jb_statistic(len(x), s, k)
    # chi-square with 2 degrees of freedom has survival exp(-x/2)
    return float(stat), float(np.exp(-stat / 2.0))


def student_t_sf(t: float, df: float) -> float:
    """Upper tail ``P(T > t)`` of Student's t via the regularized incomplete beta."""
    tail = 0.5 * special.betainc(df / 2.0, 0.5, df / (df + t * t))
    return float(tail if t >= 0 else 1.0 - tail)


def t_test_pvalue(t: float, df: float) -> float:
    """Two-sided p-value for a t statistic."""
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def plotting_positions(n: int) -> np.ndarray:
    return (np.arange(1, n + 1) - PLOTTING_OFFSET) / n


def qq_points(x, reference=None) -> np.ndarray:
    """Quantile-quantile pairs ``(theoretical, sample)``.

    Parameters
    ----------
    x : array_like
        Sample; its order statistics form the second column.
    reference : None, tuple or array_like
        ``None`` compares with a normal distribution fitted by sample mean and
        population standard deviation; ``("normal", mu, sigma)`` fixes the
        normal; an array is treated as an empirical reference sample.
    """
    x = _as_array(x)
    if len(x) < 2:
        raise InputError("need at least 2 observations")
    probs = plotting_positions(len(x))
    if reference is None:
        reference = ("normal", float(x.mean()), float(x.std()))
    if isinstance(reference, tuple) and reference and reference[0] == "normal":
        _, mu, sigma = reference
        theo = mu + sigma * special.ndtri(probs)
    else:
        ref = _as_array(reference)
        theo = np.quantile(ref, probs, method="hazen")
    return np.column_stack([theo, np.sort(x)])


def pp_points(x, cdf: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Probability-probability pairs ``(model cdf, empirical probability)``."""
    x = np.sort(_as_array(x))
    if len(x) < 1:
        raise InputError("empty sample")
    model = np.asarray(cdf(x), dtype=float)
    # guard against quadrature noise breaking monotonicity
    model = np.maximum.accumulate(np.clip(model, 0.0, 1.0))
    return np.column_stack([model, plotting_positions(len(x))])


@dataclass(frozen=True)
class DiagnosticsSummary:
    skewness: float
    excess_kurtosis: float
    acf: tuple[float, ...]
    abs_acf: tuple[float, ...]
    acf_norm: float
    abs_acf_norm: float
    jb_stat: float
    jb_pvalue: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["acf"] = list(self.acf)
        d["abs_acf"] = list(self.abs_acf)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def diagnostics(x, max_lag: int = 5) -> DiagnosticsSummary:
    """Skewness, kurtosis, ACF norms and Jarque-Bera test for one series."""
    x = _as_array(x)
    s, k = skewness_kurtosis(x)
    rho = acf(x, max_lag)
    rho_abs = acf(np.abs(x), max_lag)
    jb, p = jarque_bera(x)
    return DiagnosticsSummary(
        skewness=s,
        excess_kurtosis=k,
        acf=tuple(float(v) for v in rho),
        abs_acf=tuple(float(v) for v in rho_abs),
        acf_norm=float(np.sum(rho**2)),
        abs_acf_norm=float(np.sum(rho_abs**2)),
        jb_stat=jb,
        jb_pvalue=p,
    )
