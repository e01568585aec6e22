"""Least-squares fits for the volatility autoregressions and the return regression.

All two-regressor fits are closed-form; the ADF regression uses a QR-based
least-squares solve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import stats
from .dataio import MonthlySeries
from .errors import DegenerateError, InputError

# Asymptotic Dickey-Fuller critical values, regression with constant only.
ADF_CRITICAL_VALUES = {"1%": -3.43, "5%": -2.86, "10%": -2.57}
ADF_LEVELS = ("1%", "5%", "10%")

MIN_AR1_LENGTH = 30


def _values(x) -> np.ndarray:
    if isinstance(x, MonthlySeries):
        return np.asarray(x.values, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError("expected a 1-D sequence")
    return x


@dataclass(frozen=True)
class _Ols:
    intercept: float
    slope: float
    residuals: np.ndarray
    intercept_se: float
    slope_se: float
    r_squared: float
    corr: float

    @property
    def nobs(self) -> int:
        return len(self.residuals)

    def pvalue(self, coef: float, se: float) -> float:
        if se == 0.0:
            return 0.0 if coef != 0.0 else 1.0
        return stats.t_test_pvalue(coef / se, self.nobs - 2)


def _ols_line(y: np.ndarray, x: np.ndarray) -> _Ols:
    """Regress ``y`` on ``(1, x)``."""
    n = len(y)
    if n < 3:
        raise InputError("need at least 3 observations for a regression")
    xm = x.mean()
    dx = x - xm
    sxx = np.dot(dx, dx)
    if sxx / n <= 1e-12 * xm * xm or sxx == 0.0:
        raise DegenerateError("degenerate regressor (constant series)")
    ym = y.mean()
    dy = y - ym
    slope = np.dot(dx, dy) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    # remove the tiny non-zero mean left by rounding; keeps the normal equations tight
    resid = resid - resid.mean()
    rss = np.dot(resid, resid)
    syy = np.dot(dy, dy)
    s2 = rss / (n - 2)
    slope_se = np.sqrt(s2 / sxx)
    intercept_se = np.sqrt(s2 * (1.0 / n + xm * xm / sxx))
    r2 = 1.0 - rss / syy if syy > 0 else 1.0
    corr = np.dot(dx, dy) / np.sqrt(sxx * syy) if syy > 0 else 0.0
    return _Ols(float(intercept), float(slope), resid, float(intercept_se),
                float(slope_se), float(max(0.0, min(1.0, r2))), float(corr))


@dataclass(frozen=True)
class Ar1Fit:
    """AR(1) fit ``y_t = alpha + beta * y_{t-1} + W_t`` on level or log scale.

    ``slope`` is the coefficient actually estimated: ``beta`` on the level
    scale, ``beta - 1`` on the log scale (regression of the log increment).
    ``corr`` is the correlation between regressand and regressor.
    """

    alpha: float
    beta: float
    slope: float
    residuals: np.ndarray
    r_squared: float
    slope_pvalue: float
    corr: float
    alpha_se: float
    beta_se: float
    scale: str

    @property
    def nobs(self) -> int:
        return len(self.residuals)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "r_squared": self.r_squared,
            "slope_pvalue": self.slope_pvalue,
            "scale": self.scale,
            "slope": self.slope,
            "corr": self.corr,
            "alpha_se": self.alpha_se,
            "beta_se": self.beta_se,
            "nobs": self.nobs,
        }


def _check_vol(v: np.ndarray) -> None:
    if len(v) < MIN_AR1_LENGTH:
        raise InputError(f"need at least {MIN_AR1_LENGTH} observations")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise InputError("volatility series must be finite and positive")


def fit_heston_ar1(v) -> Ar1Fit:
    """OLS of ``V_t`` on ``(1, V_{t-1})``."""
    v = _values(v)
    _check_vol(v)
    fit = _ols_line(v[1:], v[:-1])
    return Ar1Fit(
        alpha=fit.intercept,
        beta=fit.slope,
        slope=fit.slope,
        residuals=fit.residuals,
        r_squared=fit.r_squared,
        slope_pvalue=fit.pvalue(fit.slope, fit.slope_se),
        corr=fit.corr,
        alpha_se=fit.intercept_se,
        beta_se=fit.slope_se,
        scale="level",
    )


def fit_log_heston(v) -> Ar1Fit:
    """OLS of ``ln V_t - ln V_{t-1}`` on ``(1, ln V_{t-1})``; ``beta = 1 + slope``.

    The p-value tests zero slope, i.e. a random walk in ``ln V``.
    """
    v = _values(v)
    _check_vol(v)
    logv = np.log(v)
    fit = _ols_line(np.diff(logv), logv[:-1])
    return Ar1Fit(
        alpha=fit.intercept,
        beta=1.0 + fit.slope,
        slope=fit.slope,
        residuals=fit.residuals,
        r_squared=fit.r_squared,
        slope_pvalue=fit.pvalue(fit.slope, fit.slope_se),
        corr=fit.corr,
        alpha_se=fit.intercept_se,
        beta_se=fit.slope_se,
        scale="log",
    )


@dataclass(frozen=True)
class ReturnsRegressionFit:
    """Fit of ``Q_t / V_t = theta / V_t + mu + Z_t``."""

    theta: float
    mu: float
    sigma: float
    residuals: np.ndarray
    theta_pvalue: float
    mu_pvalue: float
    theta_se: float
    mu_se: float

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "mu": self.mu,
            "sigma": self.sigma,
            "theta_pvalue": self.theta_pvalue,
            "mu_pvalue": self.mu_pvalue,
            "theta_se": self.theta_se,
            "mu_se": self.mu_se,
            "nobs": len(self.residuals),
        }


def _aligned(q, v) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(q, MonthlySeries) and isinstance(v, MonthlySeries):
        if q.start != v.start or len(q) != len(v):
            raise InputError("return and volatility series are not aligned")
    q, v = _values(q), _values(v)
    if len(q) != len(v):
        raise InputError("return and volatility series differ in length")
    if np.any(v <= 0):
        raise InputError("volatility must be positive")
    return q, v


def fit_returns_regression(q, v) -> ReturnsRegressionFit:
    q, v = _aligned(q, v)
    fit = _ols_line(q / v, 1.0 / v)
    return ReturnsRegressionFit(
        theta=fit.slope,
        mu=fit.intercept,
        sigma=float(fit.residuals.std()),
        residuals=fit.residuals,
        theta_pvalue=fit.pvalue(fit.slope, fit.slope_se),
        mu_pvalue=fit.pvalue(fit.intercept, fit.intercept_se),
        theta_se=fit.slope_se,
        mu_se=fit.intercept_se,
    )


def normalized_moments(q, v) -> tuple[float, float]:
    """Mean and population standard deviation of ``Q_t / V_t``."""
    q, v = _aligned(q, v)
    z = q / v
    return float(z.mean()), float(z.std())


def residual_cross_correlation(z, w) -> float:
    """Correlation of return residuals with volatility innovations.

    ``z`` covers months ``1..T`` (a regression fit or normalized returns);
    ``w`` covers months ``2..T`` (an :class:`Ar1Fit` or its residuals), so the
    first element of ``z`` is dropped.
    """
    z = z.residuals if isinstance(z, ReturnsRegressionFit) else _values(z)
    w = w.residuals if isinstance(w, Ar1Fit) else _values(w)
    if len(z) == len(w) + 1:
        z = z[1:]
    elif len(z) != len(w):
        raise InputError("residual sequences cannot be aligned")
    if len(w) < 2:
        raise InputError("empty overlap")
    return stats.pearson_corr(z, w)


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lags: int
    nobs: int
    reject_at: tuple[str, ...]
    critical_values: dict

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "lags": self.lags,
            "nobs": self.nobs,
            "reject_at": list(self.reject_at),
            "critical_values": dict(self.critical_values),
        }


def adf_test(x, lags: int = 15) -> AdfResult:
    """Augmented Dickey-Fuller test with a constant and ``lags`` lagged differences.

    Regresses ``dx_t`` on ``(1, x_{t-1}, dx_{t-1}, ..., dx_{t-lags})`` and
    compares the t-ratio of the ``x_{t-1}`` coefficient with asymptotic
    Dickey-Fuller critical values.
    """
    x = _values(x)
    if lags < 0:
        raise InputError("lags must be non-negative")
    T = len(x)
    if T <= lags + 10:
        raise InputError(f"series too short for {lags} lags")
    dx = np.diff(x)
    # dx[j] = x[j+1] - x[j]; regression targets dx[lags:]
    y = dx[lags:]
    n = len(y)
    cols = [np.ones(n), x[lags : lags + n]]
    for j in range(1, lags + 1):
        cols.append(dx[lags - j : lags - j + n])
    X = np.column_stack(cols)
    q, r = np.linalg.qr(X)
    if np.min(np.abs(np.diag(r))) <= 1e-12 * np.max(np.abs(np.diag(r))):
        raise DegenerateError("singular ADF design matrix")
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef
    s2 = np.dot(resid, resid) / (n - X.shape[1])
    rinv = np.linalg.inv(r)
    se = np.sqrt(s2 * np.sum(rinv[1] ** 2))
    stat = float(coef[1] / se) if se > 0 else float("-inf")
    reject = tuple(level for level in ADF_LEVELS if stat < ADF_CRITICAL_VALUES[level])
    return AdfResult(stat, lags, n, reject, dict(ADF_CRITICAL_VALUES))
