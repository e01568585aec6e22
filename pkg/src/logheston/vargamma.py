"""Variance-gamma distribution ``X = c + a*G + b*sqrt(G)*Y``.

``G`` is gamma distributed with shape ``1/nu`` and mean one, ``Y`` is standard
normal and independent of ``G``. The density is evaluated from the gamma
mixture integral (substituting ``G = exp(s)``), with the modified-Bessel
closed form available as a faster equivalent for likelihood work.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import interpolate, optimize, special

from .errors import ConvergenceError, DegenerateError, InputError, PreconditionError

# log-integrand drop (nats) below its peak at which the mixture integral is truncated
_TRUNCATION_NATS = 46.0
_QUAD_RTOL = 1e-10
_QUAD_MAX_NODES = 2**15

_GL_ORDER = 20
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_GL_ORDER)


@dataclass(frozen=True)
class VgParams:
    a: float
    b: float
    c: float
    nu: float

    def __post_init__(self):
        for name in ("a", "b", "c", "nu"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise InputError(f"parameter {name} must be finite")
            object.__setattr__(self, name, v)
        if self.b <= 0 or self.nu <= 0:
            raise InputError("variance-gamma requires b > 0 and nu > 0")

    @property
    def shape(self) -> float:
        return 1.0 / self.nu

    @property
    def mean(self) -> float:
        return self.c + self.a

    @property
    def variance(self) -> float:
        return self.a**2 * self.nu + self.b**2

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def cumulants(self) -> tuple[float, float, float, float]:
        a, b, nu = self.a, self.b, self.nu
        k3 = 3 * a * b**2 * nu + 2 * a**3 * nu**2
        k4 = 3 * b**4 * nu + 12 * a**2 * b**2 * nu**2 + 6 * a**4 * nu**3
        return self.mean, self.variance, k3, k4

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c, "nu": self.nu}

    @classmethod
    def from_dict(cls, d) -> "VgParams":
        return cls(d["a"], d["b"], d["c"], d["nu"])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def vg_sample(p: VgParams, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` variates from the gamma-normal mixture.

    ``seed`` may be an int, a :class:`numpy.random.SeedSequence` or a
    :class:`numpy.random.Generator`.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    rng = _rng(seed)
    g = rng.gamma(p.shape, p.nu, size=n)
    y = rng.standard_normal(n)
    return p.c + p.a * g + p.b * np.sqrt(g) * y


def vg_mgf_domain(p: VgParams) -> tuple[float, float]:
    """Open interval of ``t`` where ``1 - a*nu*t - b**2*nu*t**2/2 > 0``."""
    qa = 0.5 * p.b**2 * p.nu
    qb = p.a * p.nu
    disc = math.sqrt(qb * qb + 4.0 * qa)
    # numerically stable roots of qa*t**2 + qb*t - 1
    q = -0.5 * (qb + math.copysign(disc, qb))
    r1, r2 = q / qa, -1.0 / q
    return (min(r1, r2), max(r1, r2))


def vg_mgf(p: VgParams, t):
    """Moment generating function ``E[exp(t X)]``.

    Raises :class:`PreconditionError` when any ``t`` lies outside the domain.
    """
    t = np.asarray(t, dtype=float)
    base = 1.0 - p.a * p.nu * t - 0.5 * p.b**2 * p.nu * t**2
    if np.any(base <= 0):
        lo, hi = vg_mgf_domain(p)
        raise PreconditionError(f"MGF undefined: t must lie in ({lo:.6g}, {hi:.6g})")
    out = np.exp(p.c * t - np.log(base) / p.nu)
    return float(out) if out.ndim == 0 else out


# -- density --------------------------------------------------------------


def _mixture_terms(p: VgParams, x: np.ndarray):
    """Coefficients of the concave log-integrand in ``s = log G``.

    ``L(s) = -A*exp(-s) - B*exp(s) + C*s + D``.
    """
    d = x - p.c
    A = d * d / (2 * p.b**2)
    B = p.a**2 / (2 * p.b**2) + 1.0 / p.nu
    C = p.shape - 0.5
    D = (d * p.a / p.b**2 - math.log(p.b * math.sqrt(2 * math.pi))
         - p.shape * math.log(p.nu) - special.gammaln(p.shape))
    return A, B, C, D


def _log_integrand(s, A, B, C, D):
    return -A * np.exp(-s) - B * np.exp(s) + C * s + D


def _bracket(A, B, C, D, s_peak, L_peak, direction):
    """Expand from the peak until the log-integrand has dropped by the truncation depth."""
    step = np.ones_like(s_peak)
    s = s_peak + direction * step
    for _ in range(80):
        low = _log_integrand(s, A, B, C, D) <= L_peak - _TRUNCATION_NATS
        if np.all(low):
            return s
        step = np.where(low, step, 2 * step)
        s = np.where(low, s, s_peak + direction * step)
    raise ConvergenceError("could not bracket the mixture integrand")


def vg_logpdf_mixture(p: VgParams, x) -> np.ndarray:
    """Log density by trapezoidal quadrature in ``s = log G``.

    The integrand is log-concave in ``s``; it is truncated where it falls
    ``_TRUNCATION_NATS`` below its peak and the node count is doubled until
    successive estimates agree to ``_QUAD_RTOL``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    A, B, C, D = _mixture_terms(p, x)
    out = np.empty_like(x)
    # stationary point of L: B*y**2 - C*y - A = 0 with y = exp(s)
    y_peak = (C + np.sqrt(C * C + 4 * A * B)) / (2 * B)
    singular = y_peak <= 0
    out[singular] = np.inf
    ok = ~singular
    if not np.any(ok):
        return out
    A, D = A[ok], D[ok]
    s_peak = np.log(y_peak[ok])
    L_peak = _log_integrand(s_peak, A, B, C, D)
    lo = _bracket(A, B, C, D, s_peak, L_peak, -1.0)
    hi = _bracket(A, B, C, D, s_peak, L_peak, +1.0)

    n = 32
    u = np.linspace(0.0, 1.0, n + 1)
    width = hi - lo
    s = lo[:, None] + width[:, None] * u
    prev = special.logsumexp(_log_integrand(s, A[:, None], B, C, D[:, None]), axis=1) + np.log(width / n)
    active = np.arange(len(A))
    result = np.full(len(A), np.nan)
    while True:
        n *= 2
        if n > _QUAD_MAX_NODES:
            raise ConvergenceError(f"mixture quadrature did not converge for {len(active)} point(s)")
        u = np.linspace(0.0, 1.0, n + 1)
        s = lo[active, None] + width[active, None] * u
        cur = (special.logsumexp(_log_integrand(s, A[active, None], B, C, D[active, None]), axis=1)
               + np.log(width[active] / n))
        done = np.abs(cur - prev) < _QUAD_RTOL
        result[active[done]] = cur[done]
        active = active[~done]
        prev = cur[~done]
        if active.size == 0:
            break
    out[ok] = result
    return out


def vg_logpdf_bessel(p: VgParams, x) -> np.ndarray:
    """Log density from the modified-Bessel closed form."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lam = p.shape - 0.5
    root = math.sqrt(2 * p.b**2 / p.nu + p.a**2)
    d = np.abs(x - p.c)
    z = d * root / p.b**2
    const = (math.log(2.0) - math.log(p.b * math.sqrt(2 * math.pi))
             - p.shape * math.log(p.nu) - special.gammaln(p.shape))
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        kve = special.kve(lam, z)
        logk = np.log(kve) - z
        tail = lam * (np.log(d) - math.log(root))
        body = tail + logk
        tiny = ~np.isfinite(body)
        if np.any(tiny):
            if lam > 0:
                # z**lam * K_lam(z) -> Gamma(lam) * 2**(lam-1) as z -> 0
                body[tiny] = (special.gammaln(lam) - math.log(2.0)
                              + lam * (math.log(2.0) + 2 * math.log(p.b) - 2 * math.log(root)))
            else:
                body[tiny] = np.inf
    return const + p.a * (x - p.c) / p.b**2 + body


def vg_logpdf(p: VgParams, x, method: str = "mixture") -> np.ndarray:
    if method == "mixture":
        return vg_logpdf_mixture(p, x)
    if method == "bessel":
        return vg_logpdf_bessel(p, x)
    raise InputError(f"unknown density method {method!r}")


def vg_pdf(p: VgParams, x, method: str = "mixture"):
    x_arr = np.asarray(x, dtype=float)
    out = np.exp(vg_logpdf(p, x_arr, method))
    return float(out[0]) if x_arr.ndim == 0 else out


# -- distribution function --------------------------------------------------


def _monotone_spline(t, x, slope):
    """Cubic Hermite spline through knots whose abscissae increase strictly."""
    keep = [0]
    for i in range(1, len(t)):
        # knots closer than ~1e-9 in log-probability carry no information
        if t[i] > t[keep[-1]] + 1e-9:
            keep.append(i)
    keep = np.array(keep)
    return interpolate.CubicHermiteSpline(t[keep], x[keep], slope[keep], extrapolate=False)


class _CdfTable:
    """Panel-wise Gauss-Legendre integration of the density.

    Breakpoints are uniform (1/16 standard deviation) over a range that
    leaves roughly ``exp(-60)`` mass outside, plus a geometric refinement
    towards the cusp at ``c``. Cumulative sums from the left give the CDF and
    from the right the survival function, so both tails keep relative accuracy.
    """

    def __init__(self, p: VgParams):
        self.p = p
        t_lo, t_hi = vg_mgf_domain(p)
        sd = p.std
        lo = p.mean - 10 * sd - 60.0 / abs(t_lo)
        hi = p.mean + 10 * sd + 60.0 / t_hi
        uniform = np.arange(lo, hi + sd / 32, sd / 16)
        graded = p.c + np.concatenate([-(sd * 2.0 ** -np.arange(2, 45)), [0.0], sd * 2.0 ** -np.arange(2, 45)])
        edges = np.union1d(uniform, graded[(graded > lo) & (graded < hi)])
        self.edges = edges
        left, right = edges[:-1], edges[1:]
        half = 0.5 * (right - left)
        nodes = 0.5 * (right + left)[:, None] + half[:, None] * _GL_NODES
        dens = vg_pdf(p, nodes.ravel()).reshape(nodes.shape)
        panels = half * (dens @ _GL_WEIGHTS)
        self.cum_left = np.concatenate([[0.0], np.cumsum(panels)])
        self.cum_right = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]])
        self.total = float(self.cum_left[-1])
        mid = int(np.searchsorted(self.cum_left, 0.5))
        self.split = edges[min(mid, len(edges) - 1)]
        edge_pdf = vg_pdf(p, edges)
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (self.cum_left > 0) & (edge_pdf > 0)
            # x as a function of log F, slope dx/dlogF = F/f
            self._lower = _monotone_spline(
                np.log(self.cum_left[ok]), edges[ok], self.cum_left[ok] / edge_pdf[ok])
            ok = (self.cum_right > 0) & (edge_pdf > 0)
            # log S decreases along the edges; reverse to get increasing abscissae
            self._upper = _monotone_spline(
                np.log(self.cum_right[ok])[::-1], edges[ok][::-1],
                (-self.cum_right[ok] / edge_pdf[ok])[::-1])

    def _partial(self, a, b):
        """Integral of the density over ``[a, b]`` for arrays of short intervals."""
        half = 0.5 * (b - a)
        nodes = 0.5 * (a + b)[:, None] + half[:, None] * _GL_NODES
        dens = vg_pdf(self.p, nodes.ravel()).reshape(nodes.shape)
        return half * (dens @ _GL_WEIGHTS)

    def cdf_sf(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        F = np.zeros_like(x)
        S = np.zeros_like(x)
        edges = self.edges
        below = x <= edges[0]
        above = x >= edges[-1]
        S[below] = 1.0
        F[above] = 1.0
        inside = ~(below | above)
        lower = inside & (x <= self.split)
        upper = inside & ~lower
        if np.any(lower):
            k = np.searchsorted(edges, x[lower], side="right") - 1
            F[lower] = self.cum_left[k] + self._partial(edges[k], x[lower])
            S[lower] = 1.0 - F[lower]
        if np.any(upper):
            k = np.searchsorted(edges, x[upper], side="left")
            S[upper] = self.cum_right[k] + self._partial(x[upper], edges[k])
            F[upper] = 1.0 - S[upper]
        return np.clip(F, 0.0, 1.0), np.clip(S, 0.0, 1.0)

    def ppf_from_logs(self, log_lower, log_upper):
        """Quantiles given ``log u`` and ``log(1 - u)`` (both supplied for accuracy)."""
        log_lower = np.asarray(log_lower, dtype=float)
        log_upper = np.asarray(log_upper, dtype=float)
        out = np.empty(np.broadcast(log_lower, log_upper).shape)
        lower = log_lower <= math.log(0.5)
        lo_x = self._lower.x
        out[lower] = self._lower(np.clip(log_lower[lower], lo_x[0], lo_x[-1]))
        up_x = self._upper.x
        out[~lower] = self._upper(np.clip(log_upper[~lower], up_x[0], up_x[-1]))
        return out


@functools.lru_cache(maxsize=16)
def _cdf_table(p: VgParams) -> _CdfTable:
    return _CdfTable(p)


def vg_cdf(p: VgParams, x):
    x_arr = np.asarray(x, dtype=float)
    F, _ = _cdf_table(p).cdf_sf(x_arr)
    return float(F[0]) if x_arr.ndim == 0 else F


def vg_sf(p: VgParams, x):
    x_arr = np.asarray(x, dtype=float)
    _, S = _cdf_table(p).cdf_sf(x_arr)
    return float(S[0]) if x_arr.ndim == 0 else S


def vg_ppf_from_normal(p: VgParams, xi) -> np.ndarray:
    """Quantile transform ``F^{-1}(Phi(xi))`` for standard-normal scores ``xi``.

    Works in log-probability space on both tails, interpolating the
    cumulative table at its breakpoints.
    """
    xi = np.asarray(xi, dtype=float)
    table = _cdf_table(p)
    return table.ppf_from_logs(special.log_ndtr(xi), special.log_ndtr(-xi))


def vg_ppf(p: VgParams, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise InputError("probabilities must lie in (0, 1)")
    with np.errstate(divide="ignore"):
        return _cdf_table(p).ppf_from_logs(np.log(u), np.log1p(-u))


# -- fitting ------------------------------------------------------------------


def _mom_solution(mean, m2, k3, k4):
    """Exact inversion of mean, variance, third and fourth cumulants.

    With ``y = a**2 * nu`` the system reduces to one equation on ``(0, m2)``;
    the root closest to ``y = 0`` (least skew-driven) is taken. Returns None
    when no admissible root exists.
    """
    if k4 <= 0:
        return None
    if abs(k3) <= 1e-12 * m2**1.5:
        return VgParams(0.0, math.sqrt(m2), mean, k4 / (3 * m2 * m2))

    def g(y):
        return 3 * k3 * k3 * (m2 * m2 + 2 * y * m2 - y * y) - k4 * y * (3 * m2 - y) ** 2

    grid = m2 * np.linspace(1e-9, 1 - 1e-9, 2001)
    vals = g(grid)
    sign_change = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if sign_change.size == 0:
        return None
    i = sign_change[0]
    y = optimize.brentq(g, grid[i], grid[i + 1], xtol=1e-15 * m2, rtol=1e-14)
    a_nu = k3 / (3 * m2 - y)
    nu = a_nu * a_nu / y
    a = a_nu / nu
    b2 = m2 - y
    if nu <= 0 or b2 <= 0:
        return None
    return VgParams(a, math.sqrt(b2), mean - a, nu)


def vg_fit_mom(x) -> VgParams:
    """Method-of-moments parameters matching sample mean, variance, skewness, kurtosis.

    Falls back to a symmetric start when the moment system has no admissible
    solution (e.g. non-positive excess kurtosis).
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 50:
        raise InputError("need at least 50 observations")
    mean = float(x.mean())
    d = x - mean
    m2 = float(np.mean(d * d))
    if m2 <= 1e-28 * max(mean * mean, 1.0):
        raise DegenerateError("constant sample")
    k3 = float(np.mean(d**3))
    k4 = float(np.mean(d**4)) - 3 * m2 * m2
    sol = _mom_solution(mean, m2, k3, k4)
    if sol is not None:
        return sol
    kurt = k4 / (m2 * m2)
    return VgParams(0.0, math.sqrt(m2), mean, max(kurt / 3.0, 0.1))


@dataclass(frozen=True)
class VgFit:
    params: VgParams
    loglik: float
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        d = self.params.to_dict()
        d.update(loglik=self.loglik, converged=self.converged, iterations=self.iterations)
        return d


def vg_loglik(p: VgParams, x, method: str = "bessel") -> float:
    return float(np.sum(vg_logpdf(p, x, method)))


def _unpack(theta) -> VgParams:
    a, logb, c, lognu = theta
    return VgParams(a, math.exp(logb), c, math.exp(lognu))


def vg_fit_mle(x, init: VgParams | None = None, maxiter: int = 2000,
               xatol: float = 1e-6, method: str = "bessel") -> VgFit:
    """Maximum-likelihood fit by Nelder-Mead over ``(a, log b, c, log nu)``.

    Starts from ``init`` (method of moments by default). Stops when every
    simplex vertex is within ``xatol`` of the best one; if ``maxiter`` is
    reached first the best point is returned with ``converged=False`` and a
    :class:`RuntimeWarning`.
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 50:
        raise InputError("need at least 50 observations")
    if init is None:
        init = vg_fit_mom(x)
    sd = float(x.std())

    def objective(theta):
        try:
            p = _unpack(theta)
        except (InputError, OverflowError):
            return np.inf
        ll = vg_loglik(p, x, method)
        return -ll if np.isfinite(ll) else np.inf

    x0 = np.array([init.a, math.log(init.b), init.c, math.log(init.nu)])
    steps = np.diag([0.1 * sd, 0.1, 0.1 * sd, 0.2])
    simplex = np.vstack([x0, x0 + steps])
    res = optimize.minimize(
        objective, x0, method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": xatol, "fatol": np.inf,
                 "maxiter": maxiter, "maxfev": 4 * maxiter},
    )
    converged = bool(res.success)
    if not converged:
        warnings.warn(f"variance-gamma MLE did not converge: {res.message}", RuntimeWarning, stacklevel=2)
    return VgFit(_unpack(res.x), float(-res.fun), converged, int(res.nit))
