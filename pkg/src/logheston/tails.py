"""Hill tail-index estimates for ``exp(W)`` computed on the log scale ``W``."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateError, InputError, PreconditionError

DEFAULT_CUTOFF = 100


def _sorted(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or not np.all(np.isfinite(w)):
        raise InputError("expected a finite 1-D sequence")
    return np.sort(w, kind="stable")


def _check_cutoff(r: int, n: int) -> None:
    if not 1 <= r <= n - 2:
        raise InputError(f"cutoff r={r} outside [1, {n - 2}]")


def _hill_sorted(ws: np.ndarray, r: int) -> tuple[float, float]:
    n = len(ws)
    # fsum is exactly rounded, so w -> -w swaps the two estimates bit for bit
    inv_left = abs(math.fsum(ws[:r]) / r - ws[r])
    inv_right = math.fsum(ws[n - r:]) / r - ws[n - r - 1]
    if inv_left == 0.0 or inv_right == 0.0:
        raise DegenerateError("zero denominator: tail values are all equal")
    return float(1.0 / inv_left), float(1.0 / inv_right)


def hill_estimates(w, r: int = DEFAULT_CUTOFF) -> tuple[float, float]:
    """Left and right Hill indices ``(gamma_left, gamma_right)`` of ``exp(w)``.

    ``1/gamma_right`` is the mean of the top ``r`` order statistics of ``w``
    minus the ``(r+1)``-th largest; ``1/gamma_left`` is the magnitude of the
    mirror-image quantity for the bottom ``r``.
    """
    ws = _sorted(w)
    _check_cutoff(r, len(ws))
    return _hill_sorted(ws, r)


@dataclass(frozen=True)
class HillCurve:
    r_values: np.ndarray
    gamma_left: np.ndarray
    gamma_right: np.ndarray

    def at(self, r: int) -> tuple[float, float]:
        i = int(np.searchsorted(self.r_values, r))
        if i >= len(self.r_values) or self.r_values[i] != r:
            raise InputError(f"cutoff {r} not on the curve")
        return float(self.gamma_left[i]), float(self.gamma_right[i])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["r", "gamma_left", "gamma_right"])
            for r, gl, gr in zip(self.r_values, self.gamma_left, self.gamma_right):
                w.writerow([int(r), repr(float(gl)), repr(float(gr))])


def hill_curve(w, r_min: int = 10, r_max: int = 200, step: int = 1) -> HillCurve:
    """Hill estimates for every cutoff in ``range(r_min, r_max + 1, step)``."""
    if step < 1:
        raise InputError("step must be positive")
    if r_min > r_max:
        raise InputError("r_min exceeds r_max")
    ws = _sorted(w)
    _check_cutoff(r_min, len(ws))
    _check_cutoff(r_max, len(ws))
    rs = np.arange(r_min, r_max + 1, step)
    n = len(ws)
    # running sums give every cutoff in O(n)
    head = np.cumsum(ws)
    tail = np.cumsum(ws[::-1])
    inv_left = np.abs(head[rs - 1] / rs - ws[rs])
    inv_right = tail[rs - 1] / rs - ws[n - rs - 1]
    if np.any(inv_left == 0) or np.any(inv_right == 0):
        raise DegenerateError("zero denominator: tail values are all equal")
    return HillCurve(rs, 1.0 / inv_left, 1.0 / inv_right)


def mgf_interval_from_hill(gamma_left: float, gamma_right: float) -> tuple[float, float]:
    """Interval ``(-(gamma_left - 1), gamma_right - 1)`` on which ``E[exp(t W)]`` is taken finite."""
    if gamma_left <= 1 or gamma_right <= 1:
        raise PreconditionError("tail index must exceed 1 for a non-empty MGF interval")
    return (-(gamma_left - 1.0), gamma_right - 1.0)
