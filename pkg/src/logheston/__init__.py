"""Log-scale stochastic volatility model for monthly VIX and stock returns.

Modules
-------
dataio      CSV ingestion, monthly averaging, VIX splicing, panel alignment
stats       moments, autocorrelation norms, Jarque-Bera, QQ/PP plot data
estimation  AR(1) fits on level and log scale, return regression, ADF test
vargamma    variance-gamma density, CDF, sampling, moments and MLE
tails       Hill tail-index estimates and the implied MGF interval
simulate    forward simulation and Monte Carlo experiments
cli         command-line pipeline
"""
from .errors import ConvergenceError, DataError, DegenerateError, InputError, LogHestonError, PreconditionError

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DataError",
    "DegenerateError",
    "InputError",
    "LogHestonError",
    "PreconditionError",
]
