"""Numerical laboratory for benchmark-outperformance investing with
leveraged and vanilla ETFs: jump-diffusion market models, closed-form
optimal feedback controls, single-period grid search, bootstrap return
panels, a constrained neural-network policy solver, and performance
analytics.
"""

__version__ = "0.1.0"

from . import bootstrap, closed_form, evaluation, lump_sum, market
from .closed_form import BenchmarkPolicy, InvestmentParams
from .market import EtfSpec, KouParams

__all__ = [
    "bootstrap",
    "closed_form",
    "evaluation",
    "lump_sum",
    "market",
    "BenchmarkPolicy",
    "InvestmentParams",
    "EtfSpec",
    "KouParams",
    "__version__",
]
