"""
extremescore: proper scoring rules for extreme-value forecasts.

Usage:
    from extremescore import GevParams, ScoreRule, evaluate_score

    evaluate_score(ScoreRule.swcrps(q=2.0), GevParams(mu=0, sigma=1, gamma=0.12), 3.1)
"""

from extremescore.distributions import BenchmarkForecast, Ensemble, GevParams, PgevParams, TruncatedGev
from extremescore.rules import ScoreRule, evaluate_score
from extremescore.weights import WeightSpec

__version__ = "0.1.0"

__all__ = [
    "BenchmarkForecast",
    "Ensemble",
    "GevParams",
    "PgevParams",
    "TruncatedGev",
    "ScoreRule",
    "WeightSpec",
    "evaluate_score",
    "__version__",
]
