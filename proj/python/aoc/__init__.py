"""Age-of-information bounds from min-plus network calculus.

Thin wrapper over the C++ core: analytic worst-case and statistical bounds
for periodic and Poisson sources, plus a trace-level queueing simulator for
validating them.
"""

from ._core import (
    BoundParams,
    BoundResult,
    MarkovOnOff,
    PeriodicSource,
    PoissonSource,
    QuantileRun,
    ScenarioError,
    bound_deterministic,
    bound_periodic,
    bound_poisson,
    bound_priority,
    empirical_quantile,
    markov_from_stats,
    preset_files,
    quantile_reliable,
    simulate_periodic_markov,
)

__all__ = [
    "BoundParams",
    "BoundResult",
    "MarkovOnOff",
    "PeriodicSource",
    "PoissonSource",
    "QuantileRun",
    "ScenarioError",
    "bound_deterministic",
    "bound_periodic",
    "bound_poisson",
    "bound_priority",
    "empirical_quantile",
    "markov_from_stats",
    "preset_files",
    "quantile_reliable",
    "simulate_periodic_markov",
]
