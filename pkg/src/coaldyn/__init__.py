"""Coalition-structured public-goods dynamics.

Numerical engine for a three-strategy population game (cooperators,
defectors, outsiders) in which coalition members convene working groups
that produce a partly excludable benefit.  The package provides the
stage-game payoffs, hypergeometric fitness averaging, informed-player
marginal-gain analysis, deterministic replicator fields with an exact
information-cost correction, and finite-population stochastic dynamics
(a sparse imitation Markov chain plus an individual-based simulator).

Set ``COALDYN_THREADS`` to cap BLAS/numba thread counts; it is translated
to the usual library-specific variables before numpy is first imported.
"""

import os as _os

_threads = _os.environ.get("COALDYN_THREADS")
if _threads:
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "VECLIB_MAXIMUM_THREADS",
        "NUMBA_NUM_THREADS",
    ):
        _os.environ.setdefault(_var, _threads)
del _os, _threads

from .benefits import BenefitFunction
from .errors import CapacityError, CoaldynError, ConfigError, NonConvergenceError
from .game import (
    EffectiveShares,
    GameParams,
    PopulationState,
    effective_shares,
    group_size,
    marginal_return,
    payoff,
    relative_benefit,
)
from .informed import InformedFlow, MarginalGains, StateClass, classify_state, informed_field, marginal_gains
from .markov import (
    MarkovModel,
    MonteCarloResult,
    SelectionGradient,
    StateIndex,
    StationaryResult,
    StationarySummary,
    build_chain,
    imitation_probability,
    monte_carlo,
    selection_gradient,
    stationary,
)
from .replicator import (
    FixedPoint,
    FlowField,
    InformationCost,
    find_fixed_points,
    flow_field,
    information_cost,
    mean_benefit,
    mean_return,
    replicator_field,
)
from .sampling import FitnessTriple, HypergeomSpec, fitness, fitness_at, hypergeom_pmf, pmf_row

__version__ = "0.1.0"

__all__ = [
    "BenefitFunction",
    "CapacityError",
    "CoaldynError",
    "ConfigError",
    "EffectiveShares",
    "FitnessTriple",
    "FixedPoint",
    "FlowField",
    "GameParams",
    "HypergeomSpec",
    "InformationCost",
    "InformedFlow",
    "MarginalGains",
    "MarkovModel",
    "MonteCarloResult",
    "NonConvergenceError",
    "PopulationState",
    "SelectionGradient",
    "StateClass",
    "StateIndex",
    "StationaryResult",
    "StationarySummary",
    "build_chain",
    "classify_state",
    "effective_shares",
    "find_fixed_points",
    "fitness",
    "fitness_at",
    "flow_field",
    "group_size",
    "hypergeom_pmf",
    "imitation_probability",
    "informed_field",
    "information_cost",
    "marginal_gains",
    "marginal_return",
    "mean_benefit",
    "mean_return",
    "monte_carlo",
    "payoff",
    "pmf_row",
    "relative_benefit",
    "replicator_field",
    "selection_gradient",
    "stationary",
    "__version__",
]
