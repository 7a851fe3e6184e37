"""Q-EMCQ: Q-learning operator selection over exponential Monte Carlo acceptance.

Applied to t-way covering-array generation and to software module
clustering by modularization quality.
"""

__version__ = "0.1.0"

from .hh_core import (  # noqa: E402
    OperatorId,
    QTable,
    RunConfig,
    SearchProblem,
    SearchResult,
    Selector,
    learning_rate,
    metropolis_accept,
    reward,
    run_search,
)
from .covering_array import (  # noqa: E402
    CoveringArray,
    ParameterModel,
    enumerate_interactions,
    generate,
    lower_bound,
    row_fitness,
    verify,
)
from .clustering import (  # noqa: E402
    ModuleDependencyGraph,
    brute_force_mq,
    maximize_mq,
    mf,
    mq,
    normalize_labels,
)

__all__ = [
    "CoveringArray",
    "ModuleDependencyGraph",
    "OperatorId",
    "ParameterModel",
    "QTable",
    "RunConfig",
    "SearchProblem",
    "SearchResult",
    "Selector",
    "brute_force_mq",
    "enumerate_interactions",
    "generate",
    "learning_rate",
    "lower_bound",
    "maximize_mq",
    "metropolis_accept",
    "mf",
    "mq",
    "normalize_labels",
    "reward",
    "row_fitness",
    "run_search",
    "verify",
]
