"""Random-order greedy for combinatorial auctions with vertex-cover bidders.

Modules
-------
valuations       value oracles (vertex cover, additive) and a submodularity checker
instances        the lower-bound family, random instances, JSON instance files
greedy           the greedy loop for a fixed order, scalar and batched
optimal          exhaustive optimal welfare
expectation      exact and Monte Carlo expected welfare, ratio sweeps
instrumentation  per-step analysis quantities and inequality checks
cli              ``rogauction`` command-line driver
"""

__version__ = "0.1.0"

from .errors import BudgetExceeded, InputError  # noqa: E402
from .valuations import (  # noqa: E402
    AdditiveValuation,
    Graph,
    VertexCoverValuation,
    check_monotone_submodular,
    marginal,
    value,
)
from .instances import (  # noqa: E402
    Instance,
    Player,
    load_instance,
    paper_lower_bound_instance,
    paper_opt_bundles,
    random_instance,
    save_instance,
)
from .greedy import LOWEST_INDEX, Allocation, TieRule, random_permutation, run_greedy  # noqa: E402
from .optimal import OptResult, brute_force_opt, certified_opt, welfare_of  # noqa: E402
from .expectation import (  # noqa: E402
    PAPER_FAMILY,
    exact_expectation,
    monte_carlo,
    ratio_sweep,
)
