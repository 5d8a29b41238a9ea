"""Bandwidth, pilot overhead, and power allocation for noncoherent wideband links.

The central question: given a received power budget and a channel coherence
block, how much bandwidth is actually beneficial once channel estimation has
to be paid for in-band? The `core` module answers it for a single link,
`beamform` maps antenna arrays onto the same scalar problem, `linkbudget`
turns deployment parameters into received power densities, `baselines`
provides the reference schemes to compare against, and `allocate` splits
pooled budgets across users without making anyone worse off.
"""

from .allocate import (
    Allocation,
    AllocationEntry,
    UserLink,
    allocate_group,
    allocate_pair,
    baseline_rates,
)
from .beamform import (
    ArrayConfig,
    SubstitutedProblem,
    closed_form_mimo,
    mimo_rate,
    mimo_rate_fixed_bandwidth,
    solve_mimo,
    solve_with_gains,
    substitute,
)
from .core import (
    CoherenceBlock,
    EstimationQuality,
    OperatingPoint,
    PowerDensity,
    alpha_given_rho,
    closed_form_first_order,
    closed_form_refined,
    condition_residuals,
    discretize,
    effective_snr,
    estimation_quality,
    exhaustive_search,
    rate,
    rate_fixed_bandwidth,
    solve_continuous,
)
from .errors import ConfigError, SolverError
from .fading import FadingModel
from .linkbudget import LinkBudget, PathLossModel, eirp_table, path_loss_db, power_density

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "AllocationEntry",
    "ArrayConfig",
    "CoherenceBlock",
    "ConfigError",
    "EstimationQuality",
    "FadingModel",
    "LinkBudget",
    "OperatingPoint",
    "PathLossModel",
    "PowerDensity",
    "SolverError",
    "SubstitutedProblem",
    "UserLink",
    "allocate_group",
    "allocate_pair",
    "alpha_given_rho",
    "baseline_rates",
    "closed_form_first_order",
    "closed_form_mimo",
    "closed_form_refined",
    "condition_residuals",
    "discretize",
    "effective_snr",
    "eirp_table",
    "estimation_quality",
    "exhaustive_search",
    "mimo_rate",
    "mimo_rate_fixed_bandwidth",
    "path_loss_db",
    "power_density",
    "rate",
    "rate_fixed_bandwidth",
    "solve_continuous",
    "solve_mimo",
    "solve_with_gains",
    "substitute",
    "__version__",
]
