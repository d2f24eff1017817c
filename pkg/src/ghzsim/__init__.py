"""Loss-tolerant GHZ-state distribution over star-shaped photonic networks.

Sparse Fock-space simulation of the single-attempt protocol (sources, fiber
loss, a fixed central beamsplitter circuit, realistic detectors and
post-selection), closed-form rate/fidelity expressions with their inversions,
a brute-force oracle for cross-checking, and entanglement purification of
the distributed states.
"""

from .analytics import (
    analytic_fidelity,
    analytic_rate,
    crossover_distance,
    direct_transmission_rate,
    pattern_probability,
    rate_breakdown,
    vacuum_weight_for_fidelity,
)
from .channels import (
    DetectorModel,
    IDEAL_PNRD,
    LossChannel,
    apply_loss,
    eta_from_distance,
)
from .fock import MixedState, PureState, sqrt_fidelity
from .oracle import brute_force_conditional, brute_force_pattern_prob, \
    monte_carlo_rate
from .protocol import (
    ConditionalResult,
    GhzTarget,
    ProtocolConfig,
    aggregate_rate,
    enumerate_success_patterns,
    ghz_target_for_pattern,
    pattern_probabilities,
    run_attempt,
)
from .purification import PurificationOutcome, epl_purify, purify_pair
from .sources import (
    BellSource,
    CoherentSource,
    SpdcSource,
    bell_pair,
    lam_from_squeezing_db,
    tmsv_truncated,
)
from .verify import CheckResult, run_checks

__version__ = "0.1.0"

__all__ = [
    "analytic_fidelity", "analytic_rate", "crossover_distance",
    "direct_transmission_rate", "pattern_probability", "rate_breakdown",
    "vacuum_weight_for_fidelity",
    "DetectorModel", "IDEAL_PNRD", "LossChannel", "apply_loss",
    "eta_from_distance",
    "MixedState", "PureState", "sqrt_fidelity",
    "brute_force_conditional", "brute_force_pattern_prob",
    "monte_carlo_rate",
    "ConditionalResult", "GhzTarget", "ProtocolConfig", "aggregate_rate",
    "enumerate_success_patterns", "ghz_target_for_pattern",
    "pattern_probabilities", "run_attempt",
    "PurificationOutcome", "epl_purify", "purify_pair",
    "BellSource", "CoherentSource", "SpdcSource", "bell_pair",
    "lam_from_squeezing_db", "tmsv_truncated",
    "CheckResult", "run_checks",
    "__version__",
]
