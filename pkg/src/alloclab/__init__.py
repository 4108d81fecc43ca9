"""Response-adaptive randomization laboratory.

Sequential allocation rules for K-arm binary-response trials (stay/switch
chains, reward urns, drop-the-loser, target-steering biased coins), their
closed-form limit allocations and fluctuation variances, a delayed-
response simulation engine with a compiled core, and a Monte Carlo
harness that checks the formulas against simulation.
"""

from .core import (
    ADD_ONE_SCHEME,
    DEFAULT_SCHEME,
    BernoulliArms,
    EstimatorScheme,
    ParamEstimate,
    RandomStream,
    TrialState,
    draw_bernoulli,
    estimate,
    one_hot,
    record,
    resolve_outcome,
)
from .delay import DelayModel, DelayStats, run_delayed_trial
from .engine import DesignSpec, TrialResult, active_backend, have_compiled_kernels, run_trial
from .targets import TargetAllocation

__version__ = "0.1.0"

__all__ = [
    "ADD_ONE_SCHEME",
    "DEFAULT_SCHEME",
    "BernoulliArms",
    "EstimatorScheme",
    "ParamEstimate",
    "RandomStream",
    "TrialState",
    "draw_bernoulli",
    "estimate",
    "one_hot",
    "record",
    "resolve_outcome",
    "DelayModel",
    "DelayStats",
    "run_delayed_trial",
    "DesignSpec",
    "TrialResult",
    "active_backend",
    "have_compiled_kernels",
    "run_trial",
    "TargetAllocation",
    "__version__",
]
