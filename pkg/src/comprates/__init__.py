"""Simulation of adversarial sample-compression constructions and their agnostic rates."""

__version__ = "0.1.0"

from .construction import (  # noqa: E402
    BlockGeometry,
    ConfigurationError,
    Variant,
    bit,
    build_distribution,
    code_to_hypothesis,
    epsilon,
    eval_block_hypothesis,
    hamming_delta,
    make_geometry,
    optimal_code,
    reconstruct_multiset,
    reconstruct_sequence,
    sample_sign_matrix,
)
from .core import (  # noqa: E402
    FiniteLabelDistribution,
    Hypothesis,
    LabeledExample,
    Sample,
    conditional_risk,
    empirical_risk,
    sample_dataset,
    true_risk,
)
from .estimators import (  # noqa: E402
    FLOOR_CONSTANT,
    Measure,
    RateEstimate,
    erm_blockwise,
    erm_naive,
    fit_rate_law,
    monte_carlo,
    reachable_min_true_risk,
    run_trial,
    uc_sup_exact,
    upper_bound_uc,
)
