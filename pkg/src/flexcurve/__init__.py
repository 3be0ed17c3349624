"""Certain-equivalent flexibility analysis for constant-risk-averse decision-makers.

Compute CE(X|kr) curves over a distortion parameter k, classify pairs of
prospects into flexibility orders, roll back decision trees, and build the
standard robust / adaptive scenario templates.
"""

from .prospects import (
    Affine,
    Discrete,
    Gaussian,
    IndependentSum,
    Prospect,
    ProspectStats,
    add_independent,
    log_mgf,
    make_discrete,
    make_gaussian,
    scale,
    shift,
    stats,
)
from .valuation import (
    FlexibilityCurve,
    certain_equivalent,
    check_risk_aversion,
    flexibility_curve,
    mean_variance_approximation,
    money_of_utility,
    utility_of_money,
)
from .orders import (
    EnvelopeSegment,
    Flexibility,
    FlexibilityVerdict,
    TailRelation,
    TailVerdict,
    UnsupportedProspectError,
    compare,
    find_threshold,
    tail_order,
    upper_envelope,
)
from .trees import (
    ChanceNode,
    DecisionNode,
    DecisionTree,
    Policy,
    TerminalNode,
    enumerate_policies,
    node_curve,
    policy_prospect,
    rollback,
)
from .scenarios import (
    AdaptiveSpec,
    Commitment,
    StiglerSpec,
    adaptive_template,
    stigler_scenario,
)
from .model_io import ModelDocument, ModelError, emit_model, parse_k_grid, parse_model

__version__ = "0.1.0"
