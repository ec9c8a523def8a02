"""
Secure two-party protocols.

Contains the private training protocol (Bob: model owner, Alice: data
owner), private classification with secure comparison (Bob and Carol),
the blinding samplers, the scale plan and the operation counters.
"""

from .counters import STEP_GROUPS, OpCounters, StepTimer
from .blinding import BlindingSampler
from .planning import ScalePlan, plan_scales
from .training import (
    AlicePhase,
    AliceTrainerState,
    BobPhase,
    BobTrainerState,
    aggregate_multi_party,
    alice_blind_margins,
    alice_encrypted_gradient,
    alice_finish_gradient,
    alice_unblind_and_scale,
    bob_exponentiate_share,
    bob_finish_round,
    bob_reciprocal,
    bob_start_round,
    run_protocol_round,
)
from .comparison import secure_compare
from .evaluation import BobEvaluator, CarolEvalSession, EvalShares, carol_inner_product, classify_private

__all__ = [
    'STEP_GROUPS',
    'OpCounters',
    'StepTimer',
    'BlindingSampler',
    'ScalePlan',
    'plan_scales',
    'AlicePhase',
    'AliceTrainerState',
    'BobPhase',
    'BobTrainerState',
    'aggregate_multi_party',
    'alice_blind_margins',
    'alice_encrypted_gradient',
    'alice_finish_gradient',
    'alice_unblind_and_scale',
    'bob_exponentiate_share',
    'bob_finish_round',
    'bob_reciprocal',
    'bob_start_round',
    'run_protocol_round',
    'secure_compare',
    'BobEvaluator',
    'CarolEvalSession',
    'EvalShares',
    'carol_inner_product',
    'classify_private',
]
