"""Signaling-game model of industry-sponsored capstone projects.

Three stakeholders interact: a university sets the course policy, a sponsor
chooses posture, mentoring and scope, and a student team picks effort and
orientation. The package evaluates outcomes and payoffs, computes best
responses and equilibria, and searches for welfare-maximizing policies.
"""

from .beliefs import (
    BeliefState,
    LikelihoodTable,
    OffPathRule,
    TypePriors,
    bayes_update,
    expectation_over_types,
    posterior_sponsor,
    posterior_university,
)
from .config import ActionGrids, GameConfig, RegimeThresholds
from .exceptions import CapstoneGameError, UnknownActionError, ValidationError
from .mechanism import WelfareWeights, expected_welfare, optimal_policy, weight_sweep
from .model import (
    ActionProfile,
    IPPolicy,
    Orientation,
    OutcomeCoefficients,
    OutcomeVector,
    PayoffWeights,
    Posture,
    SponsorAction,
    SponsorWeights,
    StudentAction,
    StudentCost,
    StudentType,
    StudentWeights,
    TypeProfile,
    UniversityAction,
    UniversityType,
    UniversityWeights,
    UtilityVector,
    outcomes,
    utilities,
)
from .scenario import (
    Regime,
    RegimeLabel,
    Scenario,
    ScenarioResult,
    classify_regime,
    dump_scenario,
    evaluate,
    load_scenario,
    preset,
    reproduce_all,
)
from .strategy import (
    backward_induction,
    pbe_search,
    sponsor_best_response,
    student_best_response,
    university_best_policy,
    verify_local_equilibrium,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
