"""The university's policy-design problem.

For every candidate policy the followers' equilibrium responses are computed
by the best-response solvers, so the incentive constraints hold by
construction. The university then picks the policy maximizing

    E[U_U] + lambda * E[U_S] + eta * E[U_C]

under the common prior.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .beliefs import TypePriors, expectation_over_types
from .config import ActionGrids, GameConfig
from .exceptions import ValidationError
from .model import TypeProfile, UniversityAction, UniversityType, utilities
from .strategy import ResponseMap, first_argmax, respond


@dataclass(frozen=True)
class WelfareWeights:
    lam: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        for name in ("lam", "eta"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ValidationError(f"welfare weight must be a nonnegative real, got {v!r}", name)
            object.__setattr__(self, name, float(v))

    def combine(self, e_uu: float, e_us: float, e_uc: float) -> float:
        return e_uu + self.lam * e_us + self.eta * e_uc


@dataclass(frozen=True)
class WelfareRow:
    policy: UniversityAction
    e_university: float
    e_students: float
    e_sponsor: float
    welfare: float


@dataclass(frozen=True)
class WelfareSurface:
    rows: tuple[WelfareRow, ...]
    weights: WelfareWeights
    university_type: UniversityType | None

    def best(self) -> WelfareRow:
        j = int(first_argmax(np.array([r.welfare for r in self.rows])))
        return self.rows[j]


def _conditioned(priors: TypePriors, university_type: UniversityType | None) -> TypePriors:
    # None averages over p_U; otherwise the university conditions on its own type.
    return priors if university_type is None else priors.condition_university(university_type)


def induced_responses(policy: UniversityAction, config: GameConfig,
                      priors: TypePriors | None = None,
                      grids: ActionGrids | None = None) -> ResponseMap:
    return respond(policy, config, grids or config.grids, priors or config.priors)


def expected_utilities(policy: UniversityAction, responses: ResponseMap, priors: TypePriors,
                       config: GameConfig) -> tuple[float, float, float]:
    """``(E[U_U], E[U_S], E[U_C])`` along the response map under ``priors``."""
    theta_index = {t: k for k, t in enumerate(responses.theta_grid)}

    def payoffs(types: TypeProfile) -> np.ndarray:
        t = theta_index[types.sponsor]
        profile = responses.profile(responses.theta_grid[t], types.student.label)
        if profile.university != policy:
            raise ValidationError("response map belongs to a different policy", "responses")
        u = utilities(profile, types, config)
        return np.array([u.university, u.students, u.sponsor])

    e = expectation_over_types(priors, payoffs, config.student_costs)
    return float(e[0]), float(e[1]), float(e[2])


def expected_welfare(policy: UniversityAction, responses: ResponseMap, weights: WelfareWeights,
                     priors: TypePriors, config: GameConfig,
                     university_type: UniversityType | None = None) -> tuple[float, float, float, float]:
    """Returns ``(E_UU, E_US, E_UC, welfare)``."""
    e_uu, e_us, e_uc = expected_utilities(policy, responses, _conditioned(priors, university_type), config)
    return e_uu, e_us, e_uc, weights.combine(e_uu, e_us, e_uc)


def _policy_expectations(config: GameConfig, priors: TypePriors, grids: ActionGrids,
                         university_type: UniversityType | None, n_jobs: int
                         ) -> list[tuple[UniversityAction, tuple[float, float, float]]]:
    policies = grids.policies()
    if not policies:
        raise ValidationError("policy grid is empty", "grids")
    cond = _conditioned(priors, university_type)

    def evaluate(policy):
        rm = respond(policy, config, grids, priors)
        return policy, expected_utilities(policy, rm, cond, config)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            # map() yields in submission order, keeping the reduction deterministic
            return list(pool.map(evaluate, policies))
    return [evaluate(p) for p in policies]


def _surface(table, weights: WelfareWeights, university_type) -> WelfareSurface:
    rows = tuple(WelfareRow(p, e[0], e[1], e[2], weights.combine(*e)) for p, e in table)
    return WelfareSurface(rows, weights, university_type)


def optimal_policy(config: GameConfig, priors: TypePriors | None = None,
                   weights: WelfareWeights = WelfareWeights(), grids: ActionGrids | None = None,
                   university_type: UniversityType | None = UniversityType.HIGH,
                   n_jobs: int = 1) -> tuple[UniversityAction, WelfareSurface]:
    """Welfare-maximizing policy and the full welfare surface.

    ``university_type=None`` averages the university payoff over ``p_U``
    instead of conditioning on one type.
    """
    grids = grids or config.grids
    priors = priors or config.priors
    table = _policy_expectations(config, priors, grids, university_type, n_jobs)
    surface = _surface(table, weights, university_type)
    return surface.best().policy, surface


@dataclass(frozen=True)
class SweepRow:
    lam: float
    eta: float
    policy: UniversityAction
    welfare: float
    e_university: float
    e_students: float
    e_sponsor: float


def weight_sweep(config: GameConfig, priors: TypePriors | None = None,
                 lambdas: Iterable[float] = (0.0, 0.5, 1.0), etas: Iterable[float] = (0.0, 0.5, 1.0),
                 grids: ActionGrids | None = None,
                 university_type: UniversityType | None = UniversityType.HIGH,
                 n_jobs: int = 1) -> list[SweepRow]:
    """Optimal policy for every ``(lambda, eta)`` pair, ordered by ``(lambda, eta)``.

    Follower responses do not depend on the welfare weights, so the policy
    expectations are computed once and re-weighted per pair.
    """
    grids = grids or config.grids
    priors = priors or config.priors
    pairs: Sequence[tuple[float, float]] = sorted(product(lambdas, etas))
    for lam, eta in pairs:
        WelfareWeights(lam, eta)
    table = _policy_expectations(config, priors, grids, university_type, n_jobs)
    rows = []
    for lam, eta in pairs:
        best = _surface(table, WelfareWeights(lam, eta), university_type).best()
        rows.append(SweepRow(float(lam), float(eta), best.policy, best.welfare,
                             best.e_university, best.e_students, best.e_sponsor))
    return rows
