"""Common priors, likelihood tables and Bayes-rule posteriors over types.

The sponsor's continuous type lives on a finite grid of points in ``[0, 1]``
carrying prior weights, so every integral over that type becomes a weighted
sum over the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .exceptions import UnknownActionError, ValidationError
from .model import StudentCost, StudentType, TypeProfile, UniversityAction, UniversityType

PRIOR_TOL = 1e-12
ROW_TOL = 1e-9


class OffPathRule(str, Enum):
    """Belief assigned when the observed action had zero probability."""

    REVERT_TO_PRIOR = "prior"
    UNIFORM = "uniform"


def _probabilities(values: Sequence[float], path: str) -> tuple[float, ...]:
    out = []
    for k, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"expected a finite probability, got {v!r}", f"{path}[{k}]")
        if v < 0:
            raise ValidationError(f"probability must be nonnegative, got {v!r}", f"{path}[{k}]")
        out.append(float(v))
    if not out:
        raise ValidationError("distribution is empty", path)
    if abs(math.fsum(out) - 1.0) > PRIOR_TOL:
        raise ValidationError(f"probabilities must sum to 1, got {math.fsum(out)!r}", path)
    return tuple(out)


def uniform_theta_grid(n_points: int) -> tuple[float, ...]:
    if n_points < 1:
        raise ValidationError(f"need at least one grid point, got {n_points}", "priors.sponsor.points")
    if n_points == 1:
        return (0.5,)
    return tuple(k / (n_points - 1) for k in range(n_points))


@dataclass(frozen=True)
class TypePriors:
    """Independent priors ``p_U``, ``f_C`` (on a grid) and ``p_S``.

    ``university`` and ``student`` are ordered (low, high) following
    :class:`UniversityType` and :class:`StudentCost`.
    """

    university: tuple[float, float]
    sponsor_grid: tuple[float, ...]
    sponsor_weights: tuple[float, ...]
    student: tuple[float, float]

    def __post_init__(self):
        uni = _probabilities(self.university, "priors.university")
        stu = _probabilities(self.student, "priors.student")
        if len(uni) != 2 or len(stu) != 2:
            raise ValidationError("university and student priors need exactly two entries", "priors")
        grid = tuple(float(t) for t in self.sponsor_grid)
        if not grid:
            raise ValidationError("sponsor type grid is empty", "priors.sponsor.grid")
        if any(not (0.0 <= t <= 1.0) for t in grid):
            raise ValidationError("sponsor type grid must lie in [0, 1]", "priors.sponsor.grid")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("sponsor type grid must be strictly increasing", "priors.sponsor.grid")
        weights = _probabilities(self.sponsor_weights, "priors.sponsor.weights")
        if len(weights) != len(grid):
            raise ValidationError(
                f"{len(weights)} weights for {len(grid)} grid points", "priors.sponsor.weights"
            )
        object.__setattr__(self, "university", uni)
        object.__setattr__(self, "student", stu)
        object.__setattr__(self, "sponsor_grid", grid)
        object.__setattr__(self, "sponsor_weights", weights)

    @classmethod
    def uniform(cls, n_theta: int = 101, university=(0.5, 0.5), student=(0.5, 0.5)) -> TypePriors:
        grid = uniform_theta_grid(n_theta)
        return cls(tuple(university), grid, (1.0 / len(grid),) * len(grid), tuple(student))

    @classmethod
    def point_mass(cls, types: TypeProfile) -> TypePriors:
        uni = tuple(1.0 if t is types.university else 0.0 for t in UniversityType)
        stu = tuple(1.0 if c is types.student.label else 0.0 for c in StudentCost)
        return cls(uni, (types.sponsor,), (1.0,), stu)

    def condition_university(self, utype: UniversityType) -> TypePriors:
        """The same priors with ``p_U`` replaced by a point mass on ``utype``."""
        uni = tuple(1.0 if t is utype else 0.0 for t in UniversityType)
        return TypePriors(uni, self.sponsor_grid, self.sponsor_weights, self.student)

    def p_university(self, utype: UniversityType) -> float:
        return self.university[list(UniversityType).index(utype)]

    def p_student(self, label: StudentCost) -> float:
        return self.student[list(StudentCost).index(label)]

    @property
    def n_theta(self) -> int:
        return len(self.sponsor_grid)


class LikelihoodTable:
    """Behavioral strategy ``l(a | type)`` as a (types x actions) matrix.

    Each row is a distribution over ``actions``.
    """

    def __init__(self, types: Sequence[Hashable], actions: Sequence[Hashable], probs):
        self.types = tuple(types)
        self.actions = tuple(actions)
        matrix = np.array(probs, dtype=float)
        if matrix.shape != (len(self.types), len(self.actions)):
            raise ValidationError(
                f"likelihood matrix has shape {matrix.shape}, expected "
                f"{(len(self.types), len(self.actions))}", "likelihood"
            )
        if not np.all(np.isfinite(matrix)) or np.any(matrix < 0):
            raise ValidationError("likelihoods must be finite and nonnegative", "likelihood")
        for k, row in enumerate(matrix):
            if abs(row.sum() - 1.0) > ROW_TOL:
                raise ValidationError(
                    f"row for type {self.types[k]!r} sums to {row.sum()!r}, not 1", "likelihood"
                )
        matrix.setflags(write=False)
        self.matrix = matrix
        self._action_index = {a: j for j, a in enumerate(self.actions)}
        if len(self._action_index) != len(self.actions):
            raise ValidationError("duplicate actions in likelihood table", "likelihood")

    @classmethod
    def from_pure(cls, types: Sequence[Hashable], actions: Sequence[Hashable],
                  choice: Callable[[Hashable], Hashable]) -> LikelihoodTable:
        """Degenerate table where type ``t`` plays ``choice(t)`` with probability one."""
        index = {a: j for j, a in enumerate(actions)}
        probs = np.zeros((len(types), len(actions)))
        for k, t in enumerate(types):
            a = choice(t)
            if a not in index:
                raise UnknownActionError(a)
            probs[k, index[a]] = 1.0
        return cls(types, actions, probs)

    def column(self, action: Hashable) -> np.ndarray:
        try:
            return self.matrix[:, self._action_index[action]]
        except KeyError:
            raise UnknownActionError(action) from None

    def __repr__(self):
        return f"LikelihoodTable({len(self.types)} types x {len(self.actions)} actions)"


def bayes_update(prior: np.ndarray, likelihood: np.ndarray,
                 off_path_rule: OffPathRule = OffPathRule.REVERT_TO_PRIOR) -> np.ndarray:
    """Normalized ``prior * likelihood``; falls back to ``off_path_rule`` at zero mass."""
    prior = np.asarray(prior, dtype=float)
    joint = prior * np.asarray(likelihood, dtype=float)
    total = joint.sum()
    if total > 0:
        return joint / total
    if OffPathRule(off_path_rule) is OffPathRule.UNIFORM:
        return np.full(prior.shape, 1.0 / prior.size)
    return prior / prior.sum()


def posterior_university(prior: TypePriors, lik: LikelihoodTable, observed: UniversityAction,
                         off_path_rule: OffPathRule = OffPathRule.REVERT_TO_PRIOR
                         ) -> dict[UniversityType, float]:
    if set(lik.types) != set(UniversityType):
        raise ValidationError("likelihood rows must be the two university types", "likelihood")
    col = lik.column(observed)
    ell = np.array([col[lik.types.index(t)] for t in UniversityType])
    post = bayes_update(np.array(prior.university), ell, off_path_rule)
    return {t: float(p) for t, p in zip(UniversityType, post)}


def posterior_sponsor(prior: TypePriors,
                      lik: LikelihoodTable | Mapping[UniversityAction, LikelihoodTable],
                      observed_policy: UniversityAction, observed_sponsor,
                      off_path_rule: OffPathRule = OffPathRule.REVERT_TO_PRIOR) -> np.ndarray:
    """Posterior weights over ``prior.sponsor_grid`` after seeing the sponsor's move.

    ``lik`` is either one table (already conditioned on the policy) or a
    mapping from policy to table.
    """
    if not isinstance(lik, LikelihoodTable):
        try:
            lik = lik[observed_policy]
        except KeyError:
            raise UnknownActionError(observed_policy) from None
    if tuple(float(t) for t in lik.types) != prior.sponsor_grid:
        raise ValidationError("likelihood rows must match the sponsor type grid", "likelihood")
    ell = lik.column(observed_sponsor)
    return bayes_update(np.array(prior.sponsor_weights), ell, off_path_rule)


@dataclass(frozen=True)
class BeliefState:
    """Posteriors held at one student information set ``(a_U, a_C)``."""

    mu_university: tuple[float, float]
    mu_sponsor: tuple[float, ...]
    off_path_rule: OffPathRule = OffPathRule.REVERT_TO_PRIOR
    on_path: bool = True


def expectation_over_types(priors: TypePriors, f: Callable[[TypeProfile], float],
                           costs: Mapping[StudentCost, float]):
    """Expectation of ``f`` under the product prior ``p_U * f_C * p_S``.

    Summation runs university type outermost, then sponsor grid, then student
    type; zero-probability cells are skipped. ``f`` may return an array, in
    which case the expectation is taken componentwise.
    """
    students = [StudentType(label, costs[label]) for label in StudentCost]
    total = 0.0
    for utype, pu in zip(UniversityType, priors.university):
        if pu == 0.0:
            continue
        for theta, fc in zip(priors.sponsor_grid, priors.sponsor_weights):
            if fc == 0.0:
                continue
            for stype, ps in zip(students, priors.student):
                if ps == 0.0:
                    continue
                total = total + (pu * fc * ps) * f(TypeProfile(utype, theta, stype))
    return total
