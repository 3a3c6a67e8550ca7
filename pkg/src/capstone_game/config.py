"""Discretized action grids and the full game configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .beliefs import TypePriors
from .exceptions import ValidationError
from .model import (
    MENTORING_LEVELS,
    ActionProfile,
    IPPolicy,
    Orientation,
    OutcomeCoefficients,
    PayoffWeights,
    Posture,
    SponsorAction,
    StudentAction,
    StudentCost,
    StudentType,
    UniversityAction,
)


def step_grid(step: float, upper: float, path: str) -> tuple[float, ...]:
    """Points ``0, step, ..., upper``; ``step`` must divide ``upper`` evenly."""
    if isinstance(step, bool) or not isinstance(step, (int, float)) or not step > 0:
        raise ValidationError(f"step must be a positive real, got {step!r}", path)
    n = round(upper / step)
    if n < 1 or abs(n * step - upper) > 1e-9 * max(1.0, upper):
        raise ValidationError(f"step {step!r} does not divide {upper!r} evenly", path)
    return tuple(upper * k / n for k in range(n + 1))


def _numeric_axis(values: Sequence[float], upper: float, path: str) -> tuple[float, ...]:
    out = tuple(float(v) for v in values)
    if not out:
        raise ValidationError("grid is empty", path)
    if any(not (0.0 <= v <= upper) for v in out):
        raise ValidationError(f"grid values must lie in [0, {upper:g}]", path)
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValidationError("grid values must be strictly increasing", path)
    return out


def _discrete_axis(values, universe: Sequence, path: str) -> tuple:
    try:
        chosen = {type(universe[0])(v) for v in values}
    except ValueError as exc:
        raise ValidationError(str(exc), path) from None
    if not chosen:
        raise ValidationError("grid is empty", path)
    # canonical order fixes the tie-break order
    return tuple(v for v in universe if v in chosen)


@dataclass(frozen=True)
class ActionGrids:
    """Finite action sets searched by the solvers.

    Enumeration orders double as tie-break orders: lower values first for
    numeric coordinates, declaration order for the categorical ones.
    """

    efforts: tuple[float, ...]
    scopes: tuple[float, ...]
    rubrics: tuple[float, ...]
    ip_policies: tuple[IPPolicy, ...] = tuple(IPPolicy)
    requirements: tuple[int, ...] = MENTORING_LEVELS
    postures: tuple[Posture, ...] = tuple(Posture)
    mentoring_levels: tuple[int, ...] = MENTORING_LEVELS
    orientations: tuple[Orientation, ...] = tuple(Orientation)

    def __post_init__(self):
        object.__setattr__(self, "efforts", _numeric_axis(self.efforts, 1.0, "grids.effort"))
        object.__setattr__(self, "scopes", _numeric_axis(self.scopes, math.inf, "grids.scope"))
        object.__setattr__(self, "rubrics", _numeric_axis(self.rubrics, 1.0, "grids.rubric"))
        object.__setattr__(self, "ip_policies",
                           _discrete_axis(self.ip_policies, tuple(IPPolicy), "grids.ip_policies"))
        object.__setattr__(self, "postures",
                           _discrete_axis(self.postures, tuple(Posture), "grids.postures"))
        object.__setattr__(self, "orientations",
                           _discrete_axis(self.orientations, tuple(Orientation), "grids.orientations"))
        for name in ("requirements", "mentoring_levels"):
            values = getattr(self, name)
            if any(isinstance(v, bool) or v not in MENTORING_LEVELS for v in values):
                raise ValidationError("levels must be drawn from 0, 1, 2", f"grids.{name}")
            object.__setattr__(self, name, _discrete_axis([int(v) for v in values],
                                                          MENTORING_LEVELS, f"grids.{name}"))

    @classmethod
    def from_steps(cls, effort_step: float = 0.05, scope_step: float = 0.05,
                   rubric_step: float = 0.05, d_max: float = 1.0, **discrete) -> ActionGrids:
        return cls(
            efforts=step_grid(effort_step, 1.0, "grids.effort_step"),
            scopes=step_grid(scope_step, d_max, "grids.scope_step"),
            rubrics=step_grid(rubric_step, 1.0, "grids.rubric_step"),
            **discrete,
        )

    @classmethod
    def pinned(cls, profile: ActionProfile) -> ActionGrids:
        """Single-point grids holding exactly the actions of ``profile``."""
        u, c, s = profile.university, profile.sponsor, profile.student
        return cls(
            efforts=(s.effort,), scopes=(c.scope,), rubrics=(u.rubric,),
            ip_policies=(u.ip_policy,), requirements=(u.requirement,),
            postures=(c.posture,), mentoring_levels=(c.mentoring,),
            orientations=(s.orientation,),
        )

    def student_actions(self) -> list[StudentAction]:
        return [StudentAction(e, x) for e in self.efforts for x in self.orientations]

    def sponsor_actions(self) -> list[SponsorAction]:
        return [SponsorAction(s, o, d) for s in self.postures
                for o in self.mentoring_levels for d in self.scopes]

    def policies(self) -> list[UniversityAction]:
        return [UniversityAction(r, i, m) for r in self.rubrics
                for i in self.ip_policies for m in self.requirements]


@dataclass(frozen=True)
class RegimeThresholds:
    """Cut-offs used by the regime classifier."""

    cooperative_min_effort: float = 0.7
    cooperative_min_mentoring: int = 1


def _default_grids():
    return ActionGrids.from_steps()


@dataclass(frozen=True)
class GameConfig:
    coefficients: OutcomeCoefficients
    weights: PayoffWeights
    student_costs: Mapping[StudentCost, float]
    priors: TypePriors = field(default_factory=TypePriors.uniform)
    grids: ActionGrids = field(default_factory=_default_grids)
    d_max: float = 1.0
    regime: RegimeThresholds = field(default_factory=RegimeThresholds)
    name: str = ""
    description: str = ""

    def __post_init__(self):
        costs = {}
        for label in StudentCost:
            if label not in self.student_costs:
                raise ValidationError("missing effort cost", f"costs.{label.value}")
            value = self.student_costs[label]
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(f"expected a real number, got {value!r}", f"costs.{label.value}")
            if value <= 0:
                raise ValidationError(
                    f"cost of effort must be greater than zero, got {value!r}", f"costs.{label.value}"
                )
            costs[label] = float(value)
        if not costs[StudentCost.LOW_COST] < costs[StudentCost.HIGH_COST]:
            raise ValidationError("low-cost type must have a strictly smaller effort cost", "costs")
        object.__setattr__(self, "student_costs", costs)
        if isinstance(self.d_max, bool) or not isinstance(self.d_max, (int, float)) \
                or not math.isfinite(self.d_max) or self.d_max <= 0:
            raise ValidationError(f"must be a finite positive real, got {self.d_max!r}", "d_max")
        if self.grids.scopes[-1] > self.d_max:
            raise ValidationError(f"scope grid exceeds d_max = {self.d_max:g}", "grids.scope")

    def student_type(self, label: StudentCost) -> StudentType:
        return StudentType(StudentCost(label), self.student_costs[StudentCost(label)])

    def replace(self, **changes) -> GameConfig:
        return replace(self, **changes)

    def check_profile(self, profile: ActionProfile) -> None:
        """Reject a profile whose scope exceeds ``d_max``."""
        if profile.sponsor.scope > self.d_max:
            raise ValidationError(
                f"must be <= d_max = {self.d_max:g}, got {profile.sponsor.scope!r}", "actions.sponsor.d"
            )
