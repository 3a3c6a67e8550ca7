"""Domain types, outcome functions and stakeholder payoffs.

Every outcome is an affine map of the actions (and, for publishability, of
the sponsor type and the two quality outcomes). Nothing is clamped: values
outside ``[0, 1]`` are reported through :attr:`OutcomeVector.in_unit_interval`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import Mapping

from .exceptions import ValidationError

MENTORING_LEVELS = (0, 1, 2)


class UniversityType(str, Enum):
    LOW = "low"
    HIGH = "high"


class StudentCost(str, Enum):
    """Label of the student team's effort-cost type."""

    LOW_COST = "low"
    HIGH_COST = "high"


class IPPolicy(str, Enum):
    PERMISSIVE = "permissive"
    RESTRICTIVE = "restrictive"


class Posture(str, Enum):
    SUPPORTIVE = "supportive"
    EXPLOITATIVE = "exploitative"


class Orientation(str, Enum):
    LEARNING = "L"
    DELIVERABLE = "D"
    MINIMALIST = "M"


def _check_real(value: float, path: str, lo: float | None = None, hi: float | None = None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"expected a real number, got {value!r}", path)
    value = float(value)
    if not math.isfinite(value):
        raise ValidationError(f"must be finite, got {value!r}", path)
    if lo is not None and value < lo:
        raise ValidationError(f"must be >= {lo:g}, got {value!r}", path)
    if hi is not None and value > hi:
        raise ValidationError(f"must be <= {hi:g}, got {value!r}", path)
    return value


def _check_level(value: int, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value not in MENTORING_LEVELS:
        raise ValidationError(f"must be one of 0, 1, 2, got {value!r}", path)
    return value


def _check_enum(value, enum_cls, path: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise ValidationError(f"must be one of {allowed}, got {value!r}", path) from None


@dataclass(frozen=True)
class StudentType:
    label: StudentCost
    effort_cost: float

    def __post_init__(self):
        object.__setattr__(self, "label", _check_enum(self.label, StudentCost, "student.label"))
        cost = _check_real(self.effort_cost, "student.effort_cost")
        if cost <= 0:
            raise ValidationError(
                f"cost of effort must be greater than zero, got {cost!r}", "student.effort_cost"
            )
        object.__setattr__(self, "effort_cost", cost)


@dataclass(frozen=True)
class UniversityAction:
    """Course policy ``(r, i, m)``."""

    rubric: float
    ip_policy: IPPolicy
    requirement: int

    def __post_init__(self):
        object.__setattr__(self, "rubric", _check_real(self.rubric, "university.r", 0.0, 1.0))
        object.__setattr__(self, "ip_policy", _check_enum(self.ip_policy, IPPolicy, "university.i"))
        _check_level(self.requirement, "university.m")


@dataclass(frozen=True)
class SponsorAction:
    """Sponsor choice ``(s, o, d)``; the upper bound on ``d`` lives in the config."""

    posture: Posture
    mentoring: int
    scope: float

    def __post_init__(self):
        object.__setattr__(self, "posture", _check_enum(self.posture, Posture, "sponsor.s"))
        _check_level(self.mentoring, "sponsor.o")
        object.__setattr__(self, "scope", _check_real(self.scope, "sponsor.d", 0.0))


@dataclass(frozen=True)
class StudentAction:
    effort: float
    orientation: Orientation

    def __post_init__(self):
        object.__setattr__(self, "effort", _check_real(self.effort, "student.e", 0.0, 1.0))
        object.__setattr__(
            self, "orientation", _check_enum(self.orientation, Orientation, "student.x")
        )


@dataclass(frozen=True)
class ActionProfile:
    university: UniversityAction
    sponsor: SponsorAction
    student: StudentAction


@dataclass(frozen=True)
class TypeProfile:
    university: UniversityType
    sponsor: float
    student: StudentType

    def __post_init__(self):
        object.__setattr__(
            self, "university", _check_enum(self.university, UniversityType, "types.university")
        )
        object.__setattr__(self, "sponsor", _check_real(self.sponsor, "types.sponsor", 0.0, 1.0))


@dataclass(frozen=True)
class OutcomeCoefficients:
    q0: float
    q1: float
    q2: float
    q3: float
    q4: float
    q5: float
    d0: float
    d1: float
    d2: float
    d3: float
    d4: float
    t0: float
    t1: float
    t2: float
    t3: float
    a0: float
    a1: float
    a2: float
    a3: float
    p0: float
    p1: float
    p2: float
    p3: float
    p4: float

    def __post_init__(self):
        for f in fields(self):
            value = _check_real(getattr(self, f.name), f"coefficients.{f.name}", 0.0)
            object.__setattr__(self, f.name, value)
        total = self.p0 + self.p1 + self.p2 + self.p3 + self.p4
        if total > 1.0 + 1e-12:
            raise ValidationError(
                f"publishability normalization violated: p0+p1+p2+p3+p4 = {total:.6g} > 1",
                "coefficients",
            )


@dataclass(frozen=True)
class UniversityWeights:
    """Type-dependent weights on quality, documentation and publishability."""

    quality: float
    documentation: float
    publishability: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _check_real(getattr(self, f.name), f.name, 0.0))


@dataclass(frozen=True)
class SponsorWeights:
    alignment: float
    timeliness: float
    mentoring_cost: float
    scope_cost: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _check_real(getattr(self, f.name), f.name, 0.0))


@dataclass(frozen=True)
class StudentWeights:
    quality: float
    documentation: float
    timeliness: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _check_real(getattr(self, f.name), f.name, 0.0))


@dataclass(frozen=True)
class PayoffWeights:
    university: Mapping[UniversityType, UniversityWeights]
    rubric_cost: float
    requirement_cost: float
    sponsor: SponsorWeights
    student: StudentWeights

    def __post_init__(self):
        missing = [t.value for t in UniversityType if t not in self.university]
        if missing:
            raise ValidationError(f"missing weights for university type(s) {missing}", "weights.university")
        object.__setattr__(self, "university", dict(self.university))
        for name in ("rubric_cost", "requirement_cost"):
            object.__setattr__(self, name, _check_real(getattr(self, name), f"weights.{name}", 0.0))


@dataclass(frozen=True)
class OutcomeVector:
    technical_quality: float
    documentation_quality: float
    timeliness: float
    alignment: float
    publishability: float

    @property
    def in_unit_interval(self) -> bool:
        return all(0.0 <= v <= 1.0 for v in self.as_tuple())

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.technical_quality, self.documentation_quality, self.timeliness,
                self.alignment, self.publishability)


@dataclass(frozen=True)
class UtilityVector:
    university: float
    sponsor: float
    students: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.university, self.sponsor, self.students)


def expected_technical_quality(student: StudentAction, sponsor: SponsorAction,
                               coeffs: OutcomeCoefficients) -> float:
    c = coeffs
    exploitative = 1.0 if sponsor.posture is Posture.EXPLOITATIVE else 0.0
    learning = 1.0 if student.orientation is Orientation.LEARNING else 0.0
    return (c.q0 + c.q1 * student.effort + c.q2 * sponsor.mentoring - c.q3 * exploitative
            - c.q4 * sponsor.scope + c.q5 * learning * sponsor.mentoring)


def expected_documentation_quality(student: StudentAction, university: UniversityAction,
                                   sponsor: SponsorAction, coeffs: OutcomeCoefficients) -> float:
    c = coeffs
    learning = 1.0 if student.orientation is Orientation.LEARNING else 0.0
    return (c.d0 + c.d1 * student.effort + c.d2 * learning + c.d3 * university.rubric
            + c.d4 * sponsor.mentoring)


def expected_timeliness(student: StudentAction, sponsor: SponsorAction,
                        coeffs: OutcomeCoefficients) -> float:
    c = coeffs
    return c.t0 + c.t1 * student.effort + c.t2 * sponsor.mentoring - c.t3 * sponsor.scope


def expected_alignment(student: StudentAction, sponsor: SponsorAction,
                       coeffs: OutcomeCoefficients) -> float:
    c = coeffs
    deliverable = 1.0 if student.orientation is Orientation.DELIVERABLE else 0.0
    supportive = 1.0 if sponsor.posture is Posture.SUPPORTIVE else 0.0
    return c.a0 + c.a1 * deliverable + c.a2 * supportive - c.a3 * sponsor.scope


def expected_publishability(university: UniversityAction, sponsor_type: float, quality: float,
                            documentation: float, coeffs: OutcomeCoefficients) -> float:
    """Publishability from the IP policy, sponsor type and the two quality outcomes.

    Stays in ``[0, 1]`` when ``sponsor_type``, ``quality`` and ``documentation``
    do and the ``p`` coefficients sum to at most one.
    """
    c = coeffs
    permissive = 1.0 if university.ip_policy is IPPolicy.PERMISSIVE else 0.0
    return c.p0 + c.p1 * permissive + c.p2 * sponsor_type + c.p3 * quality + c.p4 * documentation


def outcomes(profile: ActionProfile, types: TypeProfile, coeffs: OutcomeCoefficients) -> OutcomeVector:
    q = expected_technical_quality(profile.student, profile.sponsor, coeffs)
    doc = expected_documentation_quality(profile.student, profile.university, profile.sponsor, coeffs)
    return OutcomeVector(
        technical_quality=q,
        documentation_quality=doc,
        timeliness=expected_timeliness(profile.student, profile.sponsor, coeffs),
        alignment=expected_alignment(profile.student, profile.sponsor, coeffs),
        publishability=expected_publishability(profile.university, types.sponsor, q, doc, coeffs),
    )


def university_utility(out: OutcomeVector, policy: UniversityAction, utype: UniversityType,
                       w: PayoffWeights) -> float:
    a = w.university[utype]
    return (a.quality * out.technical_quality + a.documentation * out.documentation_quality
            + a.publishability * out.publishability - w.rubric_cost * policy.rubric
            - w.requirement_cost * policy.requirement)


def sponsor_utility(out: OutcomeVector, sponsor: SponsorAction, w: PayoffWeights) -> float:
    # Scope cost is quadratic in d.
    b = w.sponsor
    return (b.alignment * out.alignment + b.timeliness * out.timeliness
            - b.mentoring_cost * sponsor.mentoring - b.scope_cost * sponsor.scope ** 2)


def student_utility(out: OutcomeVector, student: StudentAction, stype: StudentType,
                    w: PayoffWeights) -> float:
    g = w.student
    return (g.quality * out.technical_quality + g.documentation * out.documentation_quality
            + g.timeliness * out.timeliness - stype.effort_cost * student.effort)


def utilities(profile: ActionProfile, types: TypeProfile, config) -> UtilityVector:
    """Outcomes and all three payoffs for one path of play under ``config``."""
    out = outcomes(profile, types, config.coefficients)
    w = config.weights
    return UtilityVector(
        university=university_utility(out, profile.university, types.university, w),
        sponsor=sponsor_utility(out, profile.sponsor, w),
        students=student_utility(out, profile.student, types.student, w),
    )
