"""Scenario files, built-in case presets and regime classification.

Scenario documents are JSON objects (schema version 1)::

    {
      "schema_version": 1,
      "name": "case1", "description": "...", "d_max": 1.0,
      "coefficients": {"q0": 0.5, ..., "p4": 0.1},
      "weights": {
        "university": {"low":  {"quality": .., "documentation": .., "publishability": ..},
                       "high": {...}},
        "rubric_cost": .., "requirement_cost": ..,
        "sponsor": {"alignment": .., "timeliness": .., "mentoring_cost": .., "scope_cost": ..},
        "student": {"quality": .., "documentation": .., "timeliness": ..}
      },
      "costs": {"low": 0.15, "high": 0.30},
      "priors": {"university": {"low": .5, "high": .5},
                 "sponsor": {"points": 101} | {"grid": [...], "weights": [...]},
                 "student": {"low": .5, "high": .5}},
      "grids": {"effort_step": .05 | "effort": [...], "scope_step" | "scope",
                "rubric_step" | "rubric", "ip_policies": [...], "requirements": [...],
                "postures": [...], "mentoring_levels": [...], "orientations": [...]},
      "regime": {"cooperative_min_effort": 0.7, "cooperative_min_mentoring": 1},
      "actions": {"university": {"r": .6, "i": "permissive", "m": 1},
                  "sponsor": {"s": "supportive", "o": 1, "d": .3},
                  "student": {"e": .85, "x": "L"}},
      "types": {"university": "high", "sponsor": 0.8, "student": "low"}
    }

Only ``schema_version``, ``coefficients``, ``weights`` and ``costs`` are
required. Unknown keys are rejected.
"""

from __future__ import annotations

import json
import math
from contextlib import contextmanager
from dataclasses import dataclass
from enum import Enum
from typing import Any

from .beliefs import TypePriors, uniform_theta_grid
from .config import ActionGrids, GameConfig, RegimeThresholds, step_grid
from .exceptions import ValidationError
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
    StudentWeights,
    TypeProfile,
    UniversityAction,
    UniversityType,
    UniversityWeights,
    UtilityVector,
    outcomes,
    utilities,
)

SCHEMA_VERSION = 1
COEFFICIENT_NAMES = (
    "q0 q1 q2 q3 q4 q5 d0 d1 d2 d3 d4 t0 t1 t2 t3 a0 a1 a2 a3 p0 p1 p2 p3 p4".split()
)


@contextmanager
def _at(prefix: str):
    try:
        yield
    except ValidationError as exc:
        head = prefix.split(".")[0]
        if exc.path and (exc.path == head or exc.path.startswith(head + ".")):
            raise
        path = f"{prefix}.{exc.path}" if exc.path else prefix
        raise ValidationError(exc.message, path) from None


class _Section:
    """Reads keys out of one JSON object and rejects whatever is left over."""

    def __init__(self, data: Any, path: str):
        if not isinstance(data, dict):
            raise ValidationError(f"expected an object, got {type(data).__name__}", path or "document")
        self.data = dict(data)
        self.path = path

    def _p(self, key: str) -> str:
        return f"{self.path}.{key}" if self.path else key

    def has(self, key: str) -> bool:
        return key in self.data

    def raw(self, key: str, default: Any = ...) -> Any:
        if key not in self.data:
            if default is ...:
                raise ValidationError("required key is missing", self._p(key))
            return default
        return self.data.pop(key)

    def real(self, key: str, default: Any = ..., lo: float | None = None) -> float:
        value = self.raw(key, default)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ValidationError(f"expected a finite number, got {value!r}", self._p(key))
        if lo is not None and value < lo:
            raise ValidationError(f"must be >= {lo:g}, got {value!r}", self._p(key))
        return float(value)

    def integer(self, key: str, default: Any = ...) -> int:
        value = self.raw(key, default)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(f"expected an integer, got {value!r}", self._p(key))
        return value

    def string(self, key: str, default: Any = ...) -> str:
        value = self.raw(key, default)
        if not isinstance(value, str):
            raise ValidationError(f"expected a string, got {value!r}", self._p(key))
        return value

    def array(self, key: str) -> list:
        value = self.raw(key)
        if not isinstance(value, list):
            raise ValidationError(f"expected an array, got {value!r}", self._p(key))
        return value

    def section(self, key: str, default: Any = ...) -> _Section | None:
        value = self.raw(key, default)
        if value is None:
            return None
        return _Section(value, self._p(key))

    def finish(self) -> None:
        if self.data:
            key = sorted(self.data)[0]
            raise ValidationError("unknown key", self._p(key))


def _enum(value: Any, enum_cls: type[Enum], path: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(str(m.value) for m in enum_cls)
        raise ValidationError(f"must be one of {allowed}, got {value!r}", path) from None


def _pair(sec: _Section, labels: tuple[str, str] = ("low", "high")) -> tuple[float, float]:
    out = tuple(sec.real(k, lo=0.0) for k in labels)
    sec.finish()
    return out


def _read_coefficients(sec: _Section) -> OutcomeCoefficients:
    values = {name: sec.real(name, lo=0.0) for name in COEFFICIENT_NAMES}
    sec.finish()
    return OutcomeCoefficients(**values)


def _read_weights(sec: _Section) -> PayoffWeights:
    uni_sec = sec.section("university")
    uni = {}
    for utype in UniversityType:
        s = uni_sec.section(utype.value)
        with _at(s.path):
            uni[utype] = UniversityWeights(
                s.real("quality", lo=0.0), s.real("documentation", lo=0.0), s.real("publishability", lo=0.0))
        s.finish()
    uni_sec.finish()
    sp = sec.section("sponsor")
    sponsor = SponsorWeights(sp.real("alignment", lo=0.0), sp.real("timeliness", lo=0.0),
                             sp.real("mentoring_cost", lo=0.0), sp.real("scope_cost", lo=0.0))
    sp.finish()
    st = sec.section("student")
    student = StudentWeights(st.real("quality", lo=0.0), st.real("documentation", lo=0.0),
                             st.real("timeliness", lo=0.0))
    st.finish()
    weights = PayoffWeights(uni, sec.real("rubric_cost", lo=0.0), sec.real("requirement_cost", lo=0.0),
                            sponsor, student)
    sec.finish()
    return weights


def _read_costs(sec: _Section) -> dict[StudentCost, float]:
    costs = {}
    for label in StudentCost:
        value = sec.real(label.value)
        if value <= 0:
            raise ValidationError(f"cost of effort must be greater than zero, got {value!r}",
                                  f"{sec.path}.{label.value}")
        costs[label] = value
    sec.finish()
    return costs


def _read_priors(sec: _Section | None) -> TypePriors:
    if sec is None:
        return TypePriors.uniform()
    uni = _pair(sec.section("university")) if sec.has("university") else (0.5, 0.5)
    stu = _pair(sec.section("student")) if sec.has("student") else (0.5, 0.5)
    sp = sec.section("sponsor", None)
    if sp is None:
        grid = uniform_theta_grid(101)
        weights = (1.0 / len(grid),) * len(grid)
    elif sp.has("points"):
        grid = uniform_theta_grid(sp.integer("points"))
        weights = (1.0 / len(grid),) * len(grid)
    else:
        grid = tuple(sp.array("grid"))
        weights = tuple(sp.array("weights"))
    if sp is not None:
        sp.finish()
    sec.finish()
    with _at("priors"):
        return TypePriors(uni, grid, weights, stu)


def _read_grids(sec: _Section | None, d_max: float) -> ActionGrids:
    if sec is None:
        return ActionGrids.from_steps(d_max=d_max)
    axes = {}
    for name, field_name, upper in (("effort", "efforts", 1.0), ("scope", "scopes", d_max),
                                    ("rubric", "rubrics", 1.0)):
        if sec.has(name):
            axes[field_name] = tuple(sec.array(name))
        else:
            step = sec.real(f"{name}_step", 0.05)
            axes[field_name] = step_grid(step, upper, f"grids.{name}_step")
    for name in ("ip_policies", "requirements", "postures", "mentoring_levels", "orientations"):
        if sec.has(name):
            axes[name] = tuple(sec.array(name))
    sec.finish()
    with _at("grids"):
        return ActionGrids(**axes)


def _read_actions(sec: _Section) -> ActionProfile:
    u = sec.section("university")
    c = sec.section("sponsor")
    s = sec.section("student")
    with _at("actions"):
        profile = ActionProfile(
            UniversityAction(u.raw("r"), _enum(u.raw("i"), IPPolicy, "actions.university.i"), u.raw("m")),
            SponsorAction(_enum(c.raw("s"), Posture, "actions.sponsor.s"), c.raw("o"), c.raw("d")),
            StudentAction(s.raw("e"), _enum(s.raw("x"), Orientation, "actions.student.x")),
        )
    for part in (u, c, s, sec):
        part.finish()
    return profile


def _read_types(sec: _Section, config: GameConfig) -> TypeProfile:
    utype = _enum(sec.raw("university"), UniversityType, "types.university")
    theta = sec.real("sponsor")
    label = _enum(sec.raw("student"), StudentCost, "types.student")
    sec.finish()
    with _at("types"):
        return TypeProfile(utype, theta, config.student_type(label))


@dataclass(frozen=True)
class Scenario:
    config: GameConfig
    actions: ActionProfile | None = None
    types: TypeProfile | None = None


def parse_scenario(data: Any) -> Scenario:
    doc = _Section(data, "")
    version = doc.raw("schema_version")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"unsupported schema version {version!r} (expected {SCHEMA_VERSION})",
                              "schema_version")
    name = doc.string("name", "")
    description = doc.string("description", "")
    d_max = doc.real("d_max", 1.0)
    if d_max <= 0:
        raise ValidationError(f"must be positive, got {d_max!r}", "d_max")
    coefficients = _read_coefficients(doc.section("coefficients"))
    weights = _read_weights(doc.section("weights"))
    costs = _read_costs(doc.section("costs"))
    priors = _read_priors(doc.section("priors", None))
    grids = _read_grids(doc.section("grids", None), d_max)
    reg = doc.section("regime", None)
    regime = RegimeThresholds()
    if reg is not None:
        regime = RegimeThresholds(reg.real("cooperative_min_effort", 0.7),
                                  reg.integer("cooperative_min_mentoring", 1))
        reg.finish()
    config = GameConfig(coefficients, weights, costs, priors, grids, d_max, regime, name, description)
    act_sec = doc.section("actions", None)
    actions = _read_actions(act_sec) if act_sec is not None else None
    if actions is not None:
        config.check_profile(actions)
    type_sec = doc.section("types", None)
    types = _read_types(type_sec, config) if type_sec is not None else None
    doc.finish()
    return Scenario(config, actions, types)


def load_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document.

    Raises :class:`ValidationError` with a field path for any violation,
    including malformed JSON.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON: {exc.msg} (line {exc.lineno}, column {exc.colno})",
                              "document") from None
    return parse_scenario(data)


def _numeric_axis_doc(values: tuple[float, ...], upper: float, name: str) -> dict:
    n = len(values) - 1
    if n >= 1:
        step = upper / n
        try:
            if step_grid(step, upper, name) == values:
                return {f"{name}_step": step}
        except ValidationError:
            pass
    return {name: list(values)}


def scenario_to_dict(scenario: Scenario) -> dict:
    cfg = scenario.config
    w = cfg.weights
    pri = cfg.priors
    uniform_grid = uniform_theta_grid(pri.n_theta)
    if pri.sponsor_grid == uniform_grid and pri.sponsor_weights == (1.0 / pri.n_theta,) * pri.n_theta:
        sponsor_prior: dict = {"points": pri.n_theta}
    else:
        sponsor_prior = {"grid": list(pri.sponsor_grid), "weights": list(pri.sponsor_weights)}
    g = cfg.grids
    grids: dict = {}
    grids.update(_numeric_axis_doc(g.efforts, 1.0, "effort"))
    grids.update(_numeric_axis_doc(g.scopes, cfg.d_max, "scope"))
    grids.update(_numeric_axis_doc(g.rubrics, 1.0, "rubric"))
    grids.update({
        "ip_policies": [v.value for v in g.ip_policies],
        "requirements": list(g.requirements),
        "postures": [v.value for v in g.postures],
        "mentoring_levels": list(g.mentoring_levels),
        "orientations": [v.value for v in g.orientations],
    })
    doc: dict = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg.name,
        "description": cfg.description,
        "d_max": cfg.d_max,
        "coefficients": {n: getattr(cfg.coefficients, n) for n in COEFFICIENT_NAMES},
        "weights": {
            "university": {t.value: {"quality": w.university[t].quality,
                                     "documentation": w.university[t].documentation,
                                     "publishability": w.university[t].publishability}
                           for t in UniversityType},
            "rubric_cost": w.rubric_cost,
            "requirement_cost": w.requirement_cost,
            "sponsor": {"alignment": w.sponsor.alignment, "timeliness": w.sponsor.timeliness,
                        "mentoring_cost": w.sponsor.mentoring_cost, "scope_cost": w.sponsor.scope_cost},
            "student": {"quality": w.student.quality, "documentation": w.student.documentation,
                        "timeliness": w.student.timeliness},
        },
        "costs": {label.value: cfg.student_costs[label] for label in StudentCost},
        "priors": {
            "university": dict(zip(("low", "high"), pri.university)),
            "sponsor": sponsor_prior,
            "student": dict(zip(("low", "high"), pri.student)),
        },
        "grids": grids,
        "regime": {"cooperative_min_effort": cfg.regime.cooperative_min_effort,
                   "cooperative_min_mentoring": cfg.regime.cooperative_min_mentoring},
    }
    if scenario.actions is not None:
        a = scenario.actions
        doc["actions"] = {
            "university": {"r": a.university.rubric, "i": a.university.ip_policy.value,
                           "m": a.university.requirement},
            "sponsor": {"s": a.sponsor.posture.value, "o": a.sponsor.mentoring, "d": a.sponsor.scope},
            "student": {"e": a.student.effort, "x": a.student.orientation.value},
        }
    if scenario.types is not None:
        t = scenario.types
        doc["types"] = {"university": t.university.value, "sponsor": t.sponsor,
                        "student": t.student.label.value}
    return doc


def dump_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2) + "\n"


# -- presets -----------------------------------------------------------------

# Shared by all three cases; the high effort cost and the priors are engine
# defaults, the remaining values are the reference case parameters.
_BASE = {
    "coefficients": dict(q0=0.50, q1=0.30, q2=0.10, q3=0.08, q4=0.04, q5=0.02,
                         d0=0.40, d1=0.25, d2=0.20, d3=0.05, d4=0.03,
                         t0=0.50, t1=0.20, t2=0.15, t3=0.05,
                         a0=0.50, a1=0.30, a2=0.10, a3=0.10,
                         p0=0.10, p1=0.25, p2=0.25, p3=0.15, p4=0.10),
    "alpha": dict(quality=0.40, documentation=0.30, publishability=0.30),
    "rubric_cost": 0.10,
    "requirement_cost": 0.10,
    "sponsor": dict(alignment=0.50, timeliness=0.40, mentoring_cost=0.10, scope_cost=0.05),
    "student": dict(quality=0.40, documentation=0.30, timeliness=0.30),
    "costs": {StudentCost.LOW_COST: 0.15, StudentCost.HIGH_COST: 0.30},
}

_CASES = {
    "case1": dict(
        description="Supportive, mentored sponsor with a learning-oriented team",
        actions=((0.6, "permissive", 1), ("supportive", 1, 0.3), (0.85, "L")), theta=0.8),
    "case2": dict(
        description="Unmentored sponsor pushing a broad scope",
        actions=((0.6, "permissive", 1), ("exploitative", 0, 0.8), (0.40, "D")), theta=0.2),
    "case3": dict(
        description="Strict rubric met by a minimalist team",
        actions=((0.9, "permissive", 1), ("supportive", 1, 0.6), (0.60, "M")), theta=0.6),
}

PRESET_NAMES = tuple(_CASES)


def base_config(name: str = "", description: str = "", **changes) -> GameConfig:
    """Game configuration with the case-study coefficients and weights."""
    weights = PayoffWeights(
        {t: UniversityWeights(**_BASE["alpha"]) for t in UniversityType},
        _BASE["rubric_cost"], _BASE["requirement_cost"],
        SponsorWeights(**_BASE["sponsor"]), StudentWeights(**_BASE["student"]),
    )
    config = GameConfig(OutcomeCoefficients(**_BASE["coefficients"]), weights, dict(_BASE["costs"]),
                        name=name, description=description)
    return config.replace(**changes) if changes else config


def preset(name: str) -> Scenario:
    """One of ``case1``, ``case2``, ``case3`` with its reference action profile."""
    try:
        case = _CASES[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {', '.join(_CASES)}",
                              "preset") from None
    config = base_config(name, case["description"])
    (r, i, m), (s, o, d), (e, x) = case["actions"]
    profile = ActionProfile(UniversityAction(r, i, m), SponsorAction(s, o, d), StudentAction(e, x))
    types = TypeProfile(UniversityType.HIGH, case["theta"], config.student_type(StudentCost.LOW_COST))
    return Scenario(config, profile, types)


# -- regimes -----------------------------------------------------------------

class Regime(str, Enum):
    COOPERATIVE = "Cooperative"
    EXPLOITATIVE_SPONSOR = "ExploitativeSponsor"
    GRADE_GAMING = "GradeGaming"
    OTHER = "Other"


@dataclass(frozen=True)
class RegimeLabel:
    value: Regime
    rule_trace: tuple[str, ...]


def classify_regime(profile: ActionProfile,
                    thresholds: RegimeThresholds = RegimeThresholds()) -> RegimeLabel:
    """Label an action profile; rules are tried in order and the first match wins."""
    s, c = profile.student, profile.sponsor
    if s.orientation is Orientation.MINIMALIST:
        return RegimeLabel(Regime.GRADE_GAMING, ("minimalist-orientation",))
    if c.posture is Posture.EXPLOITATIVE and c.mentoring == 0:
        return RegimeLabel(Regime.EXPLOITATIVE_SPONSOR, ("exploitative-unmentored",))
    if (c.posture is Posture.SUPPORTIVE and c.mentoring >= thresholds.cooperative_min_mentoring
            and s.orientation is Orientation.LEARNING
            and s.effort >= thresholds.cooperative_min_effort):
        return RegimeLabel(Regime.COOPERATIVE, ("supportive-mentored-learning",))
    return RegimeLabel(Regime.OTHER, ())


# -- evaluation --------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioResult:
    name: str
    actions: ActionProfile
    types: TypeProfile
    outcomes: OutcomeVector
    utilities: UtilityVector
    regime: RegimeLabel


def evaluate(scenario: Scenario, name: str | None = None) -> ScenarioResult:
    if scenario.actions is None or scenario.types is None:
        raise ValidationError("scenario needs both 'actions' and 'types' to be evaluated",
                              "actions" if scenario.actions is None else "types")
    cfg = scenario.config
    cfg.check_profile(scenario.actions)
    return ScenarioResult(
        name=name or cfg.name or "scenario",
        actions=scenario.actions,
        types=scenario.types,
        outcomes=outcomes(scenario.actions, scenario.types, cfg.coefficients),
        utilities=utilities(scenario.actions, scenario.types, cfg),
        regime=classify_regime(scenario.actions, cfg.regime),
    )


def reproduce_all() -> list[ScenarioResult]:
    return [evaluate(preset(name)) for name in PRESET_NAMES]
