"""Best responses, backward induction, deviation audits and PBE search.

All solvers enumerate finite action grids. Among actions whose payoff is
within ``TIE_TOL`` of the best, the first one in grid enumeration order wins:

* student: lower effort, then orientation L < D < M
* sponsor: supportive first, then lower mentoring, then lower scope
* university: lower rubric, then permissive first, then lower requirement
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .beliefs import (
    BeliefState,
    LikelihoodTable,
    OffPathRule,
    TypePriors,
    expectation_over_types,
    posterior_sponsor,
    posterior_university,
)
from .config import ActionGrids, GameConfig
from .exceptions import ValidationError
from .model import (
    MENTORING_LEVELS,
    ActionProfile,
    IPPolicy,
    Orientation,
    Posture,
    SponsorAction,
    StudentAction,
    StudentCost,
    StudentType,
    TypeProfile,
    UniversityAction,
    UniversityType,
    outcomes,
    university_utility,
    utilities,
)

TIE_TOL = 1e-12

StudentRule = Callable[[StudentType, UniversityAction, SponsorAction], StudentAction]
SponsorRule = Callable[[float, UniversityAction], SponsorAction]


def first_argmax(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Index of the first entry within ``TIE_TOL`` of the maximum along ``axis``."""
    values = np.asarray(values)
    best = values.max(axis=axis, keepdims=True)
    return np.argmax(values >= best - TIE_TOL, axis=axis)


@dataclass(frozen=True)
class _Axes:
    students: tuple[StudentAction, ...]
    sponsors: tuple[SponsorAction, ...]
    policies: tuple[UniversityAction, ...]
    effort: np.ndarray
    learning: np.ndarray
    deliverable: np.ndarray
    exploitative: np.ndarray
    supportive: np.ndarray
    mentoring: np.ndarray
    scope: np.ndarray
    student_index: Mapping[StudentAction, int] = field(repr=False)
    sponsor_index: Mapping[SponsorAction, int] = field(repr=False)
    policy_index: Mapping[UniversityAction, int] = field(repr=False)


@lru_cache(maxsize=32)
def _axes(grids: ActionGrids) -> _Axes:
    students = tuple(grids.student_actions())
    sponsors = tuple(grids.sponsor_actions())
    policies = tuple(grids.policies())
    return _Axes(
        students=students,
        sponsors=sponsors,
        policies=policies,
        effort=np.array([a.effort for a in students]),
        learning=np.array([1.0 if a.orientation is Orientation.LEARNING else 0.0 for a in students]),
        deliverable=np.array([1.0 if a.orientation is Orientation.DELIVERABLE else 0.0 for a in students]),
        exploitative=np.array([1.0 if c.posture is Posture.EXPLOITATIVE else 0.0 for c in sponsors]),
        supportive=np.array([1.0 if c.posture is Posture.SUPPORTIVE else 0.0 for c in sponsors]),
        mentoring=np.array([float(c.mentoring) for c in sponsors]),
        scope=np.array([c.scope for c in sponsors]),
        student_index={a: k for k, a in enumerate(students)},
        sponsor_index={c: k for k, c in enumerate(sponsors)},
        policy_index={u: k for k, u in enumerate(policies)},
    )


# The array kernels below repeat the scalar formulas in model.py term by term,
# in the same operation order, so both paths agree bit for bit.

def _quality_doc_time(config: GameConfig, rubric, exploitative, mentoring, scope,
                      effort, learning):
    c = config.coefficients
    q = (c.q0 + c.q1 * effort + c.q2 * mentoring - c.q3 * exploitative
         - c.q4 * scope + c.q5 * learning * mentoring)
    doc = c.d0 + c.d1 * effort + c.d2 * learning + c.d3 * rubric + c.d4 * mentoring
    t = c.t0 + c.t1 * effort + c.t2 * mentoring - c.t3 * scope
    return q, doc, t


def _student_payoffs(config: GameConfig, policy: UniversityAction, ax: _Axes,
                     sponsor_rows: np.ndarray) -> np.ndarray:
    """Student payoff before effort cost, shape (len(sponsor_rows), n_student_actions)."""
    col = (slice(None), None)
    q, doc, t = _quality_doc_time(
        config, policy.rubric, ax.exploitative[sponsor_rows][col], ax.mentoring[sponsor_rows][col],
        ax.scope[sponsor_rows][col], ax.effort[None, :], ax.learning[None, :],
    )
    g = config.weights.student
    return g.quality * q + g.documentation * doc + g.timeliness * t


def student_response_table(policy: UniversityAction, config: GameConfig,
                           grids: ActionGrids) -> tuple[np.ndarray, np.ndarray]:
    """Best student action index and payoff for every (cost type, sponsor action).

    Both arrays have shape ``(2, n_sponsor_actions)``; rows follow
    :class:`StudentCost` order.
    """
    ax = _axes(grids)
    base = _student_payoffs(config, policy, ax, np.arange(len(ax.sponsors)))
    idx = np.empty((len(StudentCost), len(ax.sponsors)), dtype=int)
    val = np.empty(idx.shape)
    for k, label in enumerate(StudentCost):
        u = base - config.student_costs[label] * ax.effort[None, :]
        idx[k] = first_argmax(u, axis=1)
        val[k] = u[np.arange(len(ax.sponsors)), idx[k]]
    return idx, val


def sponsor_payoff_table(policy: UniversityAction, student_idx: np.ndarray, config: GameConfig,
                         grids: ActionGrids) -> np.ndarray:
    """Sponsor payoff for every (cost type, sponsor action) given student responses."""
    ax = _axes(grids)
    c = config.coefficients
    b = config.weights.sponsor
    out = np.empty(student_idx.shape)
    for k in range(student_idx.shape[0]):
        s = student_idx[k]
        effort, deliverable = ax.effort[s], ax.deliverable[s]
        align = c.a0 + c.a1 * deliverable + c.a2 * ax.supportive - c.a3 * ax.scope
        t = c.t0 + c.t1 * effort + c.t2 * ax.mentoring - c.t3 * ax.scope
        out[k] = (b.alignment * align + b.timeliness * t
                  - b.mentoring_cost * ax.mentoring - b.scope_cost * ax.scope ** 2)
    return out


def _expected_over_students(table: np.ndarray, priors: TypePriors) -> np.ndarray:
    total = 0.0
    for k, p in enumerate(priors.student):
        if p == 0.0:
            continue
        total = total + p * table[k]
    return np.broadcast_to(np.asarray(total, dtype=float), table.shape[1:])


def student_best_response(stype: StudentType, u_act: UniversityAction, c_act: SponsorAction,
                          config: GameConfig, grids: ActionGrids | None = None
                          ) -> tuple[StudentAction, float]:
    grids = grids or config.grids
    ax = _axes(grids)
    q, doc, t = _quality_doc_time(
        config, u_act.rubric, 1.0 if c_act.posture is Posture.EXPLOITATIVE else 0.0,
        float(c_act.mentoring), c_act.scope, ax.effort, ax.learning,
    )
    g = config.weights.student
    u = g.quality * q + g.documentation * doc + g.timeliness * t - stype.effort_cost * ax.effort
    j = int(first_argmax(u))
    return ax.students[j], float(u[j])


def _student_idx_from_rule(rule: StudentRule, u_act: UniversityAction, config: GameConfig,
                           ax: _Axes) -> np.ndarray:
    idx = np.empty((len(StudentCost), len(ax.sponsors)), dtype=int)
    for k, label in enumerate(StudentCost):
        stype = config.student_type(label)
        for j, c_act in enumerate(ax.sponsors):
            a = rule(stype, u_act, c_act)
            try:
                idx[k, j] = ax.student_index[a]
            except KeyError:
                raise ValidationError(f"student rule returned off-grid action {a!r}",
                                      "student_rule") from None
    return idx


def sponsor_best_response(theta_c: float, u_act: UniversityAction, config: GameConfig,
                          grids: ActionGrids | None = None, priors: TypePriors | None = None,
                          student_rule: StudentRule | None = None) -> tuple[SponsorAction, float]:
    """Sponsor action maximizing expected payoff over the student cost prior.

    ``student_rule`` defaults to the student best response. ``theta_c`` is
    part of the sponsor's information set but no sponsor payoff term depends
    on it, so the answer is the same for every sponsor type.
    """
    grids = grids or config.grids
    priors = priors or config.priors
    if not 0.0 <= theta_c <= 1.0:
        raise ValidationError(f"sponsor type must lie in [0, 1], got {theta_c!r}", "theta_c")
    ax = _axes(grids)
    if student_rule is None:
        student_idx, _ = student_response_table(u_act, config, grids)
    else:
        student_idx = _student_idx_from_rule(student_rule, u_act, config, ax)
    expected = _expected_over_students(sponsor_payoff_table(u_act, student_idx, config, grids), priors)
    j = int(first_argmax(expected))
    return ax.sponsors[j], float(expected[j])


@dataclass(frozen=True)
class ResponseMap:
    """Follower responses to one policy, per sponsor grid point and student cost type."""

    policy: UniversityAction
    theta_grid: tuple[float, ...]
    sponsor: tuple[SponsorAction, ...]
    student: Mapping[tuple[int, StudentCost], StudentAction]

    def sponsor_at(self, theta: float) -> SponsorAction:
        return self.sponsor[self.theta_grid.index(theta)]

    def student_at(self, theta: float, label: StudentCost) -> StudentAction:
        return self.student[(self.theta_grid.index(theta), StudentCost(label))]

    def profile(self, theta: float, label: StudentCost) -> ActionProfile:
        return ActionProfile(self.policy, self.sponsor_at(theta), self.student_at(theta, label))


def respond(policy: UniversityAction, config: GameConfig, grids: ActionGrids | None = None,
            priors: TypePriors | None = None) -> ResponseMap:
    """Sponsor and nested student best responses to ``policy``."""
    grids = grids or config.grids
    priors = priors or config.priors
    ax = _axes(grids)
    student_idx, _ = student_response_table(policy, config, grids)
    expected = _expected_over_students(sponsor_payoff_table(policy, student_idx, config, grids), priors)
    j = int(first_argmax(expected))
    # one solve covers all sponsor types: their payoffs carry no type term
    sponsor = (ax.sponsors[j],) * priors.n_theta
    student = {(t, label): ax.students[student_idx[k, j]]
               for t in range(priors.n_theta) for k, label in enumerate(StudentCost)}
    return ResponseMap(policy, priors.sponsor_grid, sponsor, student)


def _policy_value(utype: UniversityType, policy: UniversityAction, sponsor_rule: SponsorRule,
                  student_rule: StudentRule, priors: TypePriors, config: GameConfig) -> float:
    def payoff(types: TypeProfile) -> float:
        c_act = sponsor_rule(types.sponsor, policy)
        s_act = student_rule(types.student, policy, c_act)
        out = outcomes(ActionProfile(policy, c_act, s_act), types, config.coefficients)
        return university_utility(out, policy, types.university, config.weights)

    return expectation_over_types(priors.condition_university(utype), payoff, config.student_costs)


def university_best_policy(utype: UniversityType, config: GameConfig,
                           grids: ActionGrids | None = None, priors: TypePriors | None = None,
                           sponsor_rule: SponsorRule | None = None,
                           student_rule: StudentRule | None = None
                           ) -> tuple[UniversityAction, float]:
    """Policy maximizing the university's expected payoff over sponsor and student types."""
    grids = grids or config.grids
    priors = priors or config.priors
    ax = _axes(grids)
    st_rule = student_rule or _memo_student_rule(config, grids, {})
    values = []
    for policy in ax.policies:
        s_rule = sponsor_rule
        if s_rule is None:
            c_best, _ = sponsor_best_response(priors.sponsor_grid[0], policy, config, grids,
                                              priors, student_rule)
            s_rule = lambda theta, u, c_best=c_best: c_best  # noqa: E731
        values.append(_policy_value(utype, policy, s_rule, st_rule, priors, config))
    j = int(first_argmax(np.array(values)))
    return ax.policies[j], float(values[j])


def _memo_student_rule(config: GameConfig, grids: ActionGrids, cache: dict) -> StudentRule:
    def rule(stype: StudentType, u_act: UniversityAction, c_act: SponsorAction) -> StudentAction:
        key = (stype, u_act, c_act)
        if key not in cache:
            cache[key] = student_best_response(stype, u_act, c_act, config, grids)[0]
        return cache[key]

    return rule


def backward_induction(config: GameConfig, types: TypeProfile,
                       grids: ActionGrids | None = None) -> ActionProfile:
    """Complete-information solution for the realized ``types`` (move order U, C, S)."""
    grids = grids or config.grids
    priors = TypePriors.point_mass(types)
    policy, _ = university_best_policy(types.university, config, grids, priors)
    c_act, _ = sponsor_best_response(types.sponsor, policy, config, grids, priors)
    s_act, _ = student_best_response(types.student, policy, c_act, config, grids)
    return ActionProfile(policy, c_act, s_act)


# -- local deviation audit ---------------------------------------------------

@dataclass(frozen=True)
class Deviation:
    player: str
    coordinate: str
    before: object
    after: object
    gain: float
    profile: ActionProfile = field(repr=False)


@dataclass(frozen=True)
class DeviationReport:
    """Outcome of the one-step deviation check for a single player.

    ``max_gain`` is 0.0 when no deviation was evaluated.
    """

    player: str
    deviations: tuple[Deviation, ...]
    tolerance: float

    @property
    def max_gain(self) -> float:
        return max((d.gain for d in self.deviations), default=0.0)

    @property
    def best_deviation(self) -> Deviation | None:
        if self.max_gain <= self.tolerance:
            return None
        return max(self.deviations, key=lambda d: d.gain)

    @property
    def consistent(self) -> bool:
        return self.max_gain <= self.tolerance

    def find(self, coordinate: str, after) -> Deviation:
        for d in self.deviations:
            if d.coordinate == coordinate and d.after == after:
                return d
        raise KeyError((coordinate, after))


@dataclass(frozen=True)
class EquilibriumAudit:
    university: DeviationReport
    sponsor: DeviationReport
    student: DeviationReport
    step: float

    @property
    def reports(self) -> tuple[DeviationReport, DeviationReport, DeviationReport]:
        return (self.university, self.sponsor, self.student)

    @property
    def consistent(self) -> bool:
        return all(r.consistent for r in self.reports)


def _steps(value: float, step: float, upper: float) -> list[float]:
    out = []
    for cand in (value - step, value + step):
        cand = round(cand, 12)
        if 0.0 <= cand <= upper:
            out.append(cand)
    return out


def verify_local_equilibrium(profile: ActionProfile, types: TypeProfile, config: GameConfig,
                             step: float = 0.05, tolerance: float = 1e-9) -> EquilibriumAudit:
    """Evaluate every unilateral one-step deviation from ``profile``.

    Continuous coordinates move one ``step`` down and up (staying feasible);
    categorical and tiered coordinates try every alternative value. Other
    players' actions stay fixed. ``step == 0`` disables all deviations.
    """
    if step < 0:
        raise ValidationError(f"step must be nonnegative, got {step!r}", "step")
    if tolerance < 0:
        raise ValidationError(f"tolerance must be nonnegative, got {tolerance!r}", "tolerance")
    config.check_profile(profile)
    base = utilities(profile, types, config)
    u, c, s = profile.university, profile.sponsor, profile.student

    candidates: dict[str, list[tuple[str, object, object, ActionProfile]]] = {
        "university": [], "sponsor": [], "student": []}
    if step > 0:
        uni = candidates["university"]
        for r in _steps(u.rubric, step, 1.0):
            uni.append(("r", u.rubric, r, ActionProfile(UniversityAction(r, u.ip_policy, u.requirement), c, s)))
        for i in IPPolicy:
            if i is not u.ip_policy:
                uni.append(("i", u.ip_policy, i, ActionProfile(UniversityAction(u.rubric, i, u.requirement), c, s)))
        for m in MENTORING_LEVELS:
            if m != u.requirement:
                uni.append(("m", u.requirement, m, ActionProfile(UniversityAction(u.rubric, u.ip_policy, m), c, s)))

        spo = candidates["sponsor"]
        for p in Posture:
            if p is not c.posture:
                spo.append(("s", c.posture, p, ActionProfile(u, SponsorAction(p, c.mentoring, c.scope), s)))
        for o in MENTORING_LEVELS:
            if o != c.mentoring:
                spo.append(("o", c.mentoring, o, ActionProfile(u, SponsorAction(c.posture, o, c.scope), s)))
        for d in _steps(c.scope, step, config.d_max):
            spo.append(("d", c.scope, d, ActionProfile(u, SponsorAction(c.posture, c.mentoring, d), s)))

        stu = candidates["student"]
        for e in _steps(s.effort, step, 1.0):
            stu.append(("e", s.effort, e, ActionProfile(u, c, StudentAction(e, s.orientation))))
        for x in Orientation:
            if x is not s.orientation:
                stu.append(("x", s.orientation, x, ActionProfile(u, c, StudentAction(s.effort, x))))

    reports = {}
    for player, attr in (("university", "university"), ("sponsor", "sponsor"), ("student", "students")):
        devs = []
        for coord, before, after, dev_profile in candidates[player]:
            gain = getattr(utilities(dev_profile, types, config), attr) - getattr(base, attr)
            devs.append(Deviation(player, coord, before, after, gain, dev_profile))
        reports[player] = DeviationReport(player, tuple(devs), tolerance)
    return EquilibriumAudit(reports["university"], reports["sponsor"], reports["student"], step)


# -- pure-strategy PBE search ------------------------------------------------

@dataclass(frozen=True)
class StrategyProfile:
    """Pure behavioral strategies stored as indices into the grid enumerations.

    ``sponsor[t, u]`` is the sponsor action index for sponsor grid point ``t``
    after policy ``u``; ``student[k, u, c]`` the student action index for cost
    type ``k`` after policy ``u`` and sponsor action ``c``.
    """

    grids: ActionGrids
    theta_grid: tuple[float, ...]
    university: Mapping[UniversityType, int]
    sponsor: np.ndarray = field(repr=False)
    student: np.ndarray = field(repr=False)

    def university_action(self, utype: UniversityType) -> UniversityAction:
        return _axes(self.grids).policies[self.university[UniversityType(utype)]]

    def sponsor_action(self, theta: float, policy: UniversityAction) -> SponsorAction:
        ax = _axes(self.grids)
        return ax.sponsors[self.sponsor[self.theta_grid.index(theta), ax.policy_index[policy]]]

    def student_action(self, label: StudentCost, policy: UniversityAction,
                       sponsor: SponsorAction) -> StudentAction:
        ax = _axes(self.grids)
        k = list(StudentCost).index(StudentCost(label))
        return ax.students[self.student[k, ax.policy_index[policy], ax.sponsor_index[sponsor]]]

    def distribution_university(self, utype: UniversityType) -> dict[UniversityAction, float]:
        return {self.university_action(utype): 1.0}

    def university_likelihood(self) -> LikelihoodTable:
        return LikelihoodTable.from_pure(tuple(UniversityType), _axes(self.grids).policies,
                                         self.university_action)

    def sponsor_likelihood(self, policy: UniversityAction) -> LikelihoodTable:
        return LikelihoodTable.from_pure(self.theta_grid, _axes(self.grids).sponsors,
                                         lambda theta: self.sponsor_action(theta, policy))

    def same_as(self, other: StrategyProfile | None) -> bool:
        return (other is not None and dict(self.university) == dict(other.university)
                and np.array_equal(self.sponsor, other.sponsor)
                and np.array_equal(self.student, other.student))


@dataclass(frozen=True)
class BeliefSystem:
    """Posteriors at every sponsor and on-path student information set."""

    university: Mapping[UniversityAction, tuple[float, float]]
    sponsor: Mapping[tuple[UniversityAction, SponsorAction], tuple[float, ...]]
    prior: TypePriors
    off_path_rule: OffPathRule

    def at(self, policy: UniversityAction, sponsor: SponsorAction) -> BeliefState:
        mu_u = self.university[policy]
        key = (policy, sponsor)
        if key in self.sponsor:
            return BeliefState(mu_u, self.sponsor[key], self.off_path_rule, True)
        if self.off_path_rule is OffPathRule.UNIFORM:
            n = self.prior.n_theta
            off = (1.0 / n,) * n
        else:
            off = self.prior.sponsor_weights
        return BeliefState(mu_u, off, self.off_path_rule, False)


class PBEResult(NamedTuple):
    strategy: StrategyProfile
    beliefs: BeliefSystem
    converged: bool
    iterations: int


def _beliefs(strategy: StrategyProfile, priors: TypePriors, rule: OffPathRule) -> BeliefSystem:
    ax = _axes(strategy.grids)
    uni_lik = strategy.university_likelihood()
    mu_u = {}
    mu_c = {}
    for ui, policy in enumerate(ax.policies):
        post = posterior_university(priors, uni_lik, policy, rule)
        mu_u[policy] = tuple(post[t] for t in UniversityType)
        lik = strategy.sponsor_likelihood(policy)
        for ci in sorted(set(strategy.sponsor[:, ui].tolist())):
            c_act = ax.sponsors[ci]
            mu_c[(policy, c_act)] = tuple(posterior_sponsor(priors, lik, policy, c_act, rule).tolist())
    return BeliefSystem(mu_u, mu_c, priors, rule)


def pbe_search(config: GameConfig, priors: TypePriors | None = None,
               grids: ActionGrids | None = None, max_iter: int = 20,
               off_path_rule: OffPathRule = OffPathRule.REVERT_TO_PRIOR) -> PBEResult:
    """Iterate best responses stage by stage until the pure strategies stop changing.

    Each iteration solves the students at every information set, then the
    sponsor at every (type, policy) pair, then the university for each of
    its types, and finally recomputes posteriors from the new strategies.
    Starting strategies pick the first grid action everywhere.
    """
    if max_iter < 1:
        raise ValidationError(f"max_iter must be at least 1, got {max_iter!r}", "max_iter")
    grids = grids or config.grids
    priors = priors or config.priors
    off_path_rule = OffPathRule(off_path_rule)
    ax = _axes(grids)
    n_u, n_c = len(ax.policies), len(ax.sponsors)
    theta_index = {t: k for k, t in enumerate(priors.sponsor_grid)}

    current = StrategyProfile(
        grids, priors.sponsor_grid, {t: 0 for t in UniversityType},
        np.zeros((priors.n_theta, n_u), dtype=int),
        np.zeros((len(StudentCost), n_u, n_c), dtype=int),
    )
    beliefs = _beliefs(current, priors, off_path_rule)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        student = np.empty_like(current.student)
        for ui, policy in enumerate(ax.policies):
            student[:, ui, :] = student_response_table(policy, config, grids)[0]

        sponsor = np.empty_like(current.sponsor)
        for ui, policy in enumerate(ax.policies):
            expected = _expected_over_students(
                sponsor_payoff_table(policy, student[:, ui, :], config, grids), priors)
            sponsor[:, ui] = int(first_argmax(expected))

        def sponsor_rule(theta, policy, sponsor=sponsor):
            return ax.sponsors[sponsor[theta_index[theta], ax.policy_index[policy]]]

        def student_rule(stype, policy, c_act, student=student):
            k = list(StudentCost).index(stype.label)
            return ax.students[student[k, ax.policy_index[policy], ax.sponsor_index[c_act]]]

        university = {}
        for utype in UniversityType:
            policy, _ = university_best_policy(utype, config, grids, priors, sponsor_rule, student_rule)
            university[utype] = ax.policy_index[policy]

        new = StrategyProfile(grids, priors.sponsor_grid, university, sponsor, student)
        beliefs = _beliefs(new, priors, off_path_rule)
        if new.same_as(current):
            converged = True
            current = new
            break
        current = new
    return PBEResult(current, beliefs, converged, iterations)
