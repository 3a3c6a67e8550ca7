import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capstone_game import (
    ActionGrids,
    ActionProfile,
    SponsorAction,
    StudentAction,
    StudentCost,
    StudentType,
    TypePriors,
    TypeProfile,
    UniversityAction,
    UniversityType,
    ValidationError,
    backward_induction,
    pbe_search,
    preset,
    sponsor_best_response,
    student_best_response,
    university_best_policy,
    utilities,
    verify_local_equilibrium,
)
from capstone_game.model import Orientation, Posture, SponsorWeights
from capstone_game.scenario import base_config
from capstone_game.strategy import first_argmax, respond

from factories import random_config
from oracle import Oracle, payoffs

CFG = base_config()
CS1 = preset("case1")
CS2 = preset("case2")
LOW = CFG.student_type(StudentCost.LOW_COST)
COARSE = ActionGrids.from_steps(0.25, 0.25, 0.25)


def test_first_argmax_prefers_earliest_near_tie():
    assert first_argmax(np.array([1.0, 1.0 + 1e-14, 0.5])) == 0
    assert first_argmax(np.array([1.0, 1.0 + 1e-6, 0.5])) == 1
    assert list(first_argmax(np.array([[0.0, 2.0], [3.0, 3.0]]), axis=1)) == [1, 0]


# -- student -------------------------------------------------------------------

def test_student_maximal_effort_in_case1_environment():
    a = CS1.actions
    act, val = student_best_response(LOW, a.university, a.sponsor, CFG)
    assert act == StudentAction(1.0, "L")
    assert val == pytest.approx(utilities(ActionProfile(a.university, a.sponsor, act), CS1.types, CFG).students)


def test_student_zero_effort_when_costly():
    a = CS1.actions
    act, _ = student_best_response(StudentType(StudentCost.HIGH_COST, 10.0), a.university, a.sponsor, CFG)
    assert act == StudentAction(0.0, "L")


def test_student_orientation_tie_goes_to_learning():
    coef = CFG.coefficients.__dict__ | {"d2": 0.0, "q5": 0.0}
    cfg = CFG.replace(coefficients=type(CFG.coefficients)(**coef))
    a = CS1.actions
    act, _ = student_best_response(LOW, a.university, a.sponsor, cfg)
    assert act.orientation is Orientation.LEARNING


# -- sponsor ---------------------------------------------------------------------

def test_sponsor_never_adds_scope():
    act, _ = sponsor_best_response(0.2, UniversityAction(0.6, "permissive", 1), CS2.config)
    assert act.scope == 0.0


def test_sponsor_skips_costly_mentoring():
    act, _ = sponsor_best_response(0.8, CS1.actions.university, CFG)
    assert act.mentoring == 0
    assert act.posture is Posture.SUPPORTIVE


def test_free_mentoring_is_maxed():
    w = CFG.weights
    free = type(w)(w.university, w.rubric_cost, w.requirement_cost,
                   SponsorWeights(w.sponsor.alignment, w.sponsor.timeliness, 0.0, 0.0), w.student)
    act, _ = sponsor_best_response(0.5, CS1.actions.university, CFG.replace(weights=free))
    assert act.mentoring == 2


def test_sponsor_answer_is_type_free():
    pol = CS1.actions.university
    answers = {sponsor_best_response(t, pol, CFG, COARSE) for t in (0.0, 0.3, 1.0)}
    assert len(answers) == 1


def test_sponsor_uses_supplied_student_rule():
    pol = CS1.actions.university

    def lazy(stype, u, c):
        # students only show up when mentored twice
        return StudentAction(1.0 if c.mentoring == 2 else 0.0, "L")

    default, _ = sponsor_best_response(0.5, pol, CFG, COARSE)
    act, val = sponsor_best_response(0.5, pol, CFG, COARSE, student_rule=lazy)
    oracle_best = max(
        (payoffs(CFG, (pol.rubric, pol.ip_policy.value, pol.requirement), (c.posture.value, c.mentoring, c.scope),
                 (lazy(None, pol, c).effort, "L"), "high", 0.5, 0.15)[1], -k, c)
        for k, c in enumerate(COARSE.sponsor_actions())
    )
    assert act == oracle_best[2]
    assert val == pytest.approx(oracle_best[0], abs=1e-12)
    assert default.mentoring == 0


def test_sponsor_rejects_type_outside_unit_interval():
    with pytest.raises(ValidationError):
        sponsor_best_response(1.5, CS1.actions.university, CFG, COARSE)


# -- university ------------------------------------------------------------------

def test_free_rubric_is_maxed():
    w = CFG.weights
    cfg = CFG.replace(weights=type(w)(w.university, 0.0, 0.0, w.sponsor, w.student))
    pol, _ = university_best_policy(UniversityType.HIGH, cfg, COARSE)
    assert pol.rubric == 1.0


def test_permissive_dominates():
    pol, _ = university_best_policy(UniversityType.LOW, CFG, COARSE)
    assert pol.ip_policy.value == "permissive"


def test_single_policy_grid():
    only = ActionGrids((0.0, 1.0), (0.0, 0.5), (0.4,), ("restrictive",), (2,))
    pol, _ = university_best_policy(UniversityType.HIGH, CFG, only)
    assert pol == UniversityAction(0.4, "restrictive", 2)


# -- backward induction ----------------------------------------------------------

def test_backward_induction_pinned_grid():
    assert backward_induction(CFG, CS1.types, ActionGrids.pinned(CS1.actions)) == CS1.actions


def test_backward_induction_full_grid():
    prof = backward_induction(CFG, CS1.types)
    assert prof.student.effort == 1.0
    again, _ = student_best_response(CS1.types.student, prof.university, prof.sponsor, CFG)
    assert again == prof.student


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_backward_induction_subgame_consistency(seed):
    cfg = random_config(np.random.default_rng(seed))
    types = TypeProfile(UniversityType.LOW, 0.3, cfg.student_type(StudentCost.HIGH_COST))
    prof = backward_induction(cfg, types)
    assert student_best_response(types.student, prof.university, prof.sponsor, cfg)[0] == prof.student


# -- audit ----------------------------------------------------------------------

def test_audit_case1_student_gain():
    audit = verify_local_equilibrium(CS1.actions, CS1.types, CFG, step=0.05)
    dev = audit.student.find("e", 0.9)
    assert dev.gain == pytest.approx(0.00525, abs=1e-9)
    assert not audit.student.consistent
    assert audit.student.best_deviation.after == 0.9


def test_audit_case2_sponsor_mentoring_loss():
    audit = verify_local_equilibrium(CS2.actions, CS2.types, CS2.config, step=0.05)
    assert audit.sponsor.find("o", 1).gain == pytest.approx(-0.04, abs=1e-9)
    # the sponsor still gains from trimming scope
    assert audit.sponsor.find("d", 0.75).gain > 0


def test_zero_step_disables_audit():
    audit = verify_local_equilibrium(CS1.actions, CS1.types, CFG, step=0.0)
    assert audit.consistent
    assert all(r.max_gain == 0.0 and not r.deviations for r in audit.reports)


def test_audit_stays_inside_bounds():
    edge = ActionProfile(UniversityAction(1.0, "permissive", 0), SponsorAction("supportive", 0, 0.0),
                         StudentAction(1.0, "L"))
    audit = verify_local_equilibrium(edge, CS1.types, CFG, step=0.05)
    assert [d.after for d in audit.university.deviations if d.coordinate == "r"] == [0.95]
    assert [d.after for d in audit.sponsor.deviations if d.coordinate == "d"] == [0.05]
    assert [d.after for d in audit.student.deviations if d.coordinate == "e"] == [0.95]


def test_audit_rejects_scope_above_dmax():
    cfg = CFG.replace(d_max=0.5, grids=ActionGrids.from_steps(d_max=0.5))
    with pytest.raises(ValidationError, match="d_max"):
        verify_local_equilibrium(CS2.actions, CS2.types, cfg)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.05, 0.1, 0.25]))
def test_audit_soundness(seed, step):
    """Replaying every reported deviation reproduces its gain and the consistency flag."""
    rng = np.random.default_rng(seed)
    cfg = random_config(rng)
    prof = ActionProfile(
        UniversityAction(float(rng.choice(cfg.grids.rubrics)), rng.choice(["permissive", "restrictive"]),
                         int(rng.integers(3))),
        SponsorAction(rng.choice(["supportive", "exploitative"]), int(rng.integers(3)),
                      float(rng.choice(cfg.grids.scopes))),
        StudentAction(float(rng.choice(cfg.grids.efforts)), rng.choice(["L", "D", "M"])),
    )
    types = TypeProfile(UniversityType.HIGH, 0.4, cfg.student_type(StudentCost.LOW_COST))
    audit = verify_local_equilibrium(prof, types, cfg, step)
    base = utilities(prof, types, cfg)
    for rep, attr in zip(audit.reports, ("university", "sponsor", "students")):
        for dev in rep.deviations:
            assert dev.gain == getattr(utilities(dev.profile, types, cfg), attr) - getattr(base, attr)
        assert rep.consistent == all(d.gain <= rep.tolerance for d in rep.deviations)


# -- oracle agreement and grid properties ----------------------------------------

@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_best_responses_match_oracle(seed):
    cfg = random_config(np.random.default_rng(seed))
    orc = Oracle(cfg)
    for pol in cfg.grids.policies()[::7]:
        p = (pol.rubric, pol.ip_policy.value, pol.requirement)
        for c in cfg.grids.sponsor_actions()[::5]:
            for label in StudentCost:
                stype = cfg.student_type(label)
                act, val = student_best_response(stype, pol, c, cfg)
                ref, ref_val = orc.student(stype.effort_cost, p, (c.posture.value, c.mentoring, c.scope))
                assert (act.effort, act.orientation.value) == ref
                assert val == pytest.approx(ref_val, abs=1e-12)
        act, val = sponsor_best_response(0.5, pol, cfg)
        ref, ref_val = orc.sponsor(p, cfg.priors.student)
        assert (act.posture.value, act.mentoring, act.scope) == ref
        assert val == pytest.approx(ref_val, abs=1e-12)
    for utype in UniversityType:
        pol, val = university_best_policy(utype, cfg)
        ref, ref_val = orc.university(utype, cfg.priors)
        assert (pol.rubric, pol.ip_policy.value, pol.requirement) == ref
        assert val == pytest.approx(ref_val, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 0.25, 0.125]))
def test_halving_effort_step_never_hurts(seed, step):
    rng = np.random.default_rng(seed)
    cfg = random_config(rng)
    pol = UniversityAction(0.5, "permissive", 1)
    c = SponsorAction("exploitative", 1, 0.25)
    coarse = ActionGrids.from_steps(step, 0.25, 0.25)
    fine = ActionGrids.from_steps(step / 2, 0.25, 0.25)
    for label in StudentCost:
        stype = cfg.student_type(label)
        assert student_best_response(stype, pol, c, cfg, fine)[1] >= \
            student_best_response(stype, pol, c, cfg, coarse)[1] - 1e-12


def test_solvers_are_repeatable():
    first = [university_best_policy(t, CFG, COARSE) for t in UniversityType]
    assert first == [university_best_policy(t, CFG, COARSE) for t in UniversityType]


def test_respond_agrees_with_single_solves():
    pri = TypePriors.uniform(n_theta=11)
    pol = UniversityAction(0.25, "restrictive", 2)
    rm = respond(pol, CFG, COARSE, pri)
    c, _ = sponsor_best_response(0.3, pol, CFG, COARSE, pri)
    assert rm.sponsor_at(0.3) == c
    for label in StudentCost:
        s, _ = student_best_response(CFG.student_type(label), pol, c, CFG, COARSE)
        assert rm.student_at(0.3, label) == s


# -- PBE ---------------------------------------------------------------------------

def test_pbe_degenerate_grid():
    res = pbe_search(CFG, TypePriors.uniform(n_theta=11), ActionGrids.pinned(CS1.actions))
    assert res.converged and res.iterations == 1
    for utype in UniversityType:
        assert res.strategy.university_action(utype) == CS1.actions.university
    assert res.strategy.sponsor_action(0.5, CS1.actions.university) == CS1.actions.sponsor


def test_pbe_default_grid_effort():
    res = pbe_search(CFG)
    assert res.converged
    strat = res.strategy
    for utype in UniversityType:
        pol = strat.university_action(utype)
        for theta in strat.theta_grid:
            c = strat.sponsor_action(theta, pol)
            assert strat.student_action(StudentCost.LOW_COST, pol, c).effort == 1.0
            # the costly type faces a negative gradient (0.255 - 0.30)
            assert strat.student_action(StudentCost.HIGH_COST, pol, c).effort == 0.0


def test_pbe_beliefs_are_bayesian():
    pri = TypePriors.uniform(n_theta=11, university=(0.3, 0.7))
    res = pbe_search(CFG, pri, COARSE)
    strat, beliefs = res.strategy, res.beliefs
    for pol, mu in beliefs.university.items():
        assert sum(mu) == pytest.approx(1.0, abs=1e-9)
    on_path = strat.university_action(UniversityType.HIGH)
    # both types pool on the same policy, so the prior survives
    assert beliefs.university[on_path] == pytest.approx((0.3, 0.7))
    state = beliefs.at(on_path, strat.sponsor_action(0.0, on_path))
    assert state.on_path and sum(state.mu_sponsor) == pytest.approx(1.0, abs=1e-9)
    off = beliefs.at(on_path, SponsorAction("exploitative", 2, 1.0))
    assert not off.on_path and off.mu_sponsor == pri.sponsor_weights


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_pbe_fixed_point_passes_audit(seed):
    cfg = random_config(np.random.default_rng(seed))
    res = pbe_search(cfg)
    assert res.converged
    strat = res.strategy
    for utype in UniversityType:
        pol = strat.university_action(utype)
        for theta in strat.theta_grid[::5]:
            c = strat.sponsor_action(theta, pol)
            for label in StudentCost:
                prof = ActionProfile(pol, c, strat.student_action(label, pol, c))
                types = TypeProfile(utype, theta, cfg.student_type(label))
                audit = verify_local_equilibrium(prof, types, cfg, step=0.25)
                assert audit.consistent, audit


def test_pbe_reports_non_convergence():
    res = pbe_search(CFG, TypePriors.uniform(n_theta=3), COARSE, max_iter=1)
    assert not res.converged and res.iterations == 1
