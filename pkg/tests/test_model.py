import math

import pytest
from hypothesis import given, settings, strategies as st

from capstone_game import (
    ActionProfile,
    OutcomeCoefficients,
    SponsorAction,
    StudentAction,
    StudentCost,
    StudentType,
    TypeProfile,
    UniversityAction,
    UniversityType,
    ValidationError,
    outcomes,
    preset,
    utilities,
)
from capstone_game.model import (
    expected_alignment,
    expected_documentation_quality,
    expected_publishability,
    expected_technical_quality,
    expected_timeliness,
)
from capstone_game.scenario import base_config

CFG = base_config()
COEF = CFG.coefficients
LOW = StudentType(StudentCost.LOW_COST, 0.15)

unit = st.floats(0.0, 1.0, allow_nan=False)
level = st.sampled_from([0, 1, 2])
posture = st.sampled_from(["supportive", "exploitative"])
orient = st.sampled_from(["L", "D", "M"])
ip = st.sampled_from(["permissive", "restrictive"])


@st.composite
def profiles(draw):
    return ActionProfile(
        UniversityAction(draw(unit), draw(ip), draw(level)),
        SponsorAction(draw(posture), draw(level), draw(unit)),
        StudentAction(draw(unit), draw(orient)),
    )


def test_case1_outcomes_by_hand():
    sc = preset("case1")
    out = outcomes(sc.actions, sc.types, COEF)
    # Q = .5 + .3*.85 + .1 - .04*.3 + .02, and so on
    assert out.technical_quality == pytest.approx(0.863, abs=1e-12)
    assert out.documentation_quality == pytest.approx(0.8725, abs=1e-12)
    assert out.timeliness == pytest.approx(0.805, abs=1e-12)
    assert out.alignment == pytest.approx(0.57, abs=1e-12)
    assert out.publishability == pytest.approx(0.1 + 0.25 + 0.25 * 0.8 + 0.15 * 0.863 + 0.1 * 0.8725, abs=1e-12)
    assert out.in_unit_interval


def test_utilities_match_formulas():
    sc = preset("case2")
    u = utilities(sc.actions, sc.types, sc.config)
    o = outcomes(sc.actions, sc.types, COEF)
    assert u.university == pytest.approx(0.4 * o.technical_quality + 0.3 * o.documentation_quality
                                         + 0.3 * o.publishability - 0.1 * 0.6 - 0.1 * 1)
    assert u.sponsor == pytest.approx(0.5 * o.alignment + 0.4 * o.timeliness - 0.05 * 0.8 ** 2)
    assert u.students == pytest.approx(0.4 * o.technical_quality + 0.3 * o.documentation_quality
                                       + 0.3 * o.timeliness - 0.15 * 0.4)


def test_scope_cost_is_quadratic():
    sc = preset("case1")
    a = sc.actions
    base = utilities(a, sc.types, CFG).sponsor
    grown = ActionProfile(a.university, SponsorAction(a.sponsor.posture, a.sponsor.mentoring, 0.6), a.student)
    # alignment and timeliness drop linearly, scope cost grows with d^2
    expected = -0.5 * 0.1 * 0.3 - 0.4 * 0.05 * 0.3 - 0.05 * (0.36 - 0.09)
    assert utilities(grown, sc.types, CFG).sponsor - base == pytest.approx(expected, abs=1e-12)


def test_outcomes_are_not_clamped():
    big = OutcomeCoefficients(**{**COEF.__dict__, "q0": 0.9, "q1": 0.9})
    p = ActionProfile(UniversityAction(1, "permissive", 2), SponsorAction("supportive", 2, 0),
                      StudentAction(1, "L"))
    out = outcomes(p, TypeProfile("high", 1.0, LOW), big)
    assert out.technical_quality > 1.0
    assert not out.in_unit_interval


@pytest.mark.parametrize("kwargs, path", [
    (dict(rubric=1.2, ip_policy="permissive", requirement=1), "university.r"),
    (dict(rubric=-0.1, ip_policy="permissive", requirement=1), "university.r"),
    (dict(rubric=0.5, ip_policy="open", requirement=1), "university.i"),
    (dict(rubric=0.5, ip_policy="permissive", requirement=3), "university.m"),
    (dict(rubric=0.5, ip_policy="permissive", requirement=True), "university.m"),
])
def test_university_action_validation(kwargs, path):
    with pytest.raises(ValidationError) as err:
        UniversityAction(**kwargs)
    assert err.value.path == path


def test_other_action_validation():
    with pytest.raises(ValidationError, match="sponsor.d"):
        SponsorAction("supportive", 1, -0.1)
    with pytest.raises(ValidationError, match="sponsor.o"):
        SponsorAction("supportive", 1.5, 0.1)
    with pytest.raises(ValidationError, match="student.e"):
        StudentAction(1.01, "L")
    with pytest.raises(ValidationError, match="student.x"):
        StudentAction(0.5, "Q")
    with pytest.raises(ValidationError, match="types.sponsor"):
        TypeProfile("high", 1.5, LOW)
    with pytest.raises(ValidationError, match="greater than zero"):
        StudentType(StudentCost.LOW_COST, 0.0)
    with pytest.raises(ValidationError, match="finite"):
        StudentAction(math.nan, "L")


def test_publishability_normalization_enforced():
    with pytest.raises(ValidationError, match="publishability normalization violated"):
        OutcomeCoefficients(**{**COEF.__dict__, "p0": 0.3})
    with pytest.raises(ValidationError, match="coefficients.q3"):
        OutcomeCoefficients(**{**COEF.__dict__, "q3": -0.01})


# -- affine structure ---------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(profiles(), st.sampled_from([0.05, 0.1, 0.25]))
def test_effort_slopes_are_exact(p, h):
    """Finite differences in e reproduce the coefficients to rounding."""
    e = min(p.student.effort, 1.0 - h)
    lo = StudentAction(e, p.student.orientation)
    hi = StudentAction(e + h, p.student.orientation)
    c = COEF
    dq = expected_technical_quality(hi, p.sponsor, c) - expected_technical_quality(lo, p.sponsor, c)
    dd = (expected_documentation_quality(hi, p.university, p.sponsor, c)
          - expected_documentation_quality(lo, p.university, p.sponsor, c))
    dt = expected_timeliness(hi, p.sponsor, c) - expected_timeliness(lo, p.sponsor, c)
    da = expected_alignment(hi, p.sponsor, c) - expected_alignment(lo, p.sponsor, c)
    assert dq / h == pytest.approx(c.q1, abs=1e-9)
    assert dd / h == pytest.approx(c.d1, abs=1e-9)
    assert dt / h == pytest.approx(c.t1, abs=1e-9)
    assert da == 0.0


@settings(max_examples=200, deadline=None)
@given(profiles(), st.sampled_from([0.05, 0.1, 0.25]))
def test_scope_and_rubric_slopes_are_exact(p, h):
    c = COEF
    d = min(p.sponsor.scope, 1.0 - h)
    lo = SponsorAction(p.sponsor.posture, p.sponsor.mentoring, d)
    hi = SponsorAction(p.sponsor.posture, p.sponsor.mentoring, d + h)
    s = p.student
    assert (expected_technical_quality(s, hi, c) - expected_technical_quality(s, lo, c)) / h \
        == pytest.approx(-c.q4, abs=1e-9)
    assert (expected_timeliness(s, hi, c) - expected_timeliness(s, lo, c)) / h == pytest.approx(-c.t3, abs=1e-9)
    assert (expected_alignment(s, hi, c) - expected_alignment(s, lo, c)) / h == pytest.approx(-c.a3, abs=1e-9)
    r = min(p.university.rubric, 1.0 - h)
    u_lo = UniversityAction(r, p.university.ip_policy, p.university.requirement)
    u_hi = UniversityAction(r + h, p.university.ip_policy, p.university.requirement)
    diff = (expected_documentation_quality(s, u_hi, p.sponsor, c)
            - expected_documentation_quality(s, u_lo, p.sponsor, c))
    assert diff / h == pytest.approx(c.d3, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(unit, unit, unit, unit)
def test_publishability_slopes(theta, q, doc, h):
    c = COEF
    u = UniversityAction(0.5, "restrictive", 1)
    base = expected_publishability(u, theta, q, doc, c)
    assert expected_publishability(u, theta + h, q, doc, c) - base == pytest.approx(c.p2 * h, abs=1e-12)
    assert expected_publishability(u, theta, q + h, doc, c) - base == pytest.approx(c.p3 * h, abs=1e-12)
    assert expected_publishability(u, theta, q, doc + h, c) - base == pytest.approx(c.p4 * h, abs=1e-12)
    perm = UniversityAction(0.5, "permissive", 1)
    assert expected_publishability(perm, theta, q, doc, c) - base == pytest.approx(c.p1, abs=1e-12)


@st.composite
def normalized_p(draw):
    raw = [draw(st.floats(0.0, 1.0)) for _ in range(5)]
    scale = draw(st.floats(0.0, 1.0)) / max(sum(raw), 1e-9)
    return [min(v * scale, 1.0) for v in raw]


@settings(max_examples=300, deadline=None)
@given(normalized_p(), ip, unit, unit, unit)
def test_publishability_bounded(ps, policy, theta, q, doc):
    if sum(ps) > 1.0:
        ps = [v / sum(ps) for v in ps]
    coef = OutcomeCoefficients(**{**COEF.__dict__, **dict(zip(["p0", "p1", "p2", "p3", "p4"], ps))})
    p = expected_publishability(UniversityAction(0.0, policy, 0), theta, q, doc, coef)
    assert -1e-12 <= p <= 1.0 + 1e-12


@settings(max_examples=100, deadline=None)
@given(profiles(), unit, st.sampled_from(list(UniversityType)))
def test_utilities_are_deterministic(p, theta, utype):
    types = TypeProfile(utype, theta, LOW)
    assert utilities(p, types, CFG) == utilities(p, types, CFG)
