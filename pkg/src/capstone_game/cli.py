"""Command-line front end.

Exit codes: 0 success, 1 validation or usage error, 2 PBE search did not
converge, 3 I/O failure. Data goes to stdout (or ``--out``), diagnostics to
stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Sequence

from .beliefs import OffPathRule
from .config import ActionGrids
from .exceptions import CapstoneGameError, ValidationError
from .mechanism import WelfareWeights, optimal_policy, weight_sweep
from .model import SponsorAction, StudentAction, StudentCost, UniversityAction, UniversityType
from .report import FORMATS, Section, emit_report, render_sections
from .scenario import PRESET_NAMES, Scenario, evaluate, load_scenario, preset
from .strategy import (
    pbe_search,
    sponsor_best_response,
    student_best_response,
    university_best_policy,
    verify_local_equilibrium,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NONCONVERGED, EXIT_IO = 0, 1, 2, 3
THREADS_ENV = "CAPSTONE_GAME_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


class _IOFailure(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=PRESET_NAMES, help="built-in case study")
    src.add_argument("--scenario", metavar="PATH", help="scenario JSON file")
    common.add_argument("--format", choices=FORMATS, default="table")
    common.add_argument("--out", metavar="PATH", help="write the document here instead of stdout")
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads for policy enumeration (fallback: ${THREADS_ENV})")

    parser = _Parser(prog="capstone-game", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    sub.add_parser("evaluate", parents=[common], help="outcomes, payoffs and regime of a scenario")

    p = sub.add_parser("best-response", parents=[common], help="each player's best response to the others")
    p.add_argument("--step", type=float, help="grid step for e, d and r")

    p = sub.add_parser("verify", parents=[common], help="one-step unilateral deviation audit")
    p.add_argument("--step", type=float, default=0.05, help="deviation step for e, d and r")
    p.add_argument("--tolerance", type=float, default=1e-9)

    p = sub.add_parser("solve", parents=[common], help="pure-strategy PBE search")
    p.add_argument("--step", type=float, help="grid step for e, d and r")
    p.add_argument("--max-iter", type=int, default=20)
    p.add_argument("--offpath", choices=[r.value for r in OffPathRule], default=OffPathRule.REVERT_TO_PRIOR.value)

    for name, text in (("optimize", "welfare-maximizing policy"), ("sweep", "optimal policy across welfare weights")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--step", type=float, help="grid step for e, d and r")
        p.add_argument("--lambda", dest="lam", type=float, action="append", metavar="LAMBDA",
                       help="student welfare weight" + (" (repeatable)" if name == "sweep" else ""))
        p.add_argument("--eta", type=float, action="append",
                       help="sponsor welfare weight" + (" (repeatable)" if name == "sweep" else ""))
        p.add_argument("--avg-university-type", action="store_true",
                       help="average the university payoff over its type prior")

    p = sub.add_parser("reproduce", parents=[common], help="re-evaluate the built-in case studies")
    p.add_argument("case", nargs="?", choices=PRESET_NAMES)
    p.add_argument("--all", action="store_true", help="all three cases plus the cross-case summary")
    return parser


def _threads(args) -> int:
    n = args.threads
    if n is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if not raw:
            return 1
        try:
            n = int(raw)
        except ValueError:
            raise ValidationError(f"expected a positive integer, got {raw!r}", THREADS_ENV) from None
    if n < 1:
        raise ValidationError(f"expected a positive integer, got {n}", "threads")
    return n


def _scenario(args) -> Scenario:
    if args.preset:
        return preset(args.preset)
    if not args.scenario:
        raise UsageError(f"capstone-game {args.command}: one of --preset or --scenario is required")
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _IOFailure(f"cannot read scenario {args.scenario!r}: {exc.strerror or exc}") from None
    return load_scenario(text)


def _grids(args, sc: Scenario) -> ActionGrids:
    g = sc.config.grids
    if getattr(args, "step", None) is None:
        return g
    return ActionGrids.from_steps(args.step, args.step, args.step, sc.config.d_max,
                                  ip_policies=g.ip_policies, requirements=g.requirements,
                                  postures=g.postures, mentoring_levels=g.mentoring_levels,
                                  orientations=g.orientations)


def _require_profile(sc: Scenario) -> None:
    if sc.actions is None or sc.types is None:
        raise ValidationError("this command needs a scenario with 'actions' and 'types'",
                              "actions" if sc.actions is None else "types")


def _act(action) -> str:
    if isinstance(action, UniversityAction):
        return f"r={action.rubric:g} i={action.ip_policy.value} m={action.requirement}"
    if isinstance(action, SponsorAction):
        return f"s={action.posture.value} o={action.mentoring} d={action.scope:g}"
    if isinstance(action, StudentAction):
        return f"e={action.effort:g} x={action.orientation.value}"
    return str(action)


def _university_type(args, sc: Scenario) -> UniversityType | None:
    if getattr(args, "avg_university_type", False):
        return None
    return sc.types.university if sc.types is not None else UniversityType.HIGH


# -- commands ----------------------------------------------------------------

def cmd_evaluate(args) -> tuple[str, int]:
    return emit_report([evaluate(_scenario(args))], args.format), EXIT_OK


def cmd_best_response(args) -> tuple[str, int]:
    sc = _scenario(args)
    _require_profile(sc)
    cfg, a, t = sc.config, sc.actions, sc.types
    grids = _grids(args, sc)
    s_act, s_val = student_best_response(t.student, a.university, a.sponsor, cfg, grids)
    c_act, c_val = sponsor_best_response(t.sponsor, a.university, cfg, grids)
    u_act, u_val = university_best_policy(t.university, cfg, grids)
    rows = (
        ("university", f"theta_U={t.university.value}", _act(a.university), _act(u_act), u_val),
        ("sponsor", f"theta_C={t.sponsor:g}", _act(a.sponsor), _act(c_act), c_val),
        ("students", f"theta_S={t.student.label.value}", _act(a.student), _act(s_act), s_val),
    )
    sec = Section("best responses", ("player", "type", "scenario_action", "best_response", "utility"), rows,
                  ("university utility is expected over the sponsor and student type priors; "
                   "sponsor utility is expected over the student type prior",))
    return render_sections([sec], args.format, {"command": "best-response"}), EXIT_OK


def cmd_verify(args) -> tuple[str, int]:
    sc = _scenario(args)
    _require_profile(sc)
    audit = verify_local_equilibrium(sc.actions, sc.types, sc.config, args.step, args.tolerance)
    rows = []
    for rep in audit.reports:
        best = rep.best_deviation
        rows.append((rep.player, "summary", best.coordinate if best else "", best.before if best else None,
                     best.after if best else None, rep.max_gain,
                     "consistent" if rep.consistent else "inconsistent"))
        for dev in rep.deviations:
            rows.append((rep.player, "deviation", dev.coordinate, dev.before, dev.after, dev.gain,
                         "improving" if dev.gain > rep.tolerance else ""))
    rows = [tuple(v.value if hasattr(v, "value") else v for v in row) for row in rows]
    notes = (f"step={args.step:g} tolerance={args.tolerance:g}",
             f"overall: {'consistent' if audit.consistent else 'inconsistent'}")
    sec = Section("deviation audit", ("player", "kind", "coordinate", "before", "after", "gain", "flag"),
                  tuple(rows), notes)
    meta = {"command": "verify", "step": args.step, "tolerance": args.tolerance, "consistent": audit.consistent}
    return render_sections([sec], args.format, meta), EXIT_OK


def cmd_solve(args) -> tuple[str, int]:
    sc = _scenario(args)
    cfg = sc.config
    if args.max_iter < 1:
        raise ValidationError("must be at least 1", "max-iter")
    rule = OffPathRule(args.offpath)
    res = pbe_search(cfg, cfg.priors, _grids(args, sc), args.max_iter, rule)
    strat, beliefs = res.strategy, res.beliefs
    uni_rows = []
    for utype in UniversityType:
        pol = strat.university_action(utype)
        mu = beliefs.university[pol]
        uni_rows.append((utype.value, pol.rubric, pol.ip_policy.value, pol.requirement, mu[0], mu[1]))
    resp_rows = []
    seen = []
    for utype in UniversityType:
        pol = strat.university_action(utype)
        if pol in seen:
            continue
        seen.append(pol)
        for theta in strat.theta_grid:
            c_act = strat.sponsor_action(theta, pol)
            mu_c = beliefs.at(pol, c_act).mu_sponsor
            mean = sum(t * w for t, w in zip(strat.theta_grid, mu_c))
            lo = strat.student_action(StudentCost.LOW_COST, pol, c_act)
            hi = strat.student_action(StudentCost.HIGH_COST, pol, c_act)
            resp_rows.append((_act(pol), theta, c_act.posture.value, c_act.mentoring, c_act.scope, mean,
                              lo.effort, lo.orientation.value, hi.effort, hi.orientation.value))
    notes = (f"converged={'true' if res.converged else 'false'} iterations={res.iterations} "
             f"offpath={rule.value}",)
    sections = [
        Section("university", ("university_type", "r", "i", "m", "posterior_low", "posterior_high"),
                tuple(uni_rows), notes),
        Section("responses", ("policy", "theta_C", "s", "o", "d", "posterior_mean_theta_C",
                              "e_low", "x_low", "e_high", "x_high"), tuple(resp_rows)),
    ]
    meta = {"command": "solve", "converged": res.converged, "iterations": res.iterations,
            "offpath": rule.value}
    code = EXIT_OK if res.converged else EXIT_NONCONVERGED
    return render_sections(sections, args.format, meta), code


def _single(values, name) -> float:
    if not values:
        return 0.0
    if len(values) > 1:
        raise ValidationError("give at most one value (use 'sweep' for several)", name)
    return values[0]


def cmd_optimize(args) -> tuple[str, int]:
    sc = _scenario(args)
    weights = WelfareWeights(_single(args.lam, "lambda"), _single(args.eta, "eta"))
    utype = _university_type(args, sc)
    best, surface = optimal_policy(sc.config, sc.config.priors, weights, _grids(args, sc), utype,
                                   _threads(args))
    rows = tuple((r.policy.rubric, r.policy.ip_policy.value, r.policy.requirement, r.e_university,
                  r.e_students, r.e_sponsor, r.welfare, r.policy == best) for r in surface.rows)
    mode = "averaged over the university type prior" if utype is None else f"university type {utype.value}"
    notes = (f"lambda={weights.lam:g} eta={weights.eta:g}; {mode}", f"optimal policy: {_act(best)}")
    sec = Section("welfare surface", ("r", "i", "m", "E_U_U", "E_U_S", "E_U_C", "welfare", "optimal"),
                  rows, notes)
    meta = {"command": "optimize", "lambda": weights.lam, "eta": weights.eta,
            "university_type": utype.value if utype else "averaged"}
    return render_sections([sec], args.format, meta), EXIT_OK


def cmd_sweep(args) -> tuple[str, int]:
    sc = _scenario(args)
    lambdas = args.lam or [0.0, 0.5, 1.0]
    etas = args.eta or [0.0, 0.5, 1.0]
    utype = _university_type(args, sc)
    rows = weight_sweep(sc.config, sc.config.priors, lambdas, etas, _grids(args, sc), utype, _threads(args))
    data = tuple((r.lam, r.eta, r.policy.rubric, r.policy.ip_policy.value, r.policy.requirement,
                  r.welfare, r.e_university, r.e_students, r.e_sponsor) for r in rows)
    mode = "averaged over the university type prior" if utype is None else f"university type {utype.value}"
    sec = Section("weight sweep", ("lambda", "eta", "r", "i", "m", "welfare", "E_U_U", "E_U_S", "E_U_C"),
                  data, (mode,))
    meta = {"command": "sweep", "university_type": utype.value if utype else "averaged"}
    return render_sections([sec], args.format, meta), EXIT_OK


def cmd_reproduce(args) -> tuple[str, int]:
    if args.preset or args.scenario:
        raise UsageError("capstone-game reproduce: takes a case name or --all, not --preset/--scenario")
    if args.all and args.case:
        raise UsageError("capstone-game reproduce: give either a case name or --all")
    if not args.all and not args.case:
        raise UsageError("capstone-game reproduce: a case name (case1, case2, case3) or --all is required")
    names = PRESET_NAMES if args.all else (args.case,)
    return emit_report([evaluate(preset(n)) for n in names], args.format), EXIT_OK


COMMANDS = {
    "evaluate": cmd_evaluate,
    "best-response": cmd_best_response,
    "verify": cmd_verify,
    "solve": cmd_solve,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "reproduce": cmd_reproduce,
}


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        _threads(args)
        document, code = COMMANDS[args.command](args)
    except SystemExit as exc:
        # --help and --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc), file=stderr)
        return EXIT_VALIDATION
    except _IOFailure as exc:
        print(f"capstone-game: {exc}", file=stderr)
        return EXIT_IO
    except (ValidationError, CapstoneGameError) as exc:
        print(f"capstone-game: invalid input: {exc}", file=stderr)
        return EXIT_VALIDATION
    if code == EXIT_NONCONVERGED:
        print(f"capstone-game: PBE search did not converge within {args.max_iter} iterations",
              file=stderr)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(document)
        except OSError as exc:
            print(f"capstone-game: cannot write {args.out!r}: {exc.strerror or exc}", file=stderr)
            return EXIT_IO
    else:
        stdout.write(document)
        stdout.flush()
    return code


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))
