"""Batch front end: problem files in, traces and reports out.

Exit status: 0 on success, 2 when the engine refuses the locus or the input
is outside the nice fragment, 1 on malformed input or an invalid request.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Mapping, Optional

from .artinian import equiresolve_attempt, permissible_any_v, v_permissible_check
from .errors import DesingError, NotNice, ParseError, UnsupportedLocus
from .ideals import diff_closure, ideal_order_at
from .monomial import gamma, make_monomial_form, max_gamma, resolve_monomial
from .multiideal import (
    associated_basic_object,
    equiv_spotcheck,
    sing_member_multi,
    transform_multiideal,
)
from .problem import (
    Problem,
    center_from_data,
    load_problem,
    monomial_form_from_problem,
    monomial_trace_payload,
    render_payload,
    script_from_data,
    trace_payload,
)
from .resolution import resolve

PAIR_SPEC_HINT = 'pair specs look like "pair b=4 exps=[2,3]"'


def _parse_pair_spec(text: str):
    """Read one "pair b=K exps=[a,b,...]" line into (mark, exponents)."""
    body = text.strip()
    if body.startswith("pair "):
        body = body[len("pair "):].strip()
    mark: Optional[int] = None
    exps: Optional[List[int]] = None
    for field in body.split():
        if field.startswith("b="):
            try:
                mark = int(field[2:])
            except ValueError:
                raise ParseError("bad mark in %r; %s" % (text, PAIR_SPEC_HINT))
        elif field.startswith("exps=[") and field.endswith("]"):
            inner = field[len("exps=["):-1]
            try:
                exps = [int(e) for e in inner.split(",") if e != ""]
            except ValueError:
                raise ParseError("bad exponents in %r; %s" % (text, PAIR_SPEC_HINT))
        else:
            raise ParseError("unknown field %r in %r; %s" % (field, text, PAIR_SPEC_HINT))
    if mark is None or exps is None:
        raise ParseError("incomplete pair spec %r; %s" % (text, PAIR_SPEC_HINT))
    return mark, exps


def _emit(args, report_lines: List[str], payload: Optional[Mapping[str, object]]) -> None:
    wants_report = args.emit in ("report", "both")
    wants_trace = args.emit in ("trace", "both")
    if wants_report and report_lines:
        sys.stdout.write("\n".join(report_lines) + "\n")
    if wants_trace and payload is not None:
        sys.stdout.write(render_payload(payload))


def _check_chart_limit(args, count: int) -> None:
    if args.chart_limit is not None and count > args.chart_limit:
        raise UnsupportedLocus(
            "the cover holds %d charts, over the limit %d"
            % (count, args.chart_limit)
        )


def _require(parameters: Mapping[str, object], key: str):
    if key not in parameters:
        raise ParseError("problem.parameters: the command needs %r" % key)
    return parameters[key]


def _points_to_check(problem: Problem):
    mi = problem.multiideal
    if mi.marked_points:
        return mi.marked_points
    raise ParseError("problem.marked_points: the command needs at least one point")


def cmd_sing(args, problem: Problem) -> List[str]:
    mi = problem.multiideal
    lines = []
    for pt in _points_to_check(problem):
        inside = sing_member_multi(mi, pt.chart_id, pt.values)
        lines.append(
            "%s (chart %s): %s"
            % (pt.label, pt.chart_id, "singular" if inside else "not singular")
        )
    return lines


def cmd_order(args, problem: Problem) -> List[str]:
    mi = problem.multiideal
    lines = []
    for pt in _points_to_check(problem):
        piece = mi.piece(pt.chart_id)
        for i in range(mi.npairs):
            value = ideal_order_at(piece.pair_ideal(i), pt.values)
            lines.append(
                "%s (chart %s) pair %d: order %s, mark %d"
                % (pt.label, pt.chart_id, i + 1, value, mi.marks[i])
            )
    return lines


def cmd_delta(args, problem: Problem) -> List[str]:
    mi = problem.multiideal
    pair = problem.parameters.get("pair", 1)
    count = problem.parameters.get("count", 1)
    if not isinstance(pair, int) or not 1 <= pair <= mi.npairs:
        raise ParseError("problem.parameters.pair: expected an index in 1..%d" % mi.npairs)
    if not isinstance(count, int) or count < 0:
        raise ParseError("problem.parameters.count: expected a nonnegative integer")
    lines = ["pair %d, %d derivative round%s" % (pair, count, "" if count == 1 else "s")]
    for cid in mi.chart_ids():
        piece = mi.piece(cid)
        closure = diff_closure(piece.pair_ideal(pair - 1), count)
        shown = ", ".join(piece.chart.show(g) for g in closure.gens)
        lines.append("chart %s: (%s)" % (cid, shown or "0"))
    return lines


def cmd_blowup(args, problem: Problem) -> List[str]:
    mi = problem.multiideal
    center = center_from_data(_require(problem.parameters, "center"), mi)
    exc_hid = problem.parameters.get("exceptional_id")
    if exc_hid is None:
        exc_hid = "E%d" % (len(mi.divisors) + 1)
    if not isinstance(exc_hid, str):
        raise ParseError("problem.parameters.exceptional_id: expected a string")
    birth = 1 + max((rec.birth for rec in mi.divisors), default=0)
    after = transform_multiideal(mi, center, exc_hid, birth)
    _check_chart_limit(args, len(after.pieces))
    lines = ["blown up %s -> divisor %s" % (center.describe(mi), exc_hid)]
    for piece in after.pieces:
        lines.append("chart %s:" % piece.chart.cid)
        for i in range(after.npairs):
            shown = ", ".join(piece.chart.show(g) for g in piece.pair_gens[i])
            lines.append("  pair %d: (%s)" % (i + 1, shown or "0"))
    return lines


def cmd_gamma(args, problem: Optional[Problem]) -> List[str]:
    if args.pair_specs:
        parsed = [_parse_pair_spec(text) for text in args.pair_specs]
        width = len(parsed[0][1])
        if any(len(exps) != width for _, exps in parsed):
            raise ParseError("all pair specs need the same number of exponents")
        form = make_monomial_form(
            [mark for mark, _ in parsed],
            ["H%d" % (k + 1) for k in range(width)],
            [exps for _, exps in parsed],
        )
    elif problem is not None:
        form = monomial_form_from_problem(problem)
    else:
        raise ParseError("gamma needs a problem file or inline pair specs")
    value, minimal = max_gamma(form)
    lines = [str(value)]
    for stratum in minimal:
        ids = ", ".join(form.hyp_ids[i] for i in stratum)
        lines.append("attained on {%s}: %s" % (ids, gamma(form, stratum)))
    return lines


def cmd_resolve_monomial(args, problem: Problem):
    form = monomial_form_from_problem(problem)
    mt = resolve_monomial(form, step_cap=args.step_cap)
    lines = []
    for k, step in enumerate(mt.steps):
        comps = "; ".join("{%s}" % ", ".join(c) for c in step.components)
        lines.append("step %d: value %s, components %s" % (k, step.value, comps))
    lines.append("status: resolved in %d steps" % len(mt.steps))
    return lines, monomial_trace_payload(mt)


def cmd_resolve(args, problem: Problem):
    mi = problem.multiideal
    trace = resolve(mi, seed=args.seed, step_cap=args.step_cap)
    _check_chart_limit(args, len(trace.final.pieces))
    lines = []
    for step in trace.steps:
        lines.append("step %d [%s]: value %s" % (step.index, step.phase, step.value))
        for desc, hid in zip(step.center_desc, step.new_ids):
            lines.append("  center %s -> %s" % (desc, hid))
        lines.append("  charts: %s" % (", ".join(step.charts) or "(unchanged)"))
    lines.append("status: %s" % ("resolved" if trace.resolved else "unresolved"))
    return lines, trace_payload(trace, mi.ring)


def cmd_artinian_check(args, problem: Problem) -> List[str]:
    mi = problem.multiideal
    center = center_from_data(_require(problem.parameters, "center"), mi)
    v = problem.parameters.get("v")
    if v is not None:
        if not isinstance(v, int):
            raise ParseError("problem.parameters.v: expected an integer")
        report = v_permissible_check(mi, center, v)
    else:
        report = permissible_any_v(mi, center)
    lines = ["collection: %s" % report.render().replace("\n", "\n  ")]
    if mi.npairs > 1:
        assoc = associated_basic_object(mi)
        assoc_center = center_from_data(
            _require(problem.parameters, "center"), assoc
        )
        assoc_report = permissible_any_v(assoc, assoc_center)
        lines.append(
            "associated object (mark %d): %s"
            % (assoc.marks[0], assoc_report.render().replace("\n", "\n  "))
        )
    if problem.parameters.get("equiresolve"):
        trace = equiresolve_attempt(mi, seed=args.seed, step_cap=args.step_cap)
        lines.append(trace.render())
    return lines


def cmd_equiv_spotcheck(args, problem: Problem) -> List[str]:
    if args.against is None:
        raise ParseError("equiv-spotcheck needs --against with a second problem file")
    other = load_problem(args.against)
    script = script_from_data(
        problem.parameters.get("script", []), problem.multiideal
    )
    report = equiv_spotcheck(
        problem.multiideal, other.multiideal, script, seed=args.seed
    )
    verdict = "no disagreement found" if report.equivalent else "refuted"
    return [
        "spot check: %s after %d step%s"
        % (verdict, report.steps_run, "" if report.steps_run == 1 else "s"),
        report.detail,
    ]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="desing",
        description="chart-based resolution engine: traces and reports from problem files",
    )
    parser.add_argument(
        "command",
        choices=[
            "sing",
            "order",
            "delta",
            "blowup",
            "gamma",
            "resolve-monomial",
            "resolve",
            "artinian-check",
            "equiv-spotcheck",
        ],
    )
    parser.add_argument("problem", nargs="?", help="path to a JSON problem file")
    parser.add_argument(
        "pair_specs",
        nargs="*",
        help='inline pair specs for gamma, e.g. "pair b=4 exps=[2,3]"',
    )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--step-cap", type=int, default=64)
    parser.add_argument("--chart-limit", type=int, default=None)
    parser.add_argument("--emit", choices=["trace", "report", "both"], default="report")
    parser.add_argument(
        "--against", default=None, help="second problem file for equiv-spotcheck"
    )
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        problem: Optional[Problem] = None
        if args.command == "gamma" and args.problem and "=" in args.problem:
            args.pair_specs = [args.problem] + list(args.pair_specs)
            args.problem = None
        if args.problem is not None:
            problem = load_problem(args.problem)
        if args.command == "gamma":
            _emit(args, cmd_gamma(args, problem), None)
            return 0
        if problem is None:
            raise ParseError("the %s command needs a problem file" % args.command)
        if args.command == "sing":
            _emit(args, cmd_sing(args, problem), None)
        elif args.command == "order":
            _emit(args, cmd_order(args, problem), None)
        elif args.command == "delta":
            _emit(args, cmd_delta(args, problem), None)
        elif args.command == "blowup":
            _emit(args, cmd_blowup(args, problem), None)
        elif args.command == "resolve-monomial":
            lines, payload = cmd_resolve_monomial(args, problem)
            _emit(args, lines, payload)
        elif args.command == "resolve":
            lines, payload = cmd_resolve(args, problem)
            _emit(args, lines, payload)
        elif args.command == "artinian-check":
            _emit(args, cmd_artinian_check(args, problem), None)
        elif args.command == "equiv-spotcheck":
            _emit(args, cmd_equiv_spotcheck(args, problem), None)
        return 0
    except (UnsupportedLocus, NotNice) as exc:
        kind = "unsupported" if isinstance(exc, UnsupportedLocus) else "not-nice"
        sys.stderr.write("%s: %s\n" % (kind, exc))
        return 2
    except (ParseError, OSError) as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 1
    except DesingError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
