"""Problem files and trace files: the textual interface of the package.

A problem file is JSON.  Version 1 schema:

    {
      "version": 1,
      "ring": "Q" | "Q[eps]/(eps^m)",
      "divisors": [{"id": "E1", "birth": 0}, ...],
      "charts": [
        {"id": "c",
         "coordinates": ["x", "y"],
         "w": ["x"],                      # names cutting the subvariety, optional
         "hypersurfaces": [["E1", "x"]]}  # [divisor id, coordinate name]
      ],
      "pairs": [
        {"mark": 2,
         "generators": ["y^2 - x^3"]}     # or {"c": [...], "c2": [...]} per chart
      ],
      "marked_points": [{"label": "a0", "chart": "c", "values": ["0", "0"]}],
      "declared_exponents": [[2, 0]],     # optional, one row per pair
      "parameters": {}                    # optional command parameters
    }

Rationals travel as strings "p/q" (or "p").  A flat generator list is parsed
in every chart; a mapping supplies per-chart generators.  Command parameters
understood by the front end:

    "center":  [{"chart": "c", "coordinates": ["x", "y"]}, ...]
    "z":       {"c": "z"}                # adapted coordinate per chart
    "v":       1                         # distinguished pair index
    "exceptional_id": "E7"               # id for the next blow-up divisor
    "pair":    1                         # pair selector, one-based
    "count":   1                         # derivative count
    "script":  [["transform", <center>, "E1"], ["restrict", <z>], ["extend", ["u"]]]

Trace files are JSON as well, with a versioned header, one record per step,
and a terminal section that reprints the final cover; every polynomial in it
re-parses to an equal value.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from dataclasses import dataclass, field

from .charts import AlignedCenter, Chart, HypRecord
from .errors import ParseError
from .monomial import MonomialForm, MonomialTrace, make_monomial_form
from .multiideal import Center, MarkedPoint, MultiIdeal, make_multiideal
from .poly import QQ, CoefRing
from .resolution import Trace

TRACE_FORMAT = "desing-trace"
MONOMIAL_TRACE_FORMAT = "desing-monomial-trace"
FILE_VERSION = 1

_RING_RE = re.compile(r"^Q\[eps\]/\(eps\^(\d+)\)$")


def parse_rational(text) -> Fraction:
    """Read a rational from "p/q", "p", or a JSON integer."""
    if isinstance(text, bool):
        raise ParseError("expected a rational, got a boolean")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ParseError("expected a rational string, got %r" % (text,))
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError("bad rational %r: %s" % (text, exc))


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


def ring_from_text(text: str) -> CoefRing:
    if text == "Q":
        return QQ
    m = _RING_RE.match(text.strip()) if isinstance(text, str) else None
    if m is None:
        raise ParseError('ring must be "Q" or "Q[eps]/(eps^m)", got %r' % (text,))
    width = int(m.group(1))
    if width < 1:
        raise ParseError("the truncation order must be positive, got %d" % width)
    return CoefRing(width)


def ring_to_text(ring: CoefRing) -> str:
    if not ring.artinian:
        return "Q"
    return "Q[eps]/(eps^%d)" % ring.width


@dataclass(frozen=True)
class Problem:
    """A parsed problem: the collection plus free-form command parameters."""

    multiideal: MultiIdeal
    parameters: Mapping[str, object] = field(default_factory=dict)
    source: str = "<data>"


_MISSING = object()


def _want(data, key, kind, where, default=_MISSING):
    value = data.get(key, default)
    if value is _MISSING:
        raise ParseError("%s: missing key %r" % (where, key))
    if kind is not None and not isinstance(value, kind):
        raise ParseError(
            "%s.%s: expected %s, got %r" % (where, key, kind.__name__, value)
        )
    return value


def _name_index(chart: Chart, name, where) -> int:
    if not isinstance(name, str) or name not in chart.names:
        raise ParseError(
            "%s: %r is not a coordinate of chart %s (has %s)"
            % (where, name, chart.cid, ", ".join(chart.names))
        )
    return chart.names.index(name)


def _parse_chart(entry, ring: CoefRing, known_hids, where) -> Chart:
    cid = _want(entry, "id", str, where)
    raw_names = _want(entry, "coordinates", list, where)
    if not raw_names or not all(isinstance(n, str) and n for n in raw_names):
        raise ParseError("%s.coordinates: need a nonempty list of names" % where)
    names = tuple(raw_names)
    stub = Chart(cid=cid, ring=ring, names=names, w_coords=frozenset())
    w_names = entry.get("w", [])
    if not isinstance(w_names, list):
        raise ParseError("%s.w: expected a list of coordinate names" % where)
    w_coords = frozenset(
        _name_index(stub, n, "%s.w" % where) for n in w_names
    )
    hyps: List[Tuple[str, int]] = []
    raw_hyps = entry.get("hypersurfaces", [])
    if not isinstance(raw_hyps, list):
        raise ParseError("%s.hypersurfaces: expected a list of [id, name] pairs" % where)
    for k, item in enumerate(raw_hyps):
        spot = "%s.hypersurfaces[%d]" % (where, k)
        if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], str)):
            raise ParseError("%s: expected [divisor id, coordinate name]" % spot)
        hid, cname = item
        if hid not in known_hids:
            raise ParseError("%s: unknown divisor id %r" % (spot, hid))
        hyps.append((hid, _name_index(stub, cname, spot)))
    try:
        return Chart(
            cid=cid, ring=ring, names=names, w_coords=w_coords, hyps=tuple(hyps)
        )
    except (ValueError, ParseError) as exc:
        raise ParseError("%s: %s" % (where, exc))


def _parse_gens(chart: Chart, texts, where) -> List:
    gens = []
    for j, text in enumerate(texts):
        if not isinstance(text, str):
            raise ParseError("%s[%d]: generators must be strings" % (where, j))
        try:
            gens.append(chart.parse(text))
        except ParseError as exc:
            raise ParseError("%s[%d] (chart %s): %s" % (where, j, chart.cid, exc))
    return gens


def load_problem_data(data, source: str = "<data>") -> Problem:
    """Validate a decoded problem document and build the collection."""
    if not isinstance(data, dict):
        raise ParseError("problem: the top level must be an object")
    version = data.get("version", FILE_VERSION)
    if version != FILE_VERSION:
        raise ParseError("problem.version: only version %d is supported" % FILE_VERSION)
    ring = ring_from_text(_want(data, "ring", str, "problem"))

    divisors: List[HypRecord] = []
    raw_divs = data.get("divisors", [])
    if not isinstance(raw_divs, list):
        raise ParseError("problem.divisors: expected a list")
    for k, entry in enumerate(raw_divs):
        where = "problem.divisors[%d]" % k
        if not isinstance(entry, dict):
            raise ParseError("%s: expected an object" % where)
        hid = _want(entry, "id", str, where)
        birth = entry.get("birth", 0)
        if not isinstance(birth, int) or birth < 0:
            raise ParseError("%s.birth: expected a nonnegative integer" % where)
        divisors.append(HypRecord(hid=hid, birth=birth))
    known_hids = {rec.hid for rec in divisors}

    raw_charts = _want(data, "charts", list, "problem")
    if not raw_charts:
        raise ParseError("problem.charts: at least one chart is required")
    charts: List[Chart] = []
    for k, entry in enumerate(raw_charts):
        where = "problem.charts[%d]" % k
        if not isinstance(entry, dict):
            raise ParseError("%s: expected an object" % where)
        charts.append(_parse_chart(entry, ring, known_hids, where))

    raw_pairs = _want(data, "pairs", list, "problem")
    if not raw_pairs:
        raise ParseError("problem.pairs: at least one pair is required")
    marks: List[int] = []
    per_chart_gens: Dict[str, List[List]] = {c.cid: [] for c in charts}
    for i, entry in enumerate(raw_pairs):
        where = "problem.pairs[%d]" % i
        if not isinstance(entry, dict):
            raise ParseError("%s: expected an object" % where)
        mark = _want(entry, "mark", int, where)
        if mark < 1:
            raise ParseError("%s.mark: expected a positive integer" % where)
        marks.append(mark)
        gens = _want(entry, "generators", None, where)
        if isinstance(gens, list):
            for chart in charts:
                per_chart_gens[chart.cid].append(
                    _parse_gens(chart, gens, "%s.generators" % where)
                )
        elif isinstance(gens, dict):
            for chart in charts:
                if chart.cid not in gens:
                    raise ParseError(
                        "%s.generators: no entry for chart %s" % (where, chart.cid)
                    )
                texts = gens[chart.cid]
                if not isinstance(texts, list):
                    raise ParseError(
                        "%s.generators.%s: expected a list" % (where, chart.cid)
                    )
                per_chart_gens[chart.cid].append(
                    _parse_gens(chart, texts, "%s.generators.%s" % (where, chart.cid))
                )
        else:
            raise ParseError(
                "%s.generators: expected a list or a per-chart object" % where
            )

    points: List[MarkedPoint] = []
    raw_points = data.get("marked_points", [])
    if not isinstance(raw_points, list):
        raise ParseError("problem.marked_points: expected a list")
    for k, entry in enumerate(raw_points):
        where = "problem.marked_points[%d]" % k
        if not isinstance(entry, dict):
            raise ParseError("%s: expected an object" % where)
        label = _want(entry, "label", str, where)
        cid = _want(entry, "chart", str, where)
        chart = next((c for c in charts if c.cid == cid), None)
        if chart is None:
            raise ParseError("%s.chart: unknown chart id %r" % (where, cid))
        values = _want(entry, "values", list, where)
        if len(values) != len(chart.names):
            raise ParseError(
                "%s.values: expected %d coordinates" % (where, len(chart.names))
            )
        try:
            vals = tuple(parse_rational(v) for v in values)
        except ParseError as exc:
            raise ParseError("%s.values: %s" % (where, exc))
        points.append(MarkedPoint(label=label, chart_id=cid, values=vals))

    declared = data.get("declared_exponents")
    if declared is not None and not isinstance(declared, list):
        raise ParseError("problem.declared_exponents: expected a list of rows")

    parameters = data.get("parameters", {})
    if not isinstance(parameters, dict):
        raise ParseError("problem.parameters: expected an object")

    try:
        mi = make_multiideal(
            marks,
            divisors,
            [(chart, per_chart_gens[chart.cid]) for chart in charts],
            marked_points=points,
            declared_exps=declared,
        )
    except (ValueError, ParseError) as exc:
        raise ParseError("problem: %s" % exc)
    return Problem(multiideal=mi, parameters=parameters, source=source)


def load_problem_text(text: str, source: str = "<text>") -> Problem:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            "%s: line %d column %d: %s" % (source, exc.lineno, exc.colno, exc.msg)
        )
    return load_problem_data(data, source=source)


def load_problem(path: str) -> Problem:
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    return load_problem_text(text, source=path)


# ---------------------------------------------------------------------------
# parameter decoding
# ---------------------------------------------------------------------------


def center_from_data(data, mi: MultiIdeal, where: str = "center") -> Center:
    """Decode [{"chart": id, "coordinates": [names]}] into an aligned center."""
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise ParseError("%s: expected a list of chart parts" % where)
    parts = []
    for k, entry in enumerate(data):
        spot = "%s[%d]" % (where, k)
        if not isinstance(entry, dict):
            raise ParseError("%s: expected an object" % spot)
        cid = _want(entry, "chart", str, spot)
        if not mi.has_piece(cid):
            raise ParseError("%s.chart: unknown chart id %r" % (spot, cid))
        chart = mi.piece(cid).chart
        raw = _want(entry, "coordinates", list, spot)
        coords = frozenset(
            _name_index(chart, n, "%s.coordinates" % spot) for n in raw
        )
        if not coords:
            raise ParseError("%s.coordinates: need at least one name" % spot)
        parts.append(AlignedCenter(chart_id=cid, coords=coords))
    return Center(parts=tuple(parts))


def z_map_from_data(data, mi: MultiIdeal, where: str = "z") -> Dict[str, int]:
    """Decode {"chart id": "coordinate name"} into index form."""
    if not isinstance(data, dict) or not data:
        raise ParseError("%s: expected a chart-to-coordinate object" % where)
    out: Dict[str, int] = {}
    for cid, name in data.items():
        if not mi.has_piece(cid):
            raise ParseError("%s: unknown chart id %r" % (where, cid))
        chart = mi.piece(cid).chart
        out[cid] = _name_index(chart, name, "%s.%s" % (where, cid))
    return out


def script_from_data(data, mi: MultiIdeal, where: str = "script") -> List[Tuple]:
    """Decode the spot-check script into operation tuples."""
    if not isinstance(data, list):
        raise ParseError("%s: expected a list of operations" % where)
    ops: List[Tuple] = []
    for k, entry in enumerate(data):
        spot = "%s[%d]" % (where, k)
        if not (isinstance(entry, list) and entry and isinstance(entry[0], str)):
            raise ParseError("%s: expected [op, ...] with a string op" % spot)
        kind = entry[0]
        if kind == "transform":
            if len(entry) != 3 or not isinstance(entry[2], str):
                raise ParseError('%s: expected ["transform", center, divisor id]' % spot)
            ops.append(("transform", center_from_data(entry[1], mi, spot), entry[2]))
        elif kind == "restrict":
            if len(entry) != 2:
                raise ParseError('%s: expected ["restrict", z-map]' % spot)
            ops.append(("restrict", z_map_from_data(entry[1], mi, spot)))
        elif kind == "extend":
            if len(entry) != 2 or not isinstance(entry[1], list):
                raise ParseError('%s: expected ["extend", [names]]' % spot)
            ops.append(("extend", tuple(entry[1])))
        else:
            raise ParseError("%s: unknown operation %r" % (spot, kind))
    return ops


def monomial_form_from_problem(problem: Problem) -> MonomialForm:
    """Build the combinatorial form from declared exponents and divisors."""
    mi = problem.multiideal
    if mi.declared_exps is None:
        raise ParseError(
            "problem.declared_exponents: required for the combinatorial engine"
        )
    return make_monomial_form(
        list(mi.marks), list(mi.divisor_ids()), [list(r) for r in mi.declared_exps]
    )


# ---------------------------------------------------------------------------
# trace files
# ---------------------------------------------------------------------------


def _chart_payload(chart: Chart) -> Dict[str, object]:
    return {
        "id": chart.cid,
        "coordinates": list(chart.names),
        "w": [chart.names[i] for i in sorted(chart.w_coords)],
        "hypersurfaces": [[hid, chart.names[i]] for hid, i in chart.hyps],
    }


def trace_payload(trace: Trace, ring: CoefRing) -> Dict[str, object]:
    """The versioned, JSON-ready form of a resolution trace."""
    steps = []
    for step in trace.steps:
        steps.append(
            {
                "index": step.index,
                "phase": step.phase,
                "value": str(step.value),
                "centers": list(step.center_desc),
                "new_divisors": list(step.new_ids),
                "charts_after": list(step.charts),
            }
        )
    final = trace.final
    charts = []
    for piece in final.pieces:
        entry = _chart_payload(piece.chart)
        entry["controlled"] = [
            [piece.chart.show(g) for g in gens] for gens in piece.controlled
        ]
        entry["proper"] = [
            [piece.chart.show(g) for g in gens] for gens in piece.proper
        ]
        charts.append(entry)
    return {
        "format": TRACE_FORMAT,
        "version": FILE_VERSION,
        "ring": ring_to_text(ring),
        "status": "resolved" if trace.resolved else "unresolved",
        "steps": steps,
        "final": {
            "marks": list(final.marks),
            "divisors": [
                {"id": rec.hid, "birth": rec.birth} for rec in final.divisors
            ],
            "charts": charts,
        },
    }


def monomial_trace_payload(mt: MonomialTrace) -> Dict[str, object]:
    """The JSON-ready form of a combinatorial trace."""
    steps = []
    for k, step in enumerate(mt.steps):
        steps.append(
            {
                "index": k,
                "value": str(step.value),
                "components": [list(comp) for comp in step.components],
                "new_divisors": list(step.new_ids),
            }
        )
    return {
        "format": MONOMIAL_TRACE_FORMAT,
        "version": FILE_VERSION,
        "status": "resolved",
        "steps": steps,
        "final": {
            "marks": list(mt.final.marks),
            "hypersurfaces": list(mt.final.hyp_ids),
            "exponents": [list(row) for row in mt.final.exps],
        },
    }


def render_payload(payload: Mapping[str, object]) -> str:
    """Serialize a payload with a fixed, diff-friendly layout."""
    return json.dumps(payload, indent=2, ensure_ascii=True) + "\n"


def trace_roundtrip_ok(payload: Mapping[str, object]) -> bool:
    """Every recorded polynomial re-parses and re-prints to the same text."""
    if payload.get("format") != TRACE_FORMAT:
        raise ParseError("not a trace payload")
    ring = ring_from_text(payload["ring"])
    for entry in payload["final"]["charts"]:
        names = tuple(entry["coordinates"])
        stub = Chart(cid=entry["id"], ring=ring, names=names, w_coords=frozenset())
        for block in ("controlled", "proper"):
            for gens in entry[block]:
                for text in gens:
                    if stub.show(stub.parse(text)) != text:
                        return False
    return True
