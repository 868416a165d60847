"""Marked-ideal collections spread over chart covers, and their transforms.

A :class:`MultiIdeal` packages, for one ambient space W covered by charts,
a list of pairs (ideal, mark) together with the tracked hypersurface
records.  Every chart piece carries generator tuples for all pairs in
parallel, so blow-ups, coefficient cascades, restrictions and extensions
act on the whole collection at once.

The singular set of the collection is the set of points where every pair's
ideal has multiplicity at least its mark.  Transforms here are controlled:
each pair divides by exactly its mark on the exceptional coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import lcm
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .charts import (
    AlignedCenter,
    Chart,
    HypRecord,
    blowup,
    center_has_normal_crossings,
    extend_chart,
    restrict_chart,
    validate_center,
)
from .errors import (
    ChartMismatch,
    ConditionIotaFails,
    DesingError,
    NotPermissible,
    RingMismatch,
    UnsupportedLocus,
)
from .ideals import (
    IdealRep,
    diff_closure,
    gens_nu_along,
    ideal_order_at_least,
    ideal_power,
    make_ideal,
)
from .pairs import transform_gens
from .poly import INF, Poly
from .sampling import chart_sample_points


@dataclass(frozen=True)
class ChartPiece:
    """One chart of the cover with generator tuples for every pair."""

    chart: Chart
    pair_gens: Tuple[Tuple[Poly, ...], ...]

    def pair_ideal(self, i: int) -> IdealRep:
        return IdealRep(self.chart, self.pair_gens[i])


@dataclass(frozen=True)
class MarkedPoint:
    """A labelled rational point used for reporting."""

    label: str
    chart_id: str
    values: Tuple[Fraction, ...]


@dataclass(frozen=True)
class MultiIdeal:
    marks: Tuple[int, ...]
    divisors: Tuple[HypRecord, ...]
    pieces: Tuple[ChartPiece, ...]
    marked_points: Tuple[MarkedPoint, ...] = ()
    declared_exps: Optional[Tuple[Tuple[int, ...], ...]] = None

    @property
    def npairs(self) -> int:
        return len(self.marks)

    @property
    def ring(self):
        return self.pieces[0].chart.ring

    def piece(self, chart_id: str) -> ChartPiece:
        for piece in self.pieces:
            if piece.chart.cid == chart_id:
                return piece
        raise ChartMismatch("no chart %r in this cover" % chart_id)

    def has_piece(self, chart_id: str) -> bool:
        return any(piece.chart.cid == chart_id for piece in self.pieces)

    def chart_ids(self) -> Tuple[str, ...]:
        return tuple(piece.chart.cid for piece in self.pieces)

    def divisor_ids(self) -> Tuple[str, ...]:
        return tuple(rec.hid for rec in self.divisors)

    def describe(self) -> str:
        lines = ["pairs: %s" % ", ".join("mark %d" % b for b in self.marks)]
        lines.append("divisors: %s" % (", ".join(self.divisor_ids()) or "(none)"))
        for piece in self.pieces:
            lines.append("chart %s:" % piece.chart.cid)
            for i, gens in enumerate(piece.pair_gens):
                lines.append("  pair %d: %s" % (i + 1, piece.pair_ideal(i).describe()))
        return "\n".join(lines)


def make_multiideal(
    marks: Sequence[int],
    divisors: Sequence[HypRecord],
    pieces: Sequence[Tuple[Chart, Sequence[Sequence[Poly]]]],
    marked_points: Sequence[MarkedPoint] = (),
    declared_exps: Optional[Sequence[Sequence[int]]] = None,
) -> MultiIdeal:
    """Validate and normalize the raw data of a marked-ideal collection."""
    if not marks:
        raise ValueError("at least one pair is required")
    for b in marks:
        if not isinstance(b, int) or b < 1:
            raise ValueError("marks must be positive integers, got %r" % (b,))
    hids = [rec.hid for rec in divisors]
    if len(set(hids)) != len(hids):
        raise ValueError("duplicate divisor ids: %r" % (hids,))
    if not pieces:
        raise ValueError("at least one chart piece is required")
    ring = pieces[0][0].ring
    seen_cids = set()
    norm_pieces: List[ChartPiece] = []
    for chart, gens_per_pair in pieces:
        if chart.ring != ring:
            raise RingMismatch("all charts must share one coefficient ring")
        if chart.cid in seen_cids:
            raise ValueError("duplicate chart id %r" % chart.cid)
        seen_cids.add(chart.cid)
        for hid, _ in chart.hyps:
            if hid not in hids:
                raise ValueError(
                    "chart %s tracks divisor %r that has no record" % (chart.cid, hid)
                )
        if len(gens_per_pair) != len(marks):
            raise ValueError(
                "chart %s supplies %d generator tuples for %d pairs"
                % (chart.cid, len(gens_per_pair), len(marks))
            )
        norm = tuple(make_ideal(chart, gens).gens for gens in gens_per_pair)
        norm_pieces.append(ChartPiece(chart, norm))
    for pt in marked_points:
        if pt.chart_id not in seen_cids:
            raise ChartMismatch("marked point %r names unknown chart %r" % (pt.label, pt.chart_id))
    decl = None
    if declared_exps is not None:
        decl = tuple(tuple(int(e) for e in row) for row in declared_exps)
        if len(decl) != len(marks):
            raise ValueError("declared exponents need one row per pair")
        for row in decl:
            if len(row) != len(hids):
                raise ValueError("declared exponent rows need one entry per divisor")
            if any(e < 0 for e in row):
                raise ValueError("declared exponents must be nonnegative")
    return MultiIdeal(
        marks=tuple(marks),
        divisors=tuple(divisors),
        pieces=tuple(norm_pieces),
        marked_points=tuple(marked_points),
        declared_exps=decl,
    )


def sing_member_multi(mi: MultiIdeal, chart_id: str, point: Sequence[Fraction]) -> bool:
    """Is the point singular for the collection, i.e. in every pair's locus."""
    piece = mi.piece(chart_id)
    return all(
        ideal_order_at_least(piece.pair_ideal(i), point, mi.marks[i])
        for i in range(mi.npairs)
    )


@dataclass(frozen=True)
class Center:
    """A blow-up center given chart by chart as aligned coordinate pieces."""

    parts: Tuple[AlignedCenter, ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise ValueError("a center needs at least one chart part")
        cids = [part.chart_id for part in self.parts]
        if len(set(cids)) != len(cids):
            raise ValueError("center has two parts on one chart: %r" % (cids,))

    def part_for(self, chart_id: str) -> Optional[AlignedCenter]:
        for part in self.parts:
            if part.chart_id == chart_id:
                return part
        return None

    def describe(self, mi: MultiIdeal) -> str:
        bits = []
        for part in self.parts:
            chart = mi.piece(part.chart_id).chart
            names = ", ".join(chart.names[i] for i in sorted(part.coords))
            bits.append("%s: V(%s)" % (part.chart_id, names))
        return "; ".join(bits)


def center_issues(mi: MultiIdeal, center: Center) -> List[str]:
    """Diagnostics preventing the center from being permissible; empty if fine."""
    issues: List[str] = []
    for part in center.parts:
        piece = mi.piece(part.chart_id)
        chart = piece.chart
        validate_center(chart, part)
        if not center_has_normal_crossings(chart, part):
            issues.append(
                "center in chart %s fails normal crossings with the divisor"
                % chart.cid
            )
        for i in range(mi.npairs):
            nu = gens_nu_along(piece.pair_gens[i], chart.w_coords, part.coords)
            if nu is INF:
                continue
            if nu < mi.marks[i]:
                issues.append(
                    "pair %d has multiplicity %d along the center in chart %s, "
                    "needs at least %d" % (i + 1, nu, chart.cid, mi.marks[i])
                )
    return issues


def require_permissible(mi: MultiIdeal, center: Center) -> None:
    issues = center_issues(mi, center)
    if issues:
        pair_index = None
        for issue in issues:
            if issue.startswith("pair "):
                pair_index = int(issue.split()[1])
                break
        raise NotPermissible("; ".join(issues), pair_index=pair_index)


def transform_multiideal(
    mi: MultiIdeal,
    center: Center,
    exc_hid: str,
    birth: int,
    check: bool = True,
) -> MultiIdeal:
    """Blow up the center and take the controlled transform of every pair.

    Charts without a center part pass through unchanged; blown charts are
    replaced in place by their children in deterministic order.
    """
    if exc_hid in mi.divisor_ids():
        raise ValueError("divisor id %r already in use" % exc_hid)
    if check:
        require_permissible(mi, center)
    new_divisors = mi.divisors + (HypRecord(exc_hid, birth),)
    new_pieces: List[ChartPiece] = []
    for piece in mi.pieces:
        part = center.part_for(piece.chart.cid)
        if part is None:
            new_pieces.append(piece)
            continue
        result = blowup(piece.chart, part, exc_hid)
        for child in result.children:
            exc_index = child.hyp_coord(exc_hid)
            gens_out = []
            for i in range(mi.npairs):
                gens_out.append(
                    transform_gens(
                        piece.pair_gens[i], child, exc_index, mi.marks[i], pair_index=i + 1
                    )
                )
            norm = tuple(make_ideal(child, gens).gens for gens in gens_out)
            new_pieces.append(ChartPiece(child, norm))
    points = tuple(pt for pt in mi.marked_points)
    return MultiIdeal(
        marks=mi.marks,
        divisors=new_divisors,
        pieces=tuple(new_pieces),
        marked_points=_push_points(mi, center, exc_hid, points),
        declared_exps=None,
    )


def _push_points(
    mi: MultiIdeal, center: Center, exc_hid: str, points: Tuple[MarkedPoint, ...]
) -> Tuple[MarkedPoint, ...]:
    from .charts import child_point, blowup as _blowup

    moved: List[MarkedPoint] = []
    for pt in points:
        part = center.part_for(pt.chart_id)
        if part is None:
            moved.append(pt)
            continue
        chart = mi.piece(pt.chart_id).chart
        result = _blowup(chart, part, exc_hid)
        placed = False
        for child in result.children:
            image = child_point(chart, part, child, exc_hid, pt.values)
            if image is not None:
                moved.append(MarkedPoint(pt.label, child.cid, image))
                placed = True
                break
        if not placed:
            # the point sits on the center; it has no canonical preimage
            continue
    return tuple(moved)


def coefficient_object(mi: MultiIdeal) -> MultiIdeal:
    """The derivative cascade: pair (I, b) contributes (D^q I, b - q) for q < b."""
    new_marks: List[int] = []
    for b in mi.marks:
        for q in range(b):
            new_marks.append(b - q)
    new_pieces: List[Tuple[Chart, List[List[Poly]]]] = []
    for piece in mi.pieces:
        gens_out: List[List[Poly]] = []
        for i, b in enumerate(mi.marks):
            base = piece.pair_ideal(i)
            for q in range(b):
                gens_out.append(list(diff_closure(base, q).gens))
        new_pieces.append((piece.chart, gens_out))
    return make_multiideal(new_marks, mi.divisors, new_pieces, mi.marked_points)


def restrict_object(mi: MultiIdeal, z_map: Mapping[str, int]) -> MultiIdeal:
    """Restrict the collection to the hypersurfaces V(z), chart by chart.

    Only charts named in ``z_map`` survive; the named coordinate joins the
    reference subvariety there and every generator is cut down accordingly.
    """
    if not z_map:
        raise ValueError("restriction needs at least one chart")
    new_pieces: List[Tuple[Chart, List[List[Poly]]]] = []
    kept_points: List[MarkedPoint] = []
    for piece in mi.pieces:
        if piece.chart.cid not in z_map:
            continue
        z = z_map[piece.chart.cid]
        chart_r = restrict_chart(piece.chart, z)
        gens_out = [
            [g.set_variable_zero(z) for g in gens] for gens in piece.pair_gens
        ]
        new_pieces.append((chart_r, gens_out))
        for pt in mi.marked_points:
            if pt.chart_id == piece.chart.cid and pt.values[z] == 0:
                kept_points.append(MarkedPoint(pt.label, chart_r.cid, pt.values))
    if not new_pieces:
        raise ChartMismatch("restriction names no chart of this cover")
    return make_multiideal(mi.marks, mi.divisors, new_pieces, kept_points)


def inductive_object(mi: MultiIdeal, z_map: Mapping[str, int]) -> MultiIdeal:
    """Coefficient cascade restricted to the chosen hypersurfaces.

    A derivative layer whose restriction is zero in every chart is dropped:
    zero means each generator of the layer sits inside the matching power of
    the chosen coordinate, so the layer's order bound holds at every point of
    the hypersurface and the constraint is empty there.  A layer that dies in
    some charts but survives in others has no cross-chart presentation and
    raises :class:`UnsupportedLocus`.  When every layer of every pair dies the
    restriction carries no information at all (the whole hypersurface is
    singular for the collection); that raises :class:`ConditionIotaFails`.
    """
    if not z_map:
        raise ValueError("restriction needs at least one chart")
    kept_cids = sorted(z_map)
    for cid in kept_cids:
        mi.piece(cid)
    layers = [(i, q) for i, b in enumerate(mi.marks) for q in range(b)]
    table: Dict[Tuple[str, int, int], List[Poly]] = {}
    for cid in kept_cids:
        piece = mi.piece(cid)
        z = z_map[cid]
        for i, b in enumerate(mi.marks):
            for q in range(b):
                layer = diff_closure(piece.pair_ideal(i), q)
                cut = [g.set_variable_zero(z) for g in layer.gens]
                table[(cid, i, q)] = [g for g in cut if not g.is_zero()]
    kept_layers = [
        (i, q) for (i, q) in layers if any(table[(cid, i, q)] for cid in kept_cids)
    ]
    if not kept_layers:
        raise ConditionIotaFails(
            "every derivative layer restricts to zero on the chosen "
            "hypersurfaces; the restriction would carry no information"
        )
    for i, q in kept_layers:
        for cid in kept_cids:
            if not table[(cid, i, q)]:
                raise UnsupportedLocus(
                    "derivative layer %d of pair %d vanishes on the "
                    "hypersurface in chart %s but not everywhere; the "
                    "restricted collection has no common presentation"
                    % (q, i + 1, cid)
                )
    new_marks = [mi.marks[i] - q for (i, q) in kept_layers]
    new_pieces: List[Tuple[Chart, List[List[Poly]]]] = []
    kept_points: List[MarkedPoint] = []
    for cid in kept_cids:
        piece = mi.piece(cid)
        z = z_map[cid]
        chart_r = restrict_chart(piece.chart, z)
        gens_out = [table[(cid, i, q)] for (i, q) in kept_layers]
        new_pieces.append((chart_r, gens_out))
        for pt in mi.marked_points:
            if pt.chart_id == cid and pt.values[z] == 0:
                kept_points.append(MarkedPoint(pt.label, chart_r.cid, pt.values))
    return make_multiideal(new_marks, mi.divisors, new_pieces, kept_points)


def associated_basic_object(mi: MultiIdeal) -> MultiIdeal:
    """Collapse a multi-pair collection to one pair with the same locus.

    With N the least common multiple of the marks, each pair contributes the
    N/b-th power of its ideal to a single sum marked N.
    """
    if mi.npairs == 1:
        return mi
    n = lcm(*mi.marks)
    new_pieces: List[Tuple[Chart, List[List[Poly]]]] = []
    for piece in mi.pieces:
        gens: List[Poly] = []
        for i, b in enumerate(mi.marks):
            powered = ideal_power(piece.pair_ideal(i), n // b)
            gens.extend(powered.gens)
        new_pieces.append((piece.chart, [gens]))
    return make_multiideal([n], mi.divisors, new_pieces, mi.marked_points)


def extension(mi: MultiIdeal, extra_names: Sequence[str]) -> MultiIdeal:
    """Cross the whole collection with new affine directions."""
    new_pieces: List[Tuple[Chart, List[List[Poly]]]] = []
    extra = len(extra_names)
    for piece in mi.pieces:
        chart_e = extend_chart(piece.chart, extra_names)
        gens_out = [
            [g.append_variables(extra) for g in gens] for gens in piece.pair_gens
        ]
        new_pieces.append((chart_e, gens_out))
    points = [
        MarkedPoint(
            pt.label,
            pt.chart_id + "+%d" % extra,
            pt.values + tuple(Fraction(0) for _ in range(extra)),
        )
        for pt in mi.marked_points
    ]
    return make_multiideal(mi.marks, mi.divisors, new_pieces, points)


@dataclass(frozen=True)
class EquivReport:
    equivalent: bool
    detail: str
    steps_run: int


def _sing_signature_mismatch(
    a: MultiIdeal, b: MultiIdeal, seed: int, count: int
) -> Optional[str]:
    ids_a = sorted(a.chart_ids())
    ids_b = sorted(b.chart_ids())
    if ids_a != ids_b:
        return "chart covers differ: %r vs %r" % (ids_a, ids_b)
    for cid in ids_a:
        chart = a.piece(cid).chart
        for point in chart_sample_points(chart, seed=seed, count=count):
            in_a = sing_member_multi(a, cid, point)
            in_b = sing_member_multi(b, cid, point)
            if in_a != in_b:
                return (
                    "chart %s point (%s): singular for %s side only"
                    % (
                        cid,
                        ", ".join(str(v) for v in point),
                        "first" if in_a else "second",
                    )
                )
    return None


def _apply_op(mi: MultiIdeal, op: Tuple) -> MultiIdeal:
    kind = op[0]
    if kind == "transform":
        _, center, exc_hid = op
        birth = 1 + max((rec.birth for rec in mi.divisors), default=0)
        return transform_multiideal(mi, center, exc_hid, birth)
    if kind == "restrict":
        _, z_map = op
        return restrict_object(mi, z_map)
    if kind == "extend":
        _, names = op
        return extension(mi, names)
    raise ValueError("unknown script op %r" % (kind,))


def equiv_spotcheck(
    a: MultiIdeal,
    b: MultiIdeal,
    script: Sequence[Tuple],
    seed: int = 0,
    count: int = 12,
) -> EquivReport:
    """Randomized refutation of equivalence of two collections.

    Runs the script of transforms, restrictions and extensions on both sides
    in lockstep, comparing sampled singular-membership after every step.  An
    operation valid on one side but not the other refutes equivalence.  A
    clean pass is evidence, not proof.
    """
    mismatch = _sing_signature_mismatch(a, b, seed, count)
    if mismatch is not None:
        return EquivReport(False, "before any step: %s" % mismatch, 0)
    for k, op in enumerate(script, start=1):
        fail_a = fail_b = None
        next_a = next_b = None
        try:
            next_a = _apply_op(a, op)
        except (DesingError, ValueError) as exc:
            fail_a = str(exc)
        try:
            next_b = _apply_op(b, op)
        except (DesingError, ValueError) as exc:
            fail_b = str(exc)
        if (fail_a is None) != (fail_b is None):
            side = "first" if fail_a is not None else "second"
            msg = fail_a if fail_a is not None else fail_b
            return EquivReport(
                False,
                "step %d (%s) failed on the %s side only: %s" % (k, op[0], side, msg),
                k,
            )
        if fail_a is not None:
            return EquivReport(
                True,
                "script stopped at step %d on both sides (%s); no disagreement found"
                % (k, fail_a),
                k,
            )
        a, b = next_a, next_b
        mismatch = _sing_signature_mismatch(a, b, seed + k, count)
        if mismatch is not None:
            return EquivReport(False, "after step %d: %s" % (k, mismatch), k)
    return EquivReport(True, "no disagreement found in %d steps" % len(script), len(script))
