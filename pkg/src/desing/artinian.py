"""Marked collections over a truncated-nilpotent base and their fibers.

The base ring is QQ[eps]/(eps^m); charts carry their ring, so the polynomial
machinery (orders, derivative closures, controlled transforms) applies
verbatim over the base.  This module adds the notions that genuinely involve
the base: the special fiber, orders along centers together with the
fiber-equality condition on a distinguished pair, the relative derivative
operator, the inductive lifting check for centers found on an adapted
hypersurface, and the replay of a fiber resolution over the base.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .charts import AlignedCenter, Chart, center_has_normal_crossings, validate_center
from .errors import (
    LedgerInconsistent,
    NotNice,
    NotPermissible,
    UndecidableMembership,
    UnsupportedLocus,
)
from .ideals import (
    IdealRep,
    diff_closure,
    gens_nu_along,
    make_ideal,
    member,
    restrict_to,
)
from .multiideal import (
    Center,
    MultiIdeal,
    coefficient_object,
    make_multiideal,
    restrict_object,
    transform_multiideal,
)
from .poly import INF, QQ, CoefRing, Poly
from .resolution import Trace, resolve

__all__ = [
    "fiber_chart",
    "fiber_multiideal",
    "delta_relative",
    "z_coefficient",
    "pair_order_along",
    "PairOrder",
    "PermissibilityReport",
    "v_permissible_check",
    "permissible_any_v",
    "transform_multiideal_A",
    "adapted_coordinate_ok",
    "inductive_collection",
    "inductive_center_lift",
    "DirectionWitness",
    "direction_failure_witness",
    "EquiStep",
    "EquiTrace",
    "equiresolve_attempt",
]


# ---------------------------------------------------------------------------
# fibers
# ---------------------------------------------------------------------------


def fiber_chart(chart: Chart) -> Chart:
    """The same chart with every eps component of its data killed."""
    if not chart.ring.artinian:
        return chart
    parent_map = chart.parent_map
    if parent_map is not None:
        parent_map = tuple(p.set_fiber() for p in parent_map)
    return Chart(
        cid=chart.cid,
        ring=QQ,
        names=chart.names,
        w_coords=chart.w_coords,
        hyps=chart.hyps,
        parent=chart.parent,
        parent_map=parent_map,
    )


def fiber_multiideal(mi: MultiIdeal) -> MultiIdeal:
    """Reduce every generator modulo eps; chart ids are preserved.

    The collection counts as nonzero only when its fiber is, so a pair whose
    generators all die under the reduction makes the whole input unusable and
    is refused.
    """
    if not mi.ring.artinian:
        return mi
    pieces = []
    seen_nonzero = [False] * mi.npairs
    for piece in mi.pieces:
        chart_f = fiber_chart(piece.chart)
        gens_out: List[List[Poly]] = []
        for i in range(mi.npairs):
            cut = [g.set_fiber() for g in piece.pair_gens[i]]
            kept = [g for g in cut if not g.is_zero()]
            if kept:
                seen_nonzero[i] = True
            gens_out.append(kept)
        pieces.append((chart_f, gens_out))
    for i, ok in enumerate(seen_nonzero):
        if not ok:
            raise UnsupportedLocus(
                "pair %d has zero fiber; the collection is zero over the base"
                % (i + 1)
            )
    return make_multiideal(
        mi.marks,
        mi.divisors,
        pieces,
        mi.marked_points,
        declared_exps=mi.declared_exps,
    )


# ---------------------------------------------------------------------------
# the relative derivative operator
# ---------------------------------------------------------------------------


def delta_relative(ideal: IdealRep) -> IdealRep:
    """The ideal together with all first partials along the chart coordinates.

    Over the truncated base the derivative is taken relative to it: the chart
    coordinates are the regular parameters and the eps components ride along
    inside the coefficients.  Over the rational field this is the plain
    derivative extension.
    """
    return diff_closure(ideal, 1)


def z_coefficient(p: Poly, z_index: int, q: int) -> Poly:
    """The coefficient of the q-th power of one coordinate in ``p``."""
    acc = {}
    for e, c in p.terms.items():
        if e[z_index] != q:
            continue
        exp = list(e)
        exp[z_index] = 0
        acc[tuple(exp)] = c
    return Poly(p.ring, p.nvars, acc)


# ---------------------------------------------------------------------------
# orders along centers and v-permissibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairOrder:
    """Orders of one pair along a center, over the base and on the fiber."""

    pair_index: int
    mark: int
    nu: object
    fiber_nu: object

    @property
    def meets_mark(self) -> bool:
        return self.nu >= self.mark

    @property
    def fiber_equal(self) -> bool:
        return self.nu == self.fiber_nu


def pair_order_along(mi: MultiIdeal, center: Center, i: int) -> PairOrder:
    """Orders of pair ``i`` (zero-based) along the center, both levels."""
    nu = INF
    fnu = INF
    for part in center.parts:
        piece = mi.piece(part.chart_id)
        chart = piece.chart
        gens = piece.pair_gens[i]
        nu = min(nu, gens_nu_along(gens, chart.w_coords, part.coords))
        fgens = [g.set_fiber() for g in gens] if mi.ring.artinian else list(gens)
        fnu = min(fnu, gens_nu_along(fgens, chart.w_coords, part.coords))
    return PairOrder(pair_index=i + 1, mark=mi.marks[i], nu=nu, fiber_nu=fnu)


@dataclass(frozen=True)
class PermissibilityReport:
    """Outcome of the center check with everything needed to explain it."""

    center_desc: str
    v: Optional[int]
    ok: bool
    issues: Tuple[str, ...]
    orders: Tuple[PairOrder, ...]

    def __bool__(self) -> bool:
        return self.ok

    def render(self) -> str:
        lines = ["center %s: %s" % (self.center_desc, "permissible" if self.ok else "not permissible")]
        if self.v is not None:
            lines[0] += " (distinguished pair %d)" % self.v
        for po in self.orders:
            lines.append(
                "  pair %d: mark %d, order %s, fiber order %s"
                % (po.pair_index, po.mark, po.nu, po.fiber_nu)
            )
        for issue in self.issues:
            lines.append("  ! %s" % issue)
        return "\n".join(lines)


def _crossing_issues(mi: MultiIdeal, center: Center) -> List[str]:
    issues: List[str] = []
    for part in center.parts:
        chart = mi.piece(part.chart_id).chart
        validate_center(chart, part)
        if not center_has_normal_crossings(chart, part):
            issues.append(
                "center in chart %s fails normal crossings with the divisor"
                % chart.cid
            )
    return issues


def v_permissible_check(mi: MultiIdeal, center: Center, v: int) -> PermissibilityReport:
    """Check the center against every pair, with pair ``v`` distinguished.

    Three conditions: the center has normal crossings with the tracked
    divisors; every pair's order along the center reaches its mark; and for
    the distinguished pair the order over the base equals the fiber order.
    ``v`` is one-based.
    """
    if not 1 <= v <= mi.npairs:
        raise ValueError("pair index %d out of range" % v)
    issues = _crossing_issues(mi, center)
    orders = tuple(pair_order_along(mi, center, i) for i in range(mi.npairs))
    for po in orders:
        if not po.meets_mark:
            issues.append(
                "pair %d has order %s along the center, needs at least %d"
                % (po.pair_index, po.nu, po.mark)
            )
    chosen = orders[v - 1]
    if chosen.meets_mark and not chosen.fiber_equal:
        issues.append(
            "pair %d has order %s over the base but %s on the fiber"
            % (v, chosen.nu, chosen.fiber_nu)
        )
    return PermissibilityReport(
        center_desc=center.describe(mi),
        v=v if not issues else None,
        ok=not issues,
        issues=tuple(issues),
        orders=orders,
    )


def permissible_any_v(mi: MultiIdeal, center: Center) -> PermissibilityReport:
    """The center is usable when some distinguished index works; first wins."""
    first: Optional[PermissibilityReport] = None
    for v in range(1, mi.npairs + 1):
        report = v_permissible_check(mi, center, v)
        if report.ok:
            return report
        if first is None:
            first = report
    assert first is not None
    return first


def transform_multiideal_A(
    mi: MultiIdeal, center: Center, v: int, exc_hid: str, birth: int
) -> MultiIdeal:
    """Controlled transform over the base after the v-permissibility gate."""
    report = v_permissible_check(mi, center, v)
    if not report.ok:
        failing = next(
            (po.pair_index for po in report.orders if not po.meets_mark), v
        )
        raise NotPermissible("; ".join(report.issues), pair_index=failing)
    return transform_multiideal(mi, center, exc_hid, birth)


# ---------------------------------------------------------------------------
# adapted hypersurfaces over the base and the lifting check
# ---------------------------------------------------------------------------


def adapted_coordinate_ok(mi: MultiIdeal, pair_index: int, z_map: Mapping[str, int]) -> bool:
    """Whether the chosen coordinate lies in the top derivative closure.

    Membership is decided exactly on the decidable fragment; outside it the
    check falls back to order domination: the closure must contain an element
    of order one that vanishes on the hypersurface.  Over a truncated base
    the linear coefficient must be a unit, so the fiber of the element has
    to reach order one as well.
    """
    b = mi.marks[pair_index]
    for cid, z in z_map.items():
        piece = mi.piece(cid)
        chart = piece.chart
        closure = diff_closure(piece.pair_ideal(pair_index), b - 1)
        zvar = chart.var(z)
        try:
            if not member(zvar, closure):
                return False
        except UndecidableMembership:
            dominated = False
            for g in closure.gens:
                if g.order_at_origin() != 1 or not g.set_variable_zero(z).is_zero():
                    continue
                if chart.ring.artinian and g.set_fiber().order_at_origin() != 1:
                    continue
                dominated = True
                break
            if not dominated:
                return False
    return True


def inductive_collection(mi: MultiIdeal, z_map: Mapping[str, int]) -> MultiIdeal:
    """Restrict the derivative cascade of a one-pair collection to Z.

    The result keeps every layer (no vacuity pruning): pairs
    (I restricted, b), (first partials restricted, b-1), and so on.  The
    chosen coordinate must be adapted and the restriction must stay nonzero
    on the fiber.
    """
    if mi.npairs != 1:
        raise UnsupportedLocus("the inductive collection is built from one pair")
    if not adapted_coordinate_ok(mi, 0, z_map):
        raise NotNice("the chosen coordinate is not adapted to the pair")
    restricted = restrict_object(coefficient_object(mi), z_map)
    if restricted.ring.artinian:
        fiber_multiideal(restricted)
    return restricted


def inductive_center_lift(
    mi: MultiIdeal, z_map: Mapping[str, int], center: Center
) -> bool:
    """Check the hypothesis ladder on Z, then confirm the center upstairs.

    Hypotheses: the center has normal crossings with the divisors, sits
    inside the hypersurface, and for every derivative level q below the mark
    the restricted level has order at least b-q along the center.  The
    conclusion (the center is permissible for the pair over the base) is then
    verified independently by a direct order computation.  Returns the
    conjunction; a verified hypothesis set with a failing conclusion would
    falsify the lifting principle and raises loudly instead of returning.
    """
    if mi.npairs != 1:
        raise UnsupportedLocus("the lifting check applies to one-pair collections")
    b = mi.marks[0]
    if not adapted_coordinate_ok(mi, 0, z_map):
        raise NotNice("the chosen coordinate is not adapted to the pair")
    hyp_ok = not _crossing_issues(mi, center)
    for part in center.parts:
        cid = part.chart_id
        if cid not in z_map:
            raise UnsupportedLocus("no hypersurface coordinate for chart %s" % cid)
        z = z_map[cid]
        if z not in part.coords:
            hyp_ok = False
            continue
        piece = mi.piece(cid)
        chart = piece.chart
        for q in range(b):
            level = diff_closure(piece.pair_ideal(0), q)
            cut = [g.set_variable_zero(z) for g in level.gens]
            nu = gens_nu_along(cut, chart.w_coords | {z}, part.coords)
            if nu < b - q:
                hyp_ok = False
    direct = pair_order_along(mi, center, 0)
    direct_ok = direct.meets_mark and direct.fiber_equal
    if hyp_ok and not direct_ok:
        raise LedgerInconsistent(
            "hypotheses hold on the hypersurface yet the center fails "
            "upstairs: order %s, fiber order %s, mark %d"
            % (direct.nu, direct.fiber_nu, b)
        )
    return hyp_ok and direct_ok


# ---------------------------------------------------------------------------
# the fixed direction-failure witness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DirectionWitness:
    """Both directions of the lifting question on one two-variable object.

    The center passes the plain check for the pair upstairs, yet both
    restricted levels on the hypersurface fail the fiber-equality condition,
    so the center is unusable for the restricted collection.
    """

    upstairs: PairOrder
    upstairs_ok: bool
    restricted: Tuple[PairOrder, ...]
    restricted_ok: bool

    def render(self) -> str:
        lines = [
            "upstairs pair: mark %d, order %s, fiber order %s -> %s"
            % (
                self.upstairs.mark,
                self.upstairs.nu,
                self.upstairs.fiber_nu,
                "accepted" if self.upstairs_ok else "rejected",
            )
        ]
        for po in self.restricted:
            lines.append(
                "restricted level %d: mark %d, order %s, fiber order %s -> %s"
                % (
                    po.pair_index,
                    po.mark,
                    po.nu,
                    po.fiber_nu,
                    "equal" if po.fiber_equal else "unequal",
                )
            )
        lines.append(
            "restricted center %s"
            % ("accepted" if self.restricted_ok else "rejected")
        )
        return "\n".join(lines)


def direction_failure_witness() -> DirectionWitness:
    """A center usable upstairs but not for the restricted collection.

    Fixed regression data over QQ[eps]/(eps^2) in coordinates (x, z): the
    pair ((z^2 + eps x^2, z^3 + x^3), 2), the hypersurface Z = V(z), and the
    origin as center.  Upstairs the order along the center is 2 over the base
    and on the fiber, so the center is accepted.  The two restricted levels
    are (eps x^2, x^3) marked 2 and (eps x, x^2) marked 1; their base orders
    2 and 1 differ from the fiber orders 3 and 2.
    """
    ring = CoefRing(2)
    chart = Chart(cid="w", ring=ring, names=("x", "z"), w_coords=frozenset())
    gens = [
        chart.parse("z^2 + eps*x^2"),
        chart.parse("z^3 + x^3"),
    ]
    mi = make_multiideal([2], [], [(chart, [gens])])
    center = Center(parts=(AlignedCenter("w", frozenset({0, 1})),))
    upstairs = pair_order_along(mi, center, 0)
    upstairs_ok = bool(v_permissible_check(mi, center, 1))
    z_map = {"w": 1}
    restricted_mi = inductive_collection(mi, z_map)
    sub_center = Center(parts=(AlignedCenter("w|z", frozenset({0, 1})),))
    levels = tuple(
        pair_order_along(restricted_mi, sub_center, i)
        for i in range(restricted_mi.npairs)
    )
    restricted_ok = any(
        v_permissible_check(restricted_mi, sub_center, v).ok
        for v in range(1, restricted_mi.npairs + 1)
    )
    return DirectionWitness(
        upstairs=upstairs,
        upstairs_ok=upstairs_ok,
        restricted=levels,
        restricted_ok=restricted_ok,
    )


# ---------------------------------------------------------------------------
# replaying a fiber resolution over the base
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquiStep:
    index: int
    center_desc: str
    report: PermissibilityReport
    lifted_inductively: Optional[bool]


@dataclass(frozen=True)
class EquiTrace:
    steps: Tuple[EquiStep, ...]
    completed: bool
    equiresolution: bool
    failure: Optional[str]
    final: Optional[MultiIdeal]
    fiber_trace: Trace

    def render(self) -> str:
        lines = []
        for step in self.steps:
            ok = "lifted" if step.report.ok else "failed"
            lines.append("step %d: %s -> %s" % (step.index, step.center_desc, ok))
            if step.lifted_inductively:
                lines[-1] += " (inductive check agreed)"
        if self.equiresolution:
            lines.append("equiresolution: every fiber center lifted")
        elif self.failure is not None:
            lines.append("stopped: %s" % self.failure)
        return "\n".join(lines)


def _inductive_cross_check(
    mi: MultiIdeal, center: Center
) -> Optional[bool]:
    """Run the lifting check when a shared adapted coordinate presents itself."""
    if mi.npairs != 1 or mi.marks[0] < 2:
        return None
    z_map: Dict[str, int] = {}
    for part in center.parts:
        piece = mi.piece(part.chart_id)
        chart = piece.chart
        closure = diff_closure(piece.pair_ideal(0), mi.marks[0] - 1)
        pick = None
        for g in closure.gens:
            if len(g.terms) != 1:
                continue
            (exp, _), = g.terms.items()
            if sum(exp) != 1:
                continue
            j = exp.index(1)
            if j in chart.w_coords or j not in part.coords:
                continue
            pick = j
            break
        if pick is None:
            return None
        z_map[part.chart_id] = pick
    try:
        return inductive_center_lift(mi, z_map, center)
    except NotNice:
        return None


def equiresolve_attempt(mi: MultiIdeal, seed: int = 0, step_cap: int = 64) -> EquiTrace:
    """Resolve the fiber, then lift its centers over the base one by one.

    Each fiber center must be permissible over the base with some
    distinguished pair; the first failure stops the replay with a diagnostic
    naming the offending pair.  When the fiber trace involves coordinate
    changes the replay cannot mirror it and refuses.
    """
    fiber = fiber_multiideal(mi)
    fiber_trace = resolve(fiber, seed=seed, step_cap=step_cap)
    cur = mi
    steps: List[EquiStep] = []
    failure: Optional[str] = None
    birth = 0
    for tstep in fiber_trace.steps:
        for center, exc_hid in zip(tstep.centers, tstep.new_ids):
            for part in center.parts:
                if not cur.has_piece(part.chart_id):
                    raise UnsupportedLocus(
                        "the fiber resolution changed coordinates in chart %s; "
                        "the replay only mirrors plain blow-ups" % part.chart_id
                    )
            report = permissible_any_v(cur, center)
            inductive = _inductive_cross_check(cur, center) if report.ok else None
            steps.append(
                EquiStep(
                    index=len(steps),
                    center_desc=report.center_desc,
                    report=report,
                    lifted_inductively=inductive,
                )
            )
            if not report.ok:
                failing = next(
                    (po.pair_index for po in report.orders if not po.meets_mark),
                    None,
                )
                if failing is None:
                    failing = next(
                        (
                            po.pair_index
                            for po in report.orders
                            if not po.fiber_equal
                        ),
                        0,
                    )
                failure = "pair %d blocks the lift at step %d: %s" % (
                    failing,
                    len(steps) - 1,
                    "; ".join(report.issues),
                )
                return EquiTrace(
                    steps=tuple(steps),
                    completed=False,
                    equiresolution=False,
                    failure=failure,
                    final=cur,
                    fiber_trace=fiber_trace,
                )
            birth += 1
            cur = transform_multiideal(cur, center, exc_hid, birth)
    return EquiTrace(
        steps=tuple(steps),
        completed=True,
        equiresolution=fiber_trace.resolved,
        failure=None,
        final=cur,
        fiber_trace=fiber_trace,
    )
