"""Invariant-driven resolution of marked-ideal collections.

The driver peels the singular locus by repeatedly blowing up the place where
a layered invariant is largest.  While the factored layer has positive order,
the controlling value is the refined pair (order ratio, old-divisor count)
located on the candidate lattice.  A codimension-one component of the maximum
is blown up directly and recorded with the top sentinel as its lower value.
Otherwise the driver straightens a contact element into a coordinate, builds
an auxiliary collection whose singular locus is the maximum, restricts its
coefficient cascade to the contact hypersurface, resolves that object one
dimension lower, and replays each of its centers upstairs, recording the pair
(refined value, lower value) at every replayed step.  Once the factored order
reaches zero the remaining ideal is a monomial in the tracked divisors and
the combinatorial engine finishes the job, with every blow-up mirrored on the
charts and the divisor incidence cross-checked after each one.

Values live in a dimension-indexed ordered set with three branches: tuples
(refined pair, lower value), gamma values from the combinatorial engine, and
a top sentinel.  Gamma values sort below tuples: they arise exactly where the
factored order is zero while tuples carry a positive ratio, so recorded
maxima keep falling across the phase switch.  The decrease is asserted on
every recorded step and any violation surfaces as an error rather than being
smoothed over.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .charts import AlignedCenter, Chart, HypRecord
from .errors import (
    DesingError,
    LedgerInconsistent,
    NoWitness,
    StepCapExceeded,
    UnsupportedLocus,
)
from .ideals import IdealRep, diff_closure, ideal_product, make_ideal, mutually_generate
from .invariants import (
    Candidate,
    RatioCount,
    ResolutionState,
    advance,
    apply_chart_change,
    initial_state,
    lattice_max_refined,
    minimal_attaining,
    old_divisor_ids,
    point_is_singular,
    ratio_at,
    refined_at,
    sing_is_empty,
    young_divisor_ids,
)
from .monomial import (
    MonomialForm,
    MonomialInvariant,
    MonomialTrace,
    gamma as monomial_gamma,
    make_monomial_form,
    monomial_transform,
    resolve_monomial,
)
from .multiideal import (
    Center,
    MultiIdeal,
    associated_basic_object,
    inductive_object,
    make_multiideal,
)
from .pairs import exceptional_monomial
from .poly import Poly, coef_is_unit

_PRODUCT_CAP = 1 << 12
_BATCH_CAP = 64

_RANK = {"gamma": 0, "tuple": 1, "infinity": 2}


@dataclass(frozen=True)
class InvariantValue:
    """A value of the layered invariant in ambient dimension ``dim``.

    ``tuple`` pairs a :class:`RatioCount` with a value one dimension lower
    (no tail in dimension one), ``gamma`` wraps a monomial invariant, and
    ``infinity`` is the top element; it appears as the tail recorded over a
    codimension-one component of the maximum, where no restriction is taken.
    Values of different dimensions never compare.
    """

    dim: int
    kind: str
    t: Optional[RatioCount] = None
    tail: Optional["InvariantValue"] = None
    gamma: Optional[MonomialInvariant] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive, got %d" % self.dim)
        if self.kind not in _RANK:
            raise ValueError("unknown value kind %r" % (self.kind,))
        if self.kind == "tuple":
            if self.t is None:
                raise ValueError("a tuple value needs its refined pair")
            if self.dim == 1 and self.tail is not None:
                raise ValueError("one-dimensional tuple values carry no tail")
            if self.dim > 1:
                if self.tail is None:
                    raise ValueError("tuple values above dimension one need a tail")
                if self.tail.dim != self.dim - 1:
                    raise ValueError(
                        "tail dimension %d does not fit under dimension %d"
                        % (self.tail.dim, self.dim)
                    )
        if self.kind == "gamma" and self.gamma is None:
            raise ValueError("a gamma value needs its monomial invariant")

    def _cmp(self, other: "InvariantValue") -> int:
        if self.dim != other.dim:
            raise ValueError(
                "cannot compare values of dimensions %d and %d" % (self.dim, other.dim)
            )
        if _RANK[self.kind] != _RANK[other.kind]:
            return -1 if _RANK[self.kind] < _RANK[other.kind] else 1
        if self.kind == "infinity":
            return 0
        if self.kind == "gamma":
            return self.gamma._cmp(other.gamma)
        if self.t != other.t:
            return -1 if self.t < other.t else 1
        if self.dim == 1:
            return 0
        return self.tail._cmp(other.tail)

    def __lt__(self, other: "InvariantValue") -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: "InvariantValue") -> bool:
        return self._cmp(other) <= 0

    def __str__(self) -> str:
        if self.kind == "infinity":
            return "inf_%d" % self.dim
        if self.kind == "gamma":
            return str(self.gamma)
        if self.dim == 1:
            return str(self.t)
        return "(%s, %s)" % (self.t, self.tail)


def tuple_value(
    dim: int, t: RatioCount, tail: Optional[InvariantValue] = None
) -> InvariantValue:
    return InvariantValue(dim=dim, kind="tuple", t=t, tail=tail)


def gamma_value(dim: int, value: MonomialInvariant) -> InvariantValue:
    return InvariantValue(dim=dim, kind="gamma", gamma=value)


def infinity_value(dim: int) -> InvariantValue:
    return InvariantValue(dim=dim, kind="infinity")


@dataclass(frozen=True)
class TraceStep:
    """One recorded step: the value cleared and the centers blown for it."""

    index: int
    phase: str
    value: InvariantValue
    centers: Tuple[Center, ...]
    center_desc: Tuple[str, ...]
    new_ids: Tuple[str, ...]
    charts: Tuple[str, ...]


@dataclass(frozen=True)
class Trace:
    steps: Tuple[TraceStep, ...]
    resolved: bool
    final: ResolutionState
    monomial: Optional[MonomialTrace] = None


# ---------------------------------------------------------------------------
# small helpers
# ---------------------------------------------------------------------------


def _ambient_dim(state: ResolutionState) -> int:
    dims = {piece.chart.dim_w for piece in state.pieces}
    if len(dims) != 1:
        raise UnsupportedLocus(
            "charts disagree on the ambient dimension: %s" % sorted(dims)
        )
    return dims.pop()


def _chart_ids(state: ResolutionState) -> Tuple[str, ...]:
    return tuple(sorted(piece.chart.cid for piece in state.pieces))


def _fresh_id(used: Set[str], prefix: str = "E") -> str:
    k = len(used) + 1
    while "%s%d" % (prefix, k) in used:
        k += 1
    return "%s%d" % (prefix, k)


def _codim(state: ResolutionState, cand: Candidate) -> int:
    chart = state.pieces[cand.piece_index].chart
    return len(cand.coords - chart.w_coords)


def _integral_mark(ratio: Fraction, b: int) -> int:
    value = ratio * b
    if value.denominator != 1 or value <= 0:
        raise LedgerInconsistent(
            "the maximal ratio %s against mark %d gives no positive integer"
            % (ratio, b)
        )
    return int(value)


def _center_key(state: ResolutionState, cand: Candidate):
    chart = state.pieces[cand.piece_index].chart
    hids: List[str] = []
    frees: List[str] = []
    for idx in sorted(cand.coords):
        if idx in chart.w_coords:
            continue
        hid = chart.coord_hyp(idx)
        if hid is not None:
            hids.append(hid)
        else:
            frees.append(chart.names[idx])
    return tuple(sorted(hids)), tuple(sorted(frees))


def group_centers(state: ResolutionState, cands: Sequence[Candidate]) -> List[Center]:
    """Merge chart-local candidates that present one subvariety.

    Two candidates are parts of the same center when they vanish on the same
    tracked divisors and on free coordinates of the same names; overlapping
    charts of a blow-up cover present a shared subvariety in exactly this
    way.  A wrong merge is rejected loudly by the cross-part multiplicity
    checks during the blow-up.  Covers whose genuinely distinct patches are
    combinatorially identical are outside this grouping's scope.
    """
    keyed: Dict[tuple, Dict[str, AlignedCenter]] = {}
    for cand in cands:
        chart = state.pieces[cand.piece_index].chart
        key = _center_key(state, cand)
        keyed.setdefault(key, {})[chart.cid] = AlignedCenter(
            chart.cid, frozenset(cand.coords)
        )
    centers: List[Center] = []
    for key in sorted(keyed):
        parts = tuple(keyed[key][cid] for cid in sorted(keyed[key]))
        centers.append(Center(parts=parts))
    return centers


def _describe_center(state: ResolutionState, center: Center) -> str:
    bits = []
    for part in center.parts:
        _, piece = state.piece_by_id(part.chart_id)
        names = ", ".join(piece.chart.names[i] for i in sorted(part.coords))
        bits.append("%s: V(%s)" % (part.chart_id, names))
    return "; ".join(bits)


def n1_components(state: ResolutionState) -> List[Center]:
    """Codimension-one components of the refined-invariant maximum."""
    if _ambient_dim(state) < 2 or sing_is_empty(state):
        return []
    _, attaining = lattice_max_refined(state)
    minimal = minimal_attaining(attaining)
    return group_centers(state, [c for c in minimal if _codim(state, c) == 1])


def ratio_mark(state: ResolutionState) -> int:
    """The integer realizing the maximal ratio against the pair's mark."""
    best, _ = lattice_max_refined(state)
    return _integral_mark(best.ratio, state.marks[0])


# ---------------------------------------------------------------------------
# auxiliary collections cut out by the maximum
# ---------------------------------------------------------------------------


def build_I_prime(state: ResolutionState) -> MultiIdeal:
    """The two-pair collection whose singular locus is the ratio maximum."""
    if state.npairs != 1:
        raise UnsupportedLocus(
            "the ratio object is defined for a single pair; reduce first"
        )
    bs = ratio_mark(state)
    pieces = [
        (piece.chart, [list(piece.controlled[0]), list(piece.proper[0])])
        for piece in state.pieces
    ]
    return make_multiideal(
        marks=(state.marks[0], bs), divisors=state.divisors, pieces=pieces
    )


def _local_product(chart: Chart, old_ids: Sequence[str], nbar: int) -> List[Poly]:
    """Product over size-``nbar`` subsets of old divisors of the sum of their
    coordinate ideals, on one chart; a subset with an invisible member is a
    unit factor and drops out."""
    table = {hid: idx for hid, idx in chart.hyps}
    prod: Optional[IdealRep] = None
    for subset in combinations(old_ids, nbar):
        if any(hid not in table for hid in subset):
            continue
        gens = [chart.var(table[hid]) for hid in subset]
        summand = make_ideal(chart, gens)
        prod = summand if prod is None else ideal_product(prod, summand)
        if len(prod.gens) > _PRODUCT_CAP:
            raise UnsupportedLocus(
                "the old-divisor product outgrew %d generators" % _PRODUCT_CAP
            )
    if prod is None:
        return [Poly.constant(chart.ring, chart.nvars, 1)]
    return list(prod.gens)


def _diamond(
    state: ResolutionState, best: RatioCount, kept_indices: Sequence[int]
) -> MultiIdeal:
    b = state.marks[0]
    bs = _integral_mark(best.ratio, b)
    old = old_divisor_ids(state)
    young = set(young_divisor_ids(state))
    nbar = best.count
    if nbar > len(old):
        raise LedgerInconsistent(
            "the refined count %d exceeds the %d old divisors" % (nbar, len(old))
        )
    if nbar > 0 and comb(len(old), nbar) > _PRODUCT_CAP:
        raise UnsupportedLocus(
            "%d choose %d old-divisor subsets exceed the budget" % (len(old), nbar)
        )
    divisors = tuple(
        HypRecord(rec.hid, 0) for rec in state.divisors if rec.hid in young
    )
    pieces = []
    for pidx in kept_indices:
        piece = state.pieces[pidx]
        chart = piece.chart
        stripped = Chart(
            cid=chart.cid,
            ring=chart.ring,
            names=chart.names,
            w_coords=chart.w_coords,
            hyps=tuple((hid, idx) for hid, idx in chart.hyps if hid in young),
            parent=chart.parent,
            parent_map=chart.parent_map,
        )
        gens_lists = [list(piece.controlled[0]), list(piece.proper[0])]
        if nbar > 0:
            gens_lists.append(_local_product(chart, old, nbar))
        pieces.append((stripped, gens_lists))
    marks = [b, bs] + ([1] if nbar > 0 else [])
    return make_multiideal(marks=marks, divisors=divisors, pieces=pieces)


def build_I_diamond(state: ResolutionState) -> MultiIdeal:
    """The descent collection over the charts that attain the maximum.

    Divisors older than the anchor step leave the tracked list, so their
    coordinates become plain ones; younger divisors stay with their birth
    reset.  When the refined count is positive an extra pair of mark one
    carries the old-divisor product cutting the locus where enough old
    divisors meet.
    """
    if state.npairs != 1:
        raise UnsupportedLocus(
            "the descent object is defined for a single pair; reduce first"
        )
    best, attaining = lattice_max_refined(state)
    kept = sorted({cand.piece_index for cand, _ in attaining})
    return _diamond(state, best, kept)


# ---------------------------------------------------------------------------
# contact coordinates
# ---------------------------------------------------------------------------


def _poly_sort_key(p: Poly):
    return tuple((e, repr(c)) for e, c in p.sorted_terms())


def _triangular_pivot(g: Poly, chart: Chart) -> Optional[int]:
    """The free coordinate in which ``g`` is a unit linear term plus terms
    not using that coordinate, or None."""
    if g.is_zero():
        return None
    n = chart.nvars
    if (0,) * n in g.terms:
        return None
    for j in range(n):
        if j in chart.w_coords or chart.coord_hyp(j) is not None:
            continue
        unit_vec = tuple(1 if k == j else 0 for k in range(n))
        using = [e for e in g.terms if e[j] > 0]
        if using == [unit_vec] and coef_is_unit(g.terms[unit_vec]):
            return j
    return None


def adapted_choice(state: ResolutionState, chart_id: str) -> Tuple[int, Optional[Poly]]:
    """A contact coordinate for the chart.

    Searches the derivative closure of the factored layer, at depth one less
    than the integer realizing the maximal ratio, for an element triangular
    in some free coordinate: first the plain generators in canonical order,
    then pairwise combinations with small integer weights.  Returns the pivot
    with the equation to apply, or with None when the element already is the
    coordinate itself.

    When no free coordinate works the closure may still contain a tracked
    hypersurface coordinate outright; restricting onto that divisor is fine
    (the divisor record is dropped at the cut), so such a coordinate is
    returned bare.  A coordinate change there is never attempted: it would
    bend the tracked divisor out of alignment.

    Last resort for low-ratio states whose every contact element is tangent
    to a divisor: when the chart shows exactly as many old divisors as the
    refined count, every attaining point lies on all of them, and the
    old-divisor product pair added by the auxiliary collection pins its
    singular locus inside each one.  The lowest such coordinate is then an
    exact cut and is returned bare.
    """
    _, piece = state.piece_by_id(chart_id)
    chart = piece.chart
    best, _ = lattice_max_refined(state)
    bs = _integral_mark(best.ratio, state.marks[0])
    closure = diff_closure(make_ideal(chart, piece.proper[0]), bs - 1)
    gens = sorted(closure.gens, key=_poly_sort_key)
    pool: List[Poly] = list(gens)
    for c in (1, -1, 2, -2):
        for g in gens:
            for h in gens:
                if g is h:
                    continue
                pool.append(g + h.scale(Fraction(c)))
    for g in pool:
        j = _triangular_pivot(g, chart)
        if j is None:
            continue
        if len(g.terms) == 1:
            return j, None
        return j, g
    n = chart.nvars
    for g in gens:
        if len(g.terms) != 1:
            continue
        (exp, coef), = g.terms.items()
        if sum(exp) != 1 or not coef_is_unit(coef):
            continue
        j = exp.index(1)
        if j in chart.w_coords:
            continue
        if chart.coord_hyp(j) is not None:
            return j, None
    old = set(old_divisor_ids(state))
    visible = sorted(
        idx for hid, idx in chart.hyps if hid in old and idx not in chart.w_coords
    )
    if best.count > 0 and len(visible) == best.count:
        return visible[0], None
    raise UnsupportedLocus(
        "no aligned contact coordinate in chart %s; the locus would need a "
        "curved hypersurface" % chart_id
    )


def _straightened(
    state: ResolutionState, entry: RatioCount, kept: Sequence[int]
) -> Tuple[ResolutionState, Dict[str, int]]:
    """Turn a contact element into a coordinate on every kept chart.

    Returns the updated state and the chart-to-pivot map; the refined
    maximum and the attaining chart set must survive the changes.
    """
    z_map: Dict[str, int] = {}
    for pidx in kept:
        cid = state.pieces[pidx].chart.cid
        pivot, equation = adapted_choice(state, cid)
        if equation is not None:
            state = apply_chart_change(state, cid, pivot, equation)
            cid = state.pieces[pidx].chart.cid
        z_map[cid] = pivot
    best, attaining = lattice_max_refined(state)
    if best != entry:
        raise LedgerInconsistent(
            "the refined maximum moved from %s to %s under a coordinate change"
            % (entry, best)
        )
    kept_after = sorted({cand.piece_index for cand, _ in attaining})
    if kept_after != sorted(kept):
        raise LedgerInconsistent(
            "the attaining charts changed under a coordinate change"
        )
    return state, z_map


# ---------------------------------------------------------------------------
# batches of the main loop
# ---------------------------------------------------------------------------


def _blow_while(
    state: ResolutionState,
    entry: RatioCount,
    used: Set[str],
    codim_one_only: bool,
) -> Tuple[ResolutionState, List[Center], List[str], List[str]]:
    """Blow grouped attaining centers one at a time while the maximum holds.

    With ``codim_one_only`` the batch also ends once no codimension-one
    component is left at the entry value.
    """
    centers: List[Center] = []
    descs: List[str] = []
    ids: List[str] = []
    inner = 0
    while True:
        if sing_is_empty(state):
            break
        best, attaining = lattice_max_refined(state)
        if best < entry:
            break
        if entry < best:
            raise LedgerInconsistent(
                "the refined maximum rose from %s to %s" % (entry, best)
            )
        minimal = minimal_attaining(attaining)
        if codim_one_only:
            minimal = [c for c in minimal if _codim(state, c) == 1]
        groups = group_centers(state, minimal)
        if not groups:
            break
        center = groups[0]
        hid = _fresh_id(used)
        used.add(hid)
        descs.append(_describe_center(state, center))
        state = advance(state, center, hid)
        centers.append(center)
        ids.append(hid)
        inner += 1
        if inner > _BATCH_CAP:
            raise StepCapExceeded(
                "more than %d component blow-ups at one value" % _BATCH_CAP
            )
    if not centers:
        raise LedgerInconsistent("a batch step recorded no blow-up")
    return state, centers, descs, ids


def _descent_steps(
    state: ResolutionState,
    entry: RatioCount,
    start_index: int,
    step_cap: int,
    used: Set[str],
    seed: int,
    dim: int,
) -> Tuple[ResolutionState, List[TraceStep]]:
    _, attaining = lattice_max_refined(state)
    kept = sorted({cand.piece_index for cand, _ in attaining})
    state, z_map = _straightened(state, entry, kept)

    # a divisorial component of the maximum may only become visible once the
    # contact element is a coordinate; it is blown directly, no restriction
    _, attaining = lattice_max_refined(state)
    minimal = minimal_attaining(attaining)
    if any(_codim(state, c) == 1 for c in minimal):
        state, centers, descs, ids = _blow_while(
            state, entry, used, codim_one_only=True
        )
        step = TraceStep(
            index=start_index,
            phase="t-sequence",
            value=tuple_value(dim, entry, infinity_value(dim - 1)),
            centers=tuple(centers),
            center_desc=tuple(descs),
            new_ids=tuple(ids),
            charts=_chart_ids(state),
        )
        return state, [step]

    diamond = _diamond(state, entry, kept)
    sub_mi = inductive_object(diamond, z_map)
    sub_trace = resolve(sub_mi, seed=seed, step_cap=step_cap)

    # restricted chart id -> (upstairs chart id, contact coordinate there)
    sub_map: Dict[str, Tuple[str, int]] = {}
    for cid, z in z_map.items():
        _, piece = state.piece_by_id(cid)
        sub_map["%s|%s" % (cid, piece.chart.names[z])] = (cid, z)

    out: List[TraceStep] = []
    for sub_step in sub_trace.steps:
        if start_index + len(out) >= step_cap:
            raise StepCapExceeded("resolution exceeded %d steps" % step_cap)
        if sing_is_empty(state):
            raise LedgerInconsistent(
                "the restricted run kept blowing after the locus emptied"
            )
        best, _ = lattice_max_refined(state)
        if best != entry:
            raise LedgerInconsistent(
                "the refined maximum moved from %s to %s before the restricted "
                "run finished" % (entry, best)
            )
        centers: List[Center] = []
        descs: List[str] = []
        ids: List[str] = []
        for sub_center in sub_step.centers:
            parts: List[AlignedCenter] = []
            lineage: List[Tuple[str, str, Tuple[str, ...], frozenset, int]] = []
            for part in sub_center.parts:
                if part.chart_id not in sub_map:
                    raise UnsupportedLocus(
                        "no upstairs chart matches %s; restricted runs that "
                        "change coordinates cannot be replayed" % part.chart_id
                    )
                amb_cid, z = sub_map[part.chart_id]
                _, amb_piece = state.piece_by_id(amb_cid)
                parts.append(AlignedCenter(amb_cid, part.coords))
                lineage.append(
                    (
                        part.chart_id,
                        amb_cid,
                        amb_piece.chart.names,
                        amb_piece.chart.w_coords,
                        z,
                    )
                )
            center = Center(parts=tuple(sorted(parts, key=lambda p: p.chart_id)))
            hid = _fresh_id(used)
            used.add(hid)
            descs.append(_describe_center(state, center))
            state = advance(state, center, hid)
            centers.append(center)
            ids.append(hid)
            for sub_cid, amb_cid, names, amb_w, z in lineage:
                part = sub_center.part_for(sub_cid)
                for i in sorted(part.coords):
                    if i in amb_w or i == z:
                        continue
                    child = ".%s" % names[i]
                    sub_map[sub_cid + child] = (amb_cid + child, z)
        out.append(
            TraceStep(
                index=start_index + len(out),
                phase="t-sequence",
                value=tuple_value(dim, entry, sub_step.value),
                centers=tuple(centers),
                center_desc=tuple(descs),
                new_ids=tuple(ids),
                charts=_chart_ids(state),
            )
        )
    if not out:
        raise LedgerInconsistent(
            "the restricted object was already resolved; the maximum %s has "
            "no descent" % (entry,)
        )
    if not sing_is_empty(state):
        best, _ = lattice_max_refined(state)
        if not (best < entry):
            raise LedgerInconsistent(
                "the refined maximum did not drop after the restricted run: "
                "%s then %s" % (entry, best)
            )
    return state, out


# ---------------------------------------------------------------------------
# monomial phase
# ---------------------------------------------------------------------------


def _handoff_form(state: ResolutionState) -> MonomialForm:
    """The combinatorial record of a state whose factored order is zero."""
    exc = state.exceptional_records()
    hyp_ids = tuple(rec.hid for rec in exc)
    family = []
    for piece in state.pieces:
        family.append(
            tuple(
                k
                for k, rec in enumerate(exc)
                if piece.chart.hyp_coord(rec.hid) is not None
            )
        )
    return make_monomial_form(state.marks, hyp_ids, state.exc_exps, maximal=family)


def _check_incidence(state: ResolutionState, form: MonomialForm) -> None:
    """The chart-borne divisor incidence must match the combinatorial strata."""
    sets = []
    for piece in state.pieces:
        sets.append(
            frozenset(
                k
                for k, hid in enumerate(form.hyp_ids)
                if piece.chart.hyp_coord(hid) is not None
            )
        )
    maximal = {tuple(sorted(s)) for s in sets if not any(s < t for t in sets)}
    if maximal != set(form.maximal):
        raise LedgerInconsistent(
            "chart incidence %s disagrees with the combinatorial strata %s"
            % (sorted(maximal), list(form.maximal))
        )


def _monomial_center(state: ResolutionState, hids: Sequence[str]) -> Center:
    parts = []
    for piece in state.pieces:
        table = {hid: idx for hid, idx in piece.chart.hyps}
        if all(h in table for h in hids):
            coords = frozenset(table[h] for h in hids) | piece.chart.w_coords
            parts.append(AlignedCenter(piece.chart.cid, coords))
    if not parts:
        raise LedgerInconsistent("stratum %s is visible in no chart" % (tuple(hids),))
    return Center(parts=tuple(sorted(parts, key=lambda p: p.chart_id)))


def _monomial_steps(
    state: ResolutionState,
    form: MonomialForm,
    start_index: int,
    step_cap: int,
    used: Set[str],
    dim: int,
) -> Tuple[ResolutionState, MonomialTrace, List[TraceStep]]:
    _check_incidence(state, form)
    mono = resolve_monomial(form, step_cap=max(4 * step_cap, 200))
    out: List[TraceStep] = []
    cur = form
    for mstep in mono.steps:
        if start_index + len(out) >= step_cap:
            raise StepCapExceeded("resolution exceeded %d steps" % step_cap)
        centers: List[Center] = []
        descs: List[str] = []
        ids: List[str] = []
        for component, mono_hid in zip(mstep.components, mstep.new_ids):
            if mono_hid in used:
                raise UnsupportedLocus(
                    "fresh id %s from the combinatorial run collides with a "
                    "tracked divisor" % mono_hid
                )
            positions = tuple(cur.hyp_ids.index(h) for h in component)
            center = _monomial_center(state, component)
            descs.append(_describe_center(state, center))
            state = advance(state, center, mono_hid)
            used.add(mono_hid)
            cur = monomial_transform(cur, positions, mono_hid)
            _check_incidence(state, cur)
            centers.append(center)
            ids.append(mono_hid)
        out.append(
            TraceStep(
                index=start_index + len(out),
                phase="monomial",
                value=gamma_value(dim, mstep.value),
                centers=tuple(centers),
                center_desc=tuple(descs),
                new_ids=tuple(ids),
                charts=_chart_ids(state),
            )
        )
    return state, mono, out


def declared_form(mi: MultiIdeal) -> MonomialForm:
    """The declared combinatorial record, cross-checked against the charts."""
    if mi.declared_exps is None:
        raise ValueError("the collection declares no exponent record")
    hyp_ids = mi.divisor_ids()
    family = []
    for piece in mi.pieces:
        family.append(
            tuple(
                k
                for k, hid in enumerate(hyp_ids)
                if piece.chart.hyp_coord(hid) is not None
            )
        )
    for piece in mi.pieces:
        for i in range(len(mi.marks)):
            mono = exceptional_monomial(piece.chart, hyp_ids, mi.declared_exps[i])
            if not mutually_generate(
                piece.pair_ideal(i), make_ideal(piece.chart, [mono])
            ):
                raise UnsupportedLocus(
                    "declared exponents disagree with pair %d in chart %s"
                    % (i + 1, piece.chart.cid)
                )
    return make_monomial_form(mi.marks, hyp_ids, mi.declared_exps, maximal=family)


def _resolve_declared(mi: MultiIdeal, seed: int, step_cap: int) -> Trace:
    form = declared_form(mi)
    state = initial_state(mi, seed=seed)
    used = {rec.hid for rec in state.divisors}
    dim = _ambient_dim(state)
    state, mono, steps = _monomial_steps(state, form, 0, step_cap, used, dim)
    if not sing_is_empty(state):
        raise LedgerInconsistent("the combinatorial run ended with singular points left")
    _assert_decreasing(steps)
    return Trace(steps=tuple(steps), resolved=True, final=state, monomial=mono)


# ---------------------------------------------------------------------------
# the driver
# ---------------------------------------------------------------------------


def _assert_decreasing(steps: Sequence[TraceStep]) -> None:
    for prev, cur in zip(steps, steps[1:]):
        if not (cur.value < prev.value):
            raise LedgerInconsistent(
                "the invariant failed to decrease: %s then %s"
                % (prev.value, cur.value)
            )


def resolve(mi: MultiIdeal, seed: int = 0, step_cap: int = 64) -> Trace:
    """Resolve a collection and return the recorded trace.

    Collections with a declared exponent record run entirely combinatorially
    with chart mirroring.  Several pairs are first reduced to a single one;
    the loop then alternates codimension-one components, descent batches, and
    the final combinatorial phase, asserting a strict decrease of the
    recorded value from step to step.
    """
    if mi.declared_exps is not None:
        return _resolve_declared(mi, seed, step_cap)
    basic = associated_basic_object(mi)
    state = initial_state(basic, seed=seed)
    dim = _ambient_dim(state)
    used = {rec.hid for rec in state.divisors}
    steps: List[TraceStep] = []
    mono: Optional[MonomialTrace] = None

    while not sing_is_empty(state):
        if len(steps) >= step_cap:
            raise StepCapExceeded("resolution exceeded %d steps" % step_cap)
        if state.history[-1] == 0:
            form = _handoff_form(state)
            state, mono, mono_steps = _monomial_steps(
                state, form, len(steps), step_cap, used, dim
            )
            steps.extend(mono_steps)
            if not sing_is_empty(state):
                raise LedgerInconsistent(
                    "the combinatorial phase ended with singular points left"
                )
            break
        best, attaining = lattice_max_refined(state)
        minimal = minimal_attaining(attaining)
        has_codim_one = any(_codim(state, c) == 1 for c in minimal)
        if dim >= 2 and has_codim_one:
            state, centers, descs, ids = _blow_while(
                state, best, used, codim_one_only=True
            )
            steps.append(
                TraceStep(
                    index=len(steps),
                    phase="t-sequence",
                    value=tuple_value(dim, best, infinity_value(dim - 1)),
                    centers=tuple(centers),
                    center_desc=tuple(descs),
                    new_ids=tuple(ids),
                    charts=_chart_ids(state),
                )
            )
        elif dim == 1:
            state, centers, descs, ids = _blow_while(
                state, best, used, codim_one_only=False
            )
            steps.append(
                TraceStep(
                    index=len(steps),
                    phase="t-sequence",
                    value=tuple_value(1, best),
                    centers=tuple(centers),
                    center_desc=tuple(descs),
                    new_ids=tuple(ids),
                    charts=_chart_ids(state),
                )
            )
        else:
            state, new_steps = _descent_steps(
                state, best, len(steps), step_cap, used, seed, dim
            )
            steps.extend(new_steps)
    _assert_decreasing(steps)
    return Trace(steps=tuple(steps), resolved=True, final=state, monomial=mono)


# ---------------------------------------------------------------------------
# pointwise values
# ---------------------------------------------------------------------------


def _gamma_at_point(
    state: ResolutionState, chart_id: str, point: Sequence[Fraction]
) -> MonomialInvariant:
    _, piece = state.piece_by_id(chart_id)
    form = _handoff_form(state)
    stratum = tuple(
        k
        for k, hid in enumerate(form.hyp_ids)
        if piece.chart.hyp_coord(hid) is not None
        and point[piece.chart.hyp_coord(hid)] == 0
    )
    return monomial_gamma(form, stratum)


def h_value(
    state: ResolutionState, chart_id: str, point: Sequence[Fraction]
) -> InvariantValue:
    """The layered invariant at one singular point.

    Zero factored order gives the gamma branch.  In dimension one the
    refined pair is the whole value.  When the maximum carries a divisorial
    component the tail is the top sentinel, with no restriction taken.  Away
    from the maximum the tail is likewise the sentinel, a placeholder that
    never decides a comparison because the refined pair already differs.  On
    the maximum the tail is the value of the restricted collection at the
    same point, one dimension lower.
    """
    idx, piece = state.piece_by_id(chart_id)
    pt = piece.chart.check_point(point)
    if not point_is_singular(state, chart_id, pt):
        raise NoWitness("the point is not singular")
    dim = piece.chart.dim_w
    if ratio_at(state, chart_id, pt) == 0:
        return gamma_value(dim, _gamma_at_point(state, chart_id, pt))
    tv = refined_at(state, chart_id, pt)
    if dim == 1:
        return tuple_value(1, tv)
    best, attaining = lattice_max_refined(state)
    minimal = minimal_attaining(attaining)
    if tv < best or any(_codim(state, c) == 1 for c in minimal):
        return tuple_value(dim, tv, infinity_value(dim - 1))

    pivot, equation = adapted_choice(state, chart_id)
    local, cid, pt2 = state, chart_id, list(pt)
    if equation is not None:
        pt2[pivot] = equation.evaluate(pt)[0]
        local = apply_chart_change(state, chart_id, pivot, equation)
        cid = local.pieces[idx].chart.cid
        best2, attaining2 = lattice_max_refined(local)
        if best2 != best:
            raise LedgerInconsistent(
                "the refined maximum moved from %s to %s under a coordinate "
                "change" % (best, best2)
            )
        if any(_codim(local, c) == 1 for c in minimal_attaining(attaining2)):
            return tuple_value(dim, tv, infinity_value(dim - 1))
    if pt2[pivot] != 0:
        raise LedgerInconsistent(
            "a maximal point misses the contact hypersurface in chart %s" % cid
        )
    diamond = _diamond(local, best, [idx])
    sub_mi = inductive_object(diamond, {cid: pivot})
    sub_state = initial_state(sub_mi, seed=local.seed)
    sub_cid = "%s|%s" % (cid, local.pieces[idx].chart.names[pivot])
    tail = h_value(sub_state, sub_cid, tuple(pt2))
    return tuple_value(dim, tv, tail)


def descent_consistency(
    state: ResolutionState,
    chart_id: str,
    choice_a: Tuple[int, Optional[Poly]],
    choice_b: Tuple[int, Optional[Poly]],
) -> bool:
    """Do two contact choices give the same lower-dimensional step values?

    Each choice is a pivot with an optional triangular equation to apply
    first.  The restricted collection on that chart is resolved for both and
    the recorded step values are compared; a choice that fails to produce a
    restricted resolution at all counts as a disagreement.
    """
    try:
        seq_a = _sub_values(state, chart_id, choice_a)
        seq_b = _sub_values(state, chart_id, choice_b)
    except DesingError:
        return False
    return seq_a == seq_b


def _sub_values(
    state: ResolutionState, chart_id: str, choice: Tuple[int, Optional[Poly]]
) -> Tuple[InvariantValue, ...]:
    pivot, equation = choice
    best, _ = lattice_max_refined(state)
    idx, _ = state.piece_by_id(chart_id)
    local = state
    if equation is not None:
        local = apply_chart_change(state, chart_id, pivot, equation)
    cid = local.pieces[idx].chart.cid
    diamond = _diamond(local, best, [idx])
    sub_mi = inductive_object(diamond, {cid: pivot})
    sub_trace = resolve(sub_mi, seed=state.seed, step_cap=64)
    return tuple(step.value for step in sub_trace.steps)
