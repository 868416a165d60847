"""Resolution state: controlled and factored transforms plus order invariants.

The state tracks, for one marked-ideal collection, three parallel layers:

* the controlled transforms (the evolving object itself),
* the factored generators, with the accumulated exceptional monomial divided
  out, pair by pair and generator by generator,
* the integer exponent ledger of that monomial per exceptional divisor.

The ratio invariant at a singular point is the factored ideal's multiplicity
divided by the pair's mark, minimized over pairs.  The refined invariant
appends the number of old divisors through the point, where "old" means born
no later than the earliest state that already had the current maximal ratio.

Maxima are computed over the aligned candidate lattice (coordinate
subvarieties of each chart) and cross-checked against seeded sample points;
a sample beating the lattice raises :class:`UnsupportedLocus` rather than
returning a silently wrong maximum.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

from .charts import Chart, HypRecord, blowup, triangular_change
from .errors import (
    ChartMismatch,
    LedgerInconsistent,
    NotPermissible,
    UnsupportedLocus,
)
from .ideals import gens_nu_along
from .multiideal import Center, MultiIdeal, require_permissible
from .pairs import next_ledger_exponent, transform_gens, verify_factorization
from .poly import INF, Poly
from .sampling import chart_sample_points

_LATTICE_CAP = 12  # active coordinates per chart enumerated exhaustively


@dataclass(frozen=True)
class StatePiece:
    """One chart with controlled and factored generator lists kept parallel."""

    chart: Chart
    controlled: Tuple[Tuple[Poly, ...], ...]
    proper: Tuple[Tuple[Poly, ...], ...]


@dataclass(frozen=True)
class RatioCount:
    """The pair (ratio, divisor count), ordered lexicographically."""

    ratio: Fraction
    count: int

    def key(self):
        return (self.ratio, self.count)

    def __lt__(self, other: "RatioCount") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "RatioCount") -> bool:
        return self.key() <= other.key()

    def __str__(self) -> str:
        return "(%s, %d)" % (self.ratio, self.count)


@dataclass(frozen=True)
class Candidate:
    """An aligned subvariety V(S) inside one chart's singular locus."""

    piece_index: int
    coords: frozenset
    ratio: Fraction
    pair_ratios: Tuple[Fraction, ...]


@dataclass(frozen=True)
class ResolutionState:
    marks: Tuple[int, ...]
    divisors: Tuple[HypRecord, ...]
    pieces: Tuple[StatePiece, ...]
    exc_exps: Tuple[Tuple[int, ...], ...]
    history: Tuple[Optional[Fraction], ...]
    step: int
    seed: int

    @property
    def npairs(self) -> int:
        return len(self.marks)

    def piece_by_id(self, chart_id: str) -> Tuple[int, StatePiece]:
        for idx, piece in enumerate(self.pieces):
            if piece.chart.cid == chart_id:
                return idx, piece
        raise ChartMismatch("no chart %r in the current state" % chart_id)

    def exceptional_records(self) -> Tuple[HypRecord, ...]:
        return tuple(rec for rec in self.divisors if rec.birth > 0)

    def multiideal(self) -> MultiIdeal:
        from .multiideal import make_multiideal

        return make_multiideal(
            self.marks,
            self.divisors,
            [(p.chart, [list(g) for g in p.controlled]) for p in self.pieces],
        )


def initial_state(mi: MultiIdeal, seed: int = 0) -> ResolutionState:
    """Start a resolution run; the factored layer begins equal to the object."""
    pieces = []
    for piece in mi.pieces:
        for i, gens in enumerate(piece.pair_gens):
            if not gens or all(g.is_zero() for g in gens):
                raise UnsupportedLocus(
                    "pair %d is zero on chart %s; its locus is the whole chart"
                    % (i + 1, piece.chart.cid)
                )
        pieces.append(StatePiece(piece.chart, piece.pair_gens, piece.pair_gens))
    state = ResolutionState(
        marks=mi.marks,
        divisors=mi.divisors,
        pieces=tuple(pieces),
        exc_exps=tuple(() for _ in mi.marks),
        history=(),
        step=0,
        seed=seed,
    )
    return _record_current_max(state)


def _record_current_max(state: ResolutionState) -> ResolutionState:
    cands = singular_candidates(state)
    value = lattice_max_ratio(state, cands) if cands else None
    if value is None:
        _assert_no_singular_samples(state)
    return ResolutionState(
        marks=state.marks,
        divisors=state.divisors,
        pieces=state.pieces,
        exc_exps=state.exc_exps,
        history=state.history + (value,),
        step=state.step,
        seed=state.seed,
    )


def point_is_singular(state: ResolutionState, chart_id: str, point: Sequence[Fraction]) -> bool:
    _, piece = state.piece_by_id(chart_id)
    piece.chart.check_point(point)
    for i, b in enumerate(state.marks):
        if _gens_order_at(piece.controlled[i], point) < b:
            return False
    return True


def _gens_order_at(gens: Sequence[Poly], point: Sequence[Fraction]):
    order = INF
    for g in gens:
        o = g.order_at_point(point)
        if o is not INF and (order is INF or o < order):
            order = o
    return order


def sing_is_empty(state: ResolutionState) -> bool:
    if singular_candidates(state):
        return False
    _assert_no_singular_samples(state)
    return True


def _assert_no_singular_samples(state: ResolutionState) -> None:
    for piece in state.pieces:
        for point in chart_sample_points(piece.chart, seed=state.seed):
            if point_is_singular(state, piece.chart.cid, point):
                raise UnsupportedLocus(
                    "chart %s has a singular sample point off the aligned "
                    "candidate lattice" % piece.chart.cid
                )


def singular_candidates(state: ResolutionState) -> List[Candidate]:
    """All aligned subvarieties contained in the singular locus, with ratios."""
    out: List[Candidate] = []
    for pidx, piece in enumerate(state.pieces):
        chart = piece.chart
        active = sorted(chart.active_coords())
        if len(active) > _LATTICE_CAP:
            raise UnsupportedLocus(
                "chart %s has %d active coordinates; candidate lattice too large"
                % (chart.cid, len(active))
            )
        for size in range(1, len(active) + 1):
            for subset in combinations(active, size):
                coords = frozenset(subset) | chart.w_coords
                singular = True
                for i, b in enumerate(state.marks):
                    nu = gens_nu_along(piece.controlled[i], chart.w_coords, coords)
                    if nu is not INF and nu < b:
                        singular = False
                        break
                if not singular:
                    continue
                ratios = []
                for i, b in enumerate(state.marks):
                    nu = gens_nu_along(piece.proper[i], chart.w_coords, coords)
                    if nu is INF:
                        raise UnsupportedLocus(
                            "factored pair %d vanishes along a candidate in "
                            "chart %s" % (i + 1, chart.cid)
                        )
                    ratios.append(Fraction(nu, b))
                out.append(Candidate(pidx, coords, min(ratios), tuple(ratios)))
    return out


def pair_ratio_at(
    state: ResolutionState, chart_id: str, point: Sequence[Fraction], i: int
) -> Fraction:
    """The i-th pair's order ratio at a singular point."""
    if not point_is_singular(state, chart_id, point):
        raise ValueError("point is not in the singular locus")
    _, piece = state.piece_by_id(chart_id)
    nu = _gens_order_at(piece.proper[i], point)
    if nu is INF:
        raise UnsupportedLocus("factored pair %d vanishes at the point" % (i + 1))
    return Fraction(nu, state.marks[i])


def ratio_at(state: ResolutionState, chart_id: str, point: Sequence[Fraction]) -> Fraction:
    return min(pair_ratio_at(state, chart_id, point, i) for i in range(state.npairs))


def attaining_pair_index(
    state: ResolutionState, chart_id: str, point: Sequence[Fraction]
) -> int:
    """Smallest 1-based pair index realizing the ratio minimum at the point."""
    ratios = [pair_ratio_at(state, chart_id, point, i) for i in range(state.npairs)]
    best = min(ratios)
    return ratios.index(best) + 1


def lattice_max_ratio(
    state: ResolutionState, cands: Optional[List[Candidate]] = None
) -> Fraction:
    if cands is None:
        cands = singular_candidates(state)
    if not cands:
        raise ValueError("the singular locus is empty; no maximum to take")
    best = max(c.ratio for c in cands)
    for piece in state.pieces:
        for point in chart_sample_points(piece.chart, seed=state.seed):
            if not point_is_singular(state, piece.chart.cid, point):
                continue
            value = ratio_at(state, piece.chart.cid, point)
            if value > best:
                raise UnsupportedLocus(
                    "sampled ratio %s in chart %s exceeds the lattice maximum %s"
                    % (value, piece.chart.cid, best)
                )
    return best


def anchor_index(state: ResolutionState) -> int:
    """Earliest state index whose recorded maximum equals the current one."""
    current = state.history[-1]
    if current is None:
        raise ValueError("the singular locus is empty; no anchor")
    for j, value in enumerate(state.history):
        if value == current:
            return j
    raise LedgerInconsistent("recorded maxima miss the current value")


def old_divisor_ids(state: ResolutionState) -> Tuple[str, ...]:
    """Divisors born no later than the anchor state."""
    q = anchor_index(state)
    return tuple(rec.hid for rec in state.divisors if rec.birth <= q)


def young_divisor_ids(state: ResolutionState) -> Tuple[str, ...]:
    q = anchor_index(state)
    return tuple(rec.hid for rec in state.divisors if rec.birth > q)


def _old_count_for_coords(state: ResolutionState, chart: Chart, coords: frozenset) -> int:
    old = set(old_divisor_ids(state))
    return sum(
        1 for hid, idx in chart.hyps if hid in old and idx in coords
    )


def _old_count_at_point(
    state: ResolutionState, chart: Chart, point: Sequence[Fraction]
) -> int:
    old = set(old_divisor_ids(state))
    return sum(
        1 for hid, idx in chart.hyps if hid in old and point[idx] == 0
    )


def refined_at(
    state: ResolutionState, chart_id: str, point: Sequence[Fraction]
) -> RatioCount:
    _, piece = state.piece_by_id(chart_id)
    return RatioCount(
        ratio_at(state, chart_id, point),
        _old_count_at_point(state, piece.chart, point),
    )


def lattice_max_refined(
    state: ResolutionState,
) -> Tuple[RatioCount, List[Tuple[Candidate, RatioCount]]]:
    """Maximal refined invariant over the lattice plus attaining candidates.

    Candidates are first filtered to the maximal ratio, then compared on the
    old-divisor count; sampled singular points must not beat the result.
    """
    cands = singular_candidates(state)
    if not cands:
        raise ValueError("the singular locus is empty; no maximum to take")
    best_ratio = lattice_max_ratio(state, cands)
    scored: List[Tuple[Candidate, RatioCount]] = []
    for cand in cands:
        chart = state.pieces[cand.piece_index].chart
        value = RatioCount(cand.ratio, _old_count_for_coords(state, chart, cand.coords))
        scored.append((cand, value))
    best = max(value for _, value in scored)
    if best.ratio != best_ratio:
        raise LedgerInconsistent("refined maximum disagrees with the ratio maximum")
    for piece in state.pieces:
        for point in chart_sample_points(piece.chart, seed=state.seed):
            if not point_is_singular(state, piece.chart.cid, point):
                continue
            value = refined_at(state, piece.chart.cid, point)
            if best < value:
                raise UnsupportedLocus(
                    "sampled refined value %s in chart %s exceeds the lattice "
                    "maximum %s" % (value, piece.chart.cid, best)
                )
    attaining = [(cand, value) for cand, value in scored if not (value < best)]
    return best, attaining


def minimal_attaining(
    attaining: List[Tuple[Candidate, RatioCount]]
) -> List[Candidate]:
    """Drop attaining candidates strictly containing another one (same chart).

    Containment of subvarieties reverses inclusion of coordinate sets, so a
    candidate is kept when no other attaining candidate in the same chart has
    a strictly smaller coordinate set.
    """
    kept: List[Candidate] = []
    for cand, _ in attaining:
        dominated = False
        for other, _ in attaining:
            if other.piece_index == cand.piece_index and other.coords < cand.coords:
                dominated = True
                break
        if not dominated:
            kept.append(cand)
    kept.sort(key=lambda c: (c.piece_index, tuple(sorted(c.coords))))
    return kept


def advance(state: ResolutionState, center: Center, exc_hid: str) -> ResolutionState:
    """Blow up a permissible center and push all three layers through.

    The factored layer divides by the actual multiplicity along the center,
    the ledger gains one weighted exponent per pair, and the factorization
    identity is re-verified generator by generator on every child chart.
    """
    require_permissible(state.multiideal(), center)
    if exc_hid in {rec.hid for rec in state.divisors}:
        raise ValueError("divisor id %r already in use" % exc_hid)
    birth = state.step + 1
    exc_records = state.exceptional_records()

    # per-pair multiplicity of the factored ideal along the center, and which
    # exceptional divisors contain the center; both must agree across parts
    mults: Optional[List[int]] = None
    through: Optional[List[bool]] = None
    for part in center.parts:
        _, piece = state.piece_by_id(part.chart_id)
        chart = piece.chart
        part_mults = []
        for i in range(state.npairs):
            nu = gens_nu_along(piece.proper[i], chart.w_coords, part.coords)
            if nu is INF:
                raise UnsupportedLocus(
                    "factored pair %d vanishes along the center" % (i + 1)
                )
            part_mults.append(nu)
        hyp_map = dict(chart.hyps)
        part_through = [
            rec.hid in hyp_map and hyp_map[rec.hid] in part.coords
            for rec in exc_records
        ]
        if mults is None:
            mults, through = part_mults, part_through
        elif mults != part_mults or through != part_through:
            raise UnsupportedLocus(
                "center parts disagree on multiplicities; the exceptional "
                "exponent would not be constant"
            )
    assert mults is not None and through is not None

    new_exps = []
    for i, b in enumerate(state.marks):
        new_exps.append(
            state.exc_exps[i]
            + (next_ledger_exponent(b, mults[i], state.exc_exps[i], through),)
        )
    exc_ids_after = [rec.hid for rec in exc_records] + [exc_hid]

    new_pieces: List[StatePiece] = []
    for piece in state.pieces:
        part = center.part_for(piece.chart.cid)
        if part is None:
            new_pieces.append(piece)
            continue
        result = blowup(piece.chart, part, exc_hid)
        for child in result.children:
            exc_index = child.hyp_coord(exc_hid)
            controlled_out = []
            proper_out = []
            for i, b in enumerate(state.marks):
                controlled_i = transform_gens(
                    piece.controlled[i], child, exc_index, b, pair_index=i + 1
                )
                try:
                    proper_i = transform_gens(
                        piece.proper[i], child, exc_index, mults[i], pair_index=i + 1
                    )
                except NotPermissible:
                    raise LedgerInconsistent(
                        "factored pair %d not divisible by its multiplicity "
                        "%d on chart %s" % (i + 1, mults[i], child.cid)
                    )
                verify_factorization(
                    child, controlled_i, proper_i, exc_ids_after, new_exps[i]
                )
                controlled_out.append(controlled_i)
                proper_out.append(proper_i)
            new_pieces.append(
                StatePiece(child, tuple(controlled_out), tuple(proper_out))
            )

    next_state = ResolutionState(
        marks=state.marks,
        divisors=state.divisors + (HypRecord(exc_hid, birth),),
        pieces=tuple(new_pieces),
        exc_exps=tuple(tuple(row) for row in new_exps),
        history=state.history,
        step=birth,
        seed=state.seed,
    )
    return _record_current_max(next_state)


def apply_chart_change(
    state: ResolutionState, chart_id: str, pivot: int, equation: Poly
) -> ResolutionState:
    """Replace one chart by a triangular coordinate change, pulling all layers.

    Hypersurface coordinates are untouched by the change, so the exceptional
    monomial keeps its expression and the ledger identity survives verbatim.
    """
    idx, piece = state.piece_by_id(chart_id)
    new_chart = triangular_change(piece.chart, pivot, equation)
    controlled = tuple(
        tuple(g.substitute(new_chart.parent_map) for g in gens)
        for gens in piece.controlled
    )
    proper = tuple(
        tuple(g.substitute(new_chart.parent_map) for g in gens)
        for gens in piece.proper
    )
    pieces = list(state.pieces)
    pieces[idx] = StatePiece(new_chart, controlled, proper)
    return ResolutionState(
        marks=state.marks,
        divisors=state.divisors,
        pieces=tuple(pieces),
        exc_exps=state.exc_exps,
        history=state.history,
        step=state.step,
        seed=state.seed,
    )
