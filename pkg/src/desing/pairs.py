"""Marked pairs (ideal, mark) and their transforms under one blow-up.

The three transforms differ only in how much of the exceptional coordinate
is divided out of the pullback: nothing (total), the mark (controlled), or
the multiplicity along the center (proper).  The proper factorization ledger
records, per pair, the exceptional exponent picked up at each step, so the
controlled generators always factor as proper generators times a recorded
exceptional monomial; that identity is checked whenever a ledger entry is
built.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

from .charts import AlignedCenter, Chart, pullback
from .errors import LedgerInconsistent, NotPermissible
from .ideals import IdealRep, ideal_order_at_least, make_ideal
from .poly import Poly


@dataclass(frozen=True)
class MarkedPair:
    ideal: IdealRep
    mark: int

    def __post_init__(self):
        if self.mark < 1:
            raise ValueError("mark must be a positive integer")


def sing_member(pair: MarkedPair, point: Sequence[Fraction]) -> bool:
    """Point of the singular locus: vanishing order at least the mark."""
    return ideal_order_at_least(pair.ideal, point, pair.mark)


# ---------------------------------------------------------------------------
# transforms along one blow-up chart
# ---------------------------------------------------------------------------


def total_transform_gens(gens: Sequence[Poly], child: Chart) -> Tuple[Poly, ...]:
    return tuple(pullback(child, g) for g in gens)


def transform_gens(
    gens: Sequence[Poly],
    child: Chart,
    exc_index: int,
    power: int,
    pair_index: Optional[int] = None,
) -> Tuple[Poly, ...]:
    """Pull back and divide the exceptional coordinate out ``power`` times."""
    out = []
    for g in gens:
        lifted = pullback(child, g)
        if lifted.is_zero():
            out.append(lifted)
            continue
        try:
            out.append(lifted.divide_coord_power(exc_index, power))
        except ValueError:
            raise NotPermissible(
                "pullback to chart %s is not divisible by the exceptional power %d"
                % (child.cid, power),
                pair_index=pair_index,
            )
    return tuple(out)


def total_transform(pair: MarkedPair, child: Chart) -> MarkedPair:
    return MarkedPair(make_ideal(child, total_transform_gens(pair.ideal.gens, child)), pair.mark)


def controlled_transform(pair: MarkedPair, child: Chart, exc_index: int, pair_index=None) -> MarkedPair:
    gens = transform_gens(pair.ideal.gens, child, exc_index, pair.mark, pair_index)
    return MarkedPair(make_ideal(child, gens), pair.mark)


def proper_transform(pair: MarkedPair, child: Chart, exc_index: int, multiplicity: int) -> MarkedPair:
    """Divide by the full multiplicity along the center (the maximal power)."""
    gens = transform_gens(pair.ideal.gens, child, exc_index, multiplicity)
    return MarkedPair(make_ideal(child, gens), pair.mark)


# ---------------------------------------------------------------------------
# proper factorization ledger
# ---------------------------------------------------------------------------


def next_ledger_exponent(
    mark: int,
    proper_multiplicity: int,
    old_exps: Sequence[int],
    old_through_center: Sequence[bool],
) -> int:
    """Exceptional exponent gained at a step.

    The new divisor collects the center multiplicity of the proper part,
    minus the mark, plus every old exponent whose divisor passes through the
    center (each old exceptional coordinate contributes its recorded power).
    """
    if len(old_exps) != len(old_through_center):
        raise ValueError("ledger length mismatch")
    gained = proper_multiplicity - mark
    for a, through in zip(old_exps, old_through_center):
        if through:
            gained += a
    if gained < 0:
        raise NotPermissible(
            "negative exceptional exponent %d: center multiplicity below the mark" % gained
        )
    return gained


def exceptional_monomial(chart: Chart, divisor_ids: Sequence[str], exps: Sequence[int]) -> Poly:
    """The recorded exceptional monomial, as far as it meets this chart."""
    mono = Poly.constant(chart.ring, chart.nvars, 1)
    for hid, a in zip(divisor_ids, exps):
        if a == 0:
            continue
        idx = chart.hyp_coord(hid)
        if idx is None:
            continue
        mono = mono.mul_coord_power(idx, a)
    return mono


def verify_factorization(
    chart: Chart,
    controlled_gens: Sequence[Poly],
    proper_gens: Sequence[Poly],
    divisor_ids: Sequence[str],
    exps: Sequence[int],
) -> None:
    """Check controlled = proper * exceptional monomial, generator by generator."""
    if len(controlled_gens) != len(proper_gens):
        raise LedgerInconsistent("generator lists out of step on chart %s" % chart.cid)
    mono = exceptional_monomial(chart, divisor_ids, exps)
    for ctl, prop in zip(controlled_gens, proper_gens):
        if prop * mono != ctl:
            raise LedgerInconsistent(
                "factorization identity fails on chart %s: %s * %s != %s"
                % (chart.cid, chart.show(prop), chart.show(mono), chart.show(ctl))
            )
