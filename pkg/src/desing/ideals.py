"""Ideal representatives on a chart, derivative closures, and membership.

An ideal is a finite generator list on one chart, always reduced to the
underlying scheme W: variables cutting out W are substituted away on
construction, so generators are honest functions on W.

Membership is only decided on a fragment where it is exact: syntactic hits,
monomial ideals (termwise, with eps-depth bookkeeping over artinian rings),
and reduction by generators whose leading coefficient is a unit.  Anything
else raises ``UndecidableMembership`` rather than guessing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Tuple

from .charts import Chart, restrict_chart
from .errors import ChartMismatch, RingMismatch, UndecidableMembership
from .poly import INF, Poly, coef_is_unit, coef_is_zero, _multi_indices_below


@dataclass(frozen=True)
class IdealRep:
    chart: Chart
    gens: Tuple[Poly, ...]

    def is_zero(self) -> bool:
        return not self.gens

    def describe(self) -> str:
        if not self.gens:
            return "(0)"
        return "(%s)" % ", ".join(self.chart.show(g) for g in self.gens)


def make_ideal(chart: Chart, gens: Iterable[Poly]) -> IdealRep:
    """Build an ideal on the chart: validate, reduce to W, prune redundancy.

    A generator that is an exact polynomial multiple of another listed
    generator is dropped; the ideal is unchanged and the cascades
    (derivative closures, products, powers) stay small instead of growing
    multiplicatively.
    """
    cleaned = []
    seen = set()
    for g in gens:
        if g.ring != chart.ring:
            raise RingMismatch("generator ring differs from chart ring")
        if g.nvars != chart.nvars:
            raise ChartMismatch("generator variable count differs from chart")
        for w in sorted(chart.w_coords):
            g = g.set_variable_zero(w)
        if g.is_zero():
            continue
        if g not in seen:
            seen.add(g)
            cleaned.append(g)
    cleaned.sort(key=_gen_sort_key)
    kept: list = []
    for g in cleaned:
        if any(g.try_exact_division(h) is not None for h in kept):
            continue
        kept.append(g)
    return IdealRep(chart=chart, gens=tuple(kept))


def _gen_sort_key(g: Poly):
    return (
        g.total_degree(),
        len(g.terms),
        tuple((e, repr(c)) for e, c in g.sorted_terms()),
    )


def parse_ideal(chart: Chart, texts: Iterable[str]) -> IdealRep:
    return make_ideal(chart, [chart.parse(t) for t in texts])


# ---------------------------------------------------------------------------
# orders
# ---------------------------------------------------------------------------


def ideal_order_at(ideal: IdealRep, point: Sequence[Fraction]):
    """Vanishing order at a point of W: minimum over generators, inf for (0)."""
    pt = ideal.chart.check_point(point)
    if not ideal.gens:
        return INF
    return min(g.order_at_point(pt) for g in ideal.gens)


def ideal_order_at_least(ideal: IdealRep, point: Sequence[Fraction], k: int) -> bool:
    pt = ideal.chart.check_point(point)
    return all(g.order_at_least(pt, k) for g in ideal.gens)


def nu_along(ideal: IdealRep, coords: Iterable[int]):
    """Order at the generic point of the aligned subvariety V(coords)."""
    active = tuple(sorted(set(coords) - ideal.chart.w_coords))
    if not ideal.gens:
        return INF
    return min(g.order_along(active) for g in ideal.gens)


def gens_nu_along(gens: Sequence[Poly], w_coords: frozenset, coords: Iterable[int]):
    active = tuple(sorted(set(coords) - w_coords))
    if not gens or all(g.is_zero() for g in gens):
        return INF
    return min(g.order_along(active) for g in gens if not g.is_zero())


# ---------------------------------------------------------------------------
# derivative closure
# ---------------------------------------------------------------------------


def diff_closure(ideal: IdealRep, count: int) -> IdealRep:
    """Extend by all partial derivatives up to the given order.

    Derivatives are taken along the coordinates of W only.  In characteristic
    zero this closed form agrees with iterating the one-step extension.
    """
    if count < 0:
        raise ValueError("negative derivative order")
    if count == 0:
        return ideal
    chart = ideal.chart
    active = chart.active_coords()
    out = []
    for g in ideal.gens:
        for alpha_small in _multi_indices_below(len(active), count + 1):
            h = g
            for pos, times in enumerate(alpha_small):
                for _ in range(times):
                    h = h.partial(active[pos])
                if h.is_zero():
                    break
            if not h.is_zero():
                out.append(h)
    return make_ideal(chart, out)


def delta(ideal: IdealRep) -> IdealRep:
    """One derivative extension: the ideal together with all first partials."""
    return diff_closure(ideal, 1)


# ---------------------------------------------------------------------------
# algebra on generator lists
# ---------------------------------------------------------------------------


def ideal_sum(a: IdealRep, b: IdealRep) -> IdealRep:
    if a.chart.cid != b.chart.cid:
        raise ChartMismatch("sum across charts %s and %s" % (a.chart.cid, b.chart.cid))
    return make_ideal(a.chart, a.gens + b.gens)


def ideal_product(a: IdealRep, b: IdealRep) -> IdealRep:
    if a.chart.cid != b.chart.cid:
        raise ChartMismatch("product across charts")
    return make_ideal(a.chart, [g * h for g in a.gens for h in b.gens])


def ideal_power(a: IdealRep, k: int) -> IdealRep:
    if k == 0:
        return make_ideal(a.chart, [Poly.constant(a.chart.ring, a.chart.nvars, 1)])
    gens = []
    for combo in itertools.combinations_with_replacement(a.gens, k):
        prod = combo[0]
        for g in combo[1:]:
            prod = prod * g
        gens.append(prod)
    return make_ideal(a.chart, gens)


def restrict_to(ideal: IdealRep, z_index: int) -> IdealRep:
    """Restrict to the hypersurface x_z = 0, which becomes part of W."""
    sub = restrict_chart(ideal.chart, z_index)
    return make_ideal(sub, [g.set_variable_zero(z_index) for g in ideal.gens])


# ---------------------------------------------------------------------------
# membership on the decidable fragment
# ---------------------------------------------------------------------------


def _eps_depth(coef) -> int:
    for k, part in enumerate(coef):
        if part != 0:
            return k
    raise ValueError("zero coefficient has no depth")


def _monomial_member(f: Poly, gens: Sequence[Poly]) -> bool:
    """Exact membership in an ideal generated by single-term polynomials."""
    lead = []
    for g in gens:
        ((exp, coef),) = g.terms.items()
        lead.append((exp, _eps_depth(coef)))
    for exp, coef in f.terms.items():
        depths = [d for gexp, d in lead if all(a >= b for a, b in zip(exp, gexp))]
        if not depths:
            return False
        need = min(depths)
        if any(coef[k] != 0 for k in range(min(need, len(coef)))):
            return False
    return True


def _reduce_by_unit_leads(f: Poly, gens: Sequence[Poly]) -> Poly:
    """Divide by every generator with a unit leading coefficient; remainder."""
    from .poly import coef_inverse, coef_mul

    usable = []
    for g in gens:
        if g.is_zero():
            continue
        exp, coef = g.leading()
        if coef_is_unit(coef):
            usable.append((exp, coef_inverse(coef), g))
    remainder = f
    budget = 64 * (len(f.terms) + 1) * (len(gens) + 1) + 256
    while not remainder.is_zero() and budget > 0:
        budget -= 1
        rexp, rcoef = remainder.leading()
        hit = False
        for gexp, ginv, g in usable:
            if all(a >= b for a, b in zip(rexp, gexp)):
                step_exp = tuple(a - b for a, b in zip(rexp, gexp))
                step = Poly(f.ring, f.nvars, {step_exp: coef_mul(rcoef, ginv)})
                remainder = remainder - step * g
                hit = True
                break
        if not hit:
            break
    return remainder


def member(f: Poly, ideal: IdealRep) -> bool:
    """Decide membership where possible; raise UndecidableMembership otherwise.

    True answers are always sound.  False answers are only produced on the
    fully decided fragment (zero ideal, monomial ideals).
    """
    chart = ideal.chart
    if f.ring != chart.ring or f.nvars != chart.nvars:
        raise ChartMismatch("membership across charts")
    for w in sorted(chart.w_coords):
        f = f.set_variable_zero(w)
    if f.is_zero():
        return True
    if not ideal.gens:
        return False
    if f in ideal.gens:
        return True
    if all(g.is_monomial() for g in ideal.gens):
        return _monomial_member(f, ideal.gens)
    for g in ideal.gens:
        if not g.is_zero():
            exp, coef = g.leading()
            if coef_is_unit(coef) and f.try_exact_division(g) is not None:
                return True
    if _reduce_by_unit_leads(f, ideal.gens).is_zero():
        return True
    raise UndecidableMembership(
        "membership undecided for %s in %s" % (chart.show(f), ideal.describe())
    )


def ideal_contains(outer: IdealRep, inner: IdealRep) -> bool:
    return all(member(g, outer) for g in inner.gens)


def mutually_generate(a: IdealRep, b: IdealRep) -> bool:
    """Both inclusions hold: the two generator lists span the same ideal."""
    return ideal_contains(a, b) and ideal_contains(b, a)
