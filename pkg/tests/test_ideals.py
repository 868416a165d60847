"""Ideal layer: orders, derivative closures, restriction, membership."""

import itertools
import random
from fractions import Fraction

import pytest

from desing.charts import Chart, triangular_change, pullback
from desing.errors import UndecidableMembership
from desing.ideals import (
    IdealRep,
    delta,
    diff_closure,
    ideal_contains,
    ideal_order_at,
    ideal_order_at_least,
    ideal_power,
    ideal_product,
    ideal_sum,
    make_ideal,
    member,
    mutually_generate,
    nu_along,
    parse_ideal,
    restrict_to,
)
from desing.poly import INF, QQ, CoefRing

DUAL = CoefRing(2)


def plane():
    return Chart(cid="c0", ring=QQ, names=("x", "y"), w_coords=frozenset())


def dual_line_pair():
    return Chart(cid="c0", ring=DUAL, names=("x", "z"), w_coords=frozenset())


def test_make_ideal_reduces_to_w_and_prunes():
    chart = Chart(cid="c0", ring=QQ, names=("x", "y", "z"), w_coords=frozenset({2}))
    ideal = parse_ideal(chart, ["x^2 + z*y", "z^3", "0"])
    assert [chart.show(g) for g in ideal.gens] == ["x^2"]


def test_order_at_point_is_minimum_over_generators():
    ideal = parse_ideal(plane(), ["x^2*y^4", "x^4*y"])
    assert ideal_order_at(ideal, (0, 0)) == 5
    assert ideal_order_at(ideal, (0, 1)) == 2
    assert ideal_order_at_least(ideal, (0, 0), 5)
    assert not ideal_order_at_least(ideal, (0, 0), 6)


def test_zero_ideal_has_infinite_order():
    ideal = make_ideal(plane(), [])
    assert ideal.is_zero()
    assert ideal_order_at(ideal, (1, 2)) == INF


def test_nu_along_examples():
    ideal = parse_ideal(plane(), ["x^2*y^4", "x^4*y"])
    assert nu_along(ideal, {0}) == 2
    assert nu_along(ideal, {1}) == 1
    assert nu_along(ideal, {0, 1}) == 5


def test_diff_closure_zero_steps_is_identity():
    ideal = parse_ideal(plane(), ["y^2 - x^3"])
    assert diff_closure(ideal, 0) is ideal


def test_delta_of_cusp():
    ideal = parse_ideal(plane(), ["y^2 - x^3"])
    closed = delta(ideal)
    shown = {plane().show(g) for g in closed.gens}
    assert shown == {"-x^3 + y^2", "-3*x^2", "2*y"}


def test_diff_closure_matches_iterated_delta():
    ideal = parse_ideal(plane(), ["x^2*y^4"])
    twice = delta(delta(ideal))
    at_once = diff_closure(ideal, 2)
    assert mutually_generate(twice, at_once)


def test_singular_locus_via_derivative_closure():
    # order >= b at a point is the same as landing on V of the (b-1)-closure
    chart = plane()
    ideal = parse_ideal(chart, ["x^2*y^2"])
    b = 3
    closed = diff_closure(ideal, b - 1)
    rng = random.Random(3)
    pts = [(0, 0), (0, 2), (1, 0)] + [
        (Fraction(rng.randint(-4, 4)), Fraction(rng.randint(-4, 4))) for _ in range(30)
    ]
    for pt in pts:
        on_v = all(g.order_at_least(pt, 1) for g in closed.gens)
        assert on_v == ideal_order_at_least(ideal, pt, b)


def test_restrict_to_substitutes_and_grows_w():
    chart = dual_line_pair()
    ideal = parse_ideal(chart, ["z^2 + eps*x^2", "z^3 + x^3"])
    cut = restrict_to(ideal, 1)
    assert cut.chart.w_coords == frozenset({1})
    shown = [cut.chart.show(g) for g in cut.gens]
    assert shown == ["eps*x^2", "x^3"]


def test_order_stable_under_triangular_change():
    chart = plane()
    moved = triangular_change(chart, 1, chart.parse("y + x^2"))
    ideal = parse_ideal(chart, ["y^2 - x^3", "x*y"])
    pulled = make_ideal(moved, [pullback(moved, g) for g in ideal.gens])
    # the origin is fixed by a triangular change
    assert ideal_order_at(ideal, (0, 0)) == ideal_order_at(pulled, (0, 0))


def test_sum_product_power():
    chart = plane()
    a = parse_ideal(chart, ["x"])
    b = parse_ideal(chart, ["y"])
    assert {chart.show(g) for g in ideal_sum(a, b).gens} == {"x", "y"}
    assert [chart.show(g) for g in ideal_product(a, b).gens] == ["x*y"]
    s = ideal_sum(a, b)
    sq = ideal_power(s, 2)
    assert {chart.show(g) for g in sq.gens} == {"x^2", "x*y", "y^2"}


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------


def test_monomial_membership_over_field():
    chart = plane()
    ideal = parse_ideal(chart, ["x^2", "y^3"])
    assert member(chart.parse("x^2*y"), ideal)
    assert member(chart.parse("7*y^3 - x^2*y^5"), ideal)
    assert not member(chart.parse("x*y^2"), ideal)


def test_monomial_membership_tracks_eps_depth():
    chart = Chart(cid="c0", ring=DUAL, names=("x",), w_coords=frozenset())
    assert member(chart.parse("eps*x^2"), parse_ideal(chart, ["eps*x"]))
    assert not member(chart.parse("x^2"), parse_ideal(chart, ["eps*x"]))
    assert not member(chart.parse("eps*x"), parse_ideal(chart, ["x^2"]))
    assert member(chart.parse("3*eps*x^7 + x^9"), parse_ideal(chart, ["x^6"]))


def test_syntactic_and_division_membership():
    chart = plane()
    ideal = parse_ideal(chart, ["x^6", "3*x^7 + x^9"])
    assert member(chart.parse("3*x^7 + x^9"), ideal)
    assert member(chart.parse("x^2*y^2 - x^3"), parse_ideal(chart, ["y^2 - x"]))


def test_membership_outside_fragment_raises():
    chart = plane()
    ideal = parse_ideal(chart, ["y^2 - x^3", "x - y"])
    with pytest.raises(UndecidableMembership):
        member(chart.parse("x"), ideal)


def test_zero_always_member_and_zero_ideal_contains_only_zero():
    chart = plane()
    ideal = parse_ideal(chart, ["y^2 - x^3"])
    assert member(chart.parse("0"), ideal)
    zero = make_ideal(chart, [])
    assert not member(chart.parse("x"), zero)


def test_mutual_generation():
    chart = plane()
    a = parse_ideal(chart, ["x^2", "x*y"])
    b = parse_ideal(chart, ["x*y", "x^2"])
    assert mutually_generate(a, b)
    c = parse_ideal(chart, ["x^2"])
    assert ideal_contains(a, c)
    assert not ideal_contains(c, parse_ideal(chart, ["x*y"]))
