"""Marked pairs: transforms under blow-up and the factorization ledger."""

import random
from fractions import Fraction

import pytest

from desing.charts import AlignedCenter, Chart, blowup, parent_point
from desing.errors import LedgerInconsistent, NotPermissible
from desing.ideals import gens_nu_along, parse_ideal
from desing.pairs import (
    MarkedPair,
    controlled_transform,
    next_ledger_exponent,
    proper_transform,
    sing_member,
    total_transform,
    transform_gens,
    verify_factorization,
)
from desing.poly import QQ


def plane():
    return Chart(cid="c0", ring=QQ, names=("x", "y"), w_coords=frozenset())


def cusp_pair(chart=None):
    chart = chart or plane()
    return MarkedPair(parse_ideal(chart, ["y^2 - x^3"]), 2)


def test_sing_membership():
    pair = cusp_pair()
    assert sing_member(pair, (0, 0))
    assert not sing_member(pair, (1, 1))
    assert not sing_member(pair, (4, 8))  # smooth point of the curve


def test_cusp_blowup_x_chart_transforms():
    chart = plane()
    center = AlignedCenter("c0", frozenset({0, 1}))
    res = blowup(chart, center, "E1")
    cx = res.children[0]
    pair = cusp_pair(chart)
    assert total_transform(pair, cx).ideal.gens == (cx.parse("x^2*y^2 - x^3"),)
    ctl = controlled_transform(pair, cx, 0)
    assert ctl.ideal.gens == (cx.parse("y^2 - x"),)
    prop = proper_transform(pair, cx, 0, 2)
    assert prop.ideal.gens == ctl.ideal.gens


def test_controlled_transform_requires_divisibility():
    chart = plane()
    res = blowup(chart, AlignedCenter("c0", frozenset({0, 1})), "E1")
    cx = res.children[0]
    hungry = MarkedPair(parse_ideal(chart, ["y^2 - x^3"]), 4)
    with pytest.raises(NotPermissible):
        controlled_transform(hungry, cx, 0, pair_index=0)


def test_first_ledger_exponent_of_monomial_pair():
    chart = plane()
    gens = parse_ideal(chart, ["x^2*y^4"]).gens
    c1 = gens_nu_along(gens, frozenset(), {0, 1})
    assert c1 == 6
    a1 = next_ledger_exponent(2, c1, (), ())
    assert a1 == 4


def test_first_ledger_exponent_of_cusp_is_zero():
    chart = plane()
    gens = parse_ideal(chart, ["y^2 - x^3"]).gens
    c1 = gens_nu_along(gens, frozenset(), {0, 1})
    assert c1 == 2
    assert next_ledger_exponent(2, c1, (), ()) == 0


def test_ledger_identity_two_steps():
    # pair ((x^2 y^4), 2); blow the origin twice and check the identity both times
    chart = plane()
    pair = MarkedPair(parse_ideal(chart, ["x^2*y^4"]), 2)
    center = AlignedCenter("c0", frozenset({0, 1}))
    res = blowup(chart, center, "E1")
    cx = next(c for c in res.children if c.cid == "c0.x")

    c1 = gens_nu_along(pair.ideal.gens, frozenset(), center.coords)
    a1 = next_ledger_exponent(2, c1, (), ())
    controlled_1 = transform_gens(pair.ideal.gens, cx, 0, 2)
    proper_1 = transform_gens(pair.ideal.gens, cx, 0, c1)
    verify_factorization(cx, controlled_1, proper_1, ("E1",), (a1,))
    assert controlled_1 == (cx.parse("x^4*y^4"),)
    assert proper_1 == (cx.parse("y^4"),)

    # second blow-up at the origin of the x-chart; follow the y-subchart
    center2 = AlignedCenter("c0.x", frozenset({0, 1}))
    res2 = blowup(cx, center2, "E2")
    cyy = next(c for c in res2.children if c.cid == "c0.x.y")
    c2 = gens_nu_along(proper_1, frozenset(), center2.coords)
    assert c2 == 4
    through = [cx.hyp_coord("E1") in center2.coords]
    a2 = next_ledger_exponent(2, c2, (a1,), through)
    assert a2 == 6  # weighted by the prior exponent, not just counted
    controlled_2 = transform_gens(controlled_1, cyy, 1, 2)
    proper_2 = transform_gens(proper_1, cyy, 1, c2)
    verify_factorization(cyy, controlled_2, proper_2, ("E1", "E2"), (a1, a2))
    assert controlled_2 == (cyy.parse("x^4*y^6"),)
    assert proper_2 == (cyy.parse("1"),)


def test_verify_factorization_catches_tampering():
    chart = plane()
    pair = MarkedPair(parse_ideal(chart, ["x^2*y^4"]), 2)
    res = blowup(chart, AlignedCenter("c0", frozenset({0, 1})), "E1")
    cx = res.children[0]
    controlled = transform_gens(pair.ideal.gens, cx, 0, 2)
    proper = transform_gens(pair.ideal.gens, cx, 0, 6)
    with pytest.raises(LedgerInconsistent):
        verify_factorization(cx, controlled, proper, ("E1",), (3,))


def test_negative_exponent_rejected():
    with pytest.raises(NotPermissible):
        next_ledger_exponent(3, 2, (), ())


def test_singular_points_upstairs_sit_over_singular_points():
    chart = plane()
    pair = cusp_pair(chart)
    center = AlignedCenter("c0", frozenset({0, 1}))
    res = blowup(chart, center, "E1")
    rng = random.Random(11)
    for child in res.children:
        exc = child.hyp_coord("E1")
        moved = controlled_transform(pair, child, exc)
        for _ in range(40):
            pt = (Fraction(rng.randint(-6, 6), 2), Fraction(rng.randint(-6, 6), 3))
            if sing_member(moved, pt):
                below = parent_point(child, pt)
                assert sing_member(pair, below)
