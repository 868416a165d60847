"""Exact polynomial layer: arithmetic, orders, substitution, text round trips."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from desing.errors import ChartMismatch, ParseError, RingMismatch
from desing.poly import (
    INF,
    CoefRing,
    Poly,
    QQ,
    coef_inverse,
    coef_mul,
    format_poly,
    parse_poly,
)

DUAL = CoefRing(2)
XY = ("x", "y")
XYZ = ("x", "y", "z")


def p(text, ring=QQ, names=XY):
    return parse_poly(text, ring, names)


# ---------------------------------------------------------------------------
# arithmetic
# ---------------------------------------------------------------------------


def test_product_truncates_nilpotent_powers():
    f = p("eps*x + x^3", ring=DUAL, names=("x",))
    cube = f * f * f
    assert cube == p("3*eps*x^7 + x^9", ring=DUAL, names=("x",))


def test_power_matches_repeated_product():
    f = p("x + 2*y")
    assert f**3 == f * f * f


def test_add_collects_and_cancels():
    assert p("x + y") + p("x - y") == p("2*x")
    assert (p("x^2") - p("x^2")).is_zero()


def test_ring_mismatch_rejected():
    with pytest.raises(RingMismatch):
        p("x") + p("x", ring=DUAL)


def test_variable_count_mismatch_rejected():
    with pytest.raises(ChartMismatch):
        p("x") * p("x", names=XYZ)


# ---------------------------------------------------------------------------
# calculus and orders
# ---------------------------------------------------------------------------


def test_partial_derivative():
    f = p("x^2*y^4")
    assert f.partial(0) == p("2*x*y^4")
    assert f.partial(1) == p("4*x^2*y^3")


def test_translate_matches_hand_expansion():
    f = p("y^2 - x^3")
    moved = f.translate((1, 1))
    assert moved == p("y^2 + 2*y - x^3 - 3*x^2 - 3*x")


def test_order_at_point_values():
    f = p("x^2*y^4")
    assert f.order_at_point((0, 0)) == 6
    assert f.order_at_point((0, 1)) == 2
    g = p("eps*x + x^3", ring=DUAL, names=("x",))
    assert g.order_at_point((0,)) == 1


def test_order_of_zero_is_infinite():
    assert Poly.zero(QQ, 2).order_at_point((0, 0)) == INF
    assert Poly.zero(QQ, 2).order_along((0,)) == INF


def test_order_along_coordinate_subvarieties():
    g = p("eps*x + x^3", ring=DUAL, names=("x",))
    assert g.order_along((0,)) == 1
    h = p("z^2 + eps*x^2", ring=DUAL, names=("x", "z"))
    assert h.order_along((1,)) == 0
    assert h.order_along((0, 1)) == 2


def test_order_at_least_agrees_with_order():
    f = p("y^2 - x^3")
    for pt in [(0, 0), (1, 1), (4, 8), (Fraction(1, 2), 3)]:
        k = f.order_at_point(pt)
        assert f.order_at_least(pt, k)
        assert not f.order_at_least(pt, k + 1)


def test_substitute_blowup_chart():
    f = p("y^2 - x^3")
    x = Poly.variable(QQ, 2, 0)
    y = Poly.variable(QQ, 2, 1)
    assert f.substitute((x, x * y)) == p("x^2*y^2 - x^3")


def test_set_fiber_drops_nilpotent_terms():
    g = p("eps*x + x^3", ring=DUAL, names=("x",))
    assert g.set_fiber() == p("x^3", names=("x",))
    assert g.set_fiber().ring == QQ


def test_coordinate_power_division():
    f = p("x^2*y^2 - x^3")
    assert f.divide_coord_power(0, 2) == p("y^2 - x")
    with pytest.raises(ValueError):
        f.divide_coord_power(1, 1)


def test_exact_division_by_unit_lead():
    f = p("x^2*y^2 - x^3")
    q = f.try_exact_division(p("y^2 - x"))
    assert q == p("x^2")
    assert f.try_exact_division(p("y^3 - x")) is None


def test_coef_inverse_in_dual_numbers():
    c = (Fraction(2), Fraction(3))
    inv = coef_inverse(c)
    assert coef_mul(c, inv) == (Fraction(1), Fraction(0))
    with pytest.raises(ZeroDivisionError):
        coef_inverse((Fraction(0), Fraction(1)))


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "text",
    [
        "0",
        "1",
        "-1",
        "x",
        "x^2*y^4",
        "y^2 - x^3",
        "3/2*x*y - 7",
        "x^3 + 3*eps*x^7",
    ],
)
def test_parse_format_round_trip(text):
    ring = DUAL if "eps" in text else QQ
    f = parse_poly(text, ring, XY)
    assert parse_poly(format_poly(f, XY), ring, XY) == f


def test_format_canonical_examples():
    assert format_poly(p("y^2 - x^3"), XY) == "-x^3 + y^2"
    g = parse_poly("x^9 + 3*eps*x^7", DUAL, ("x",))
    assert format_poly(g, ("x",)) == "x^9 + 3*eps*x^7"


@pytest.mark.parametrize("bad", ["x +", "* x", "q", "eps", "x ^", "x y"])
def test_parse_rejects_malformed(bad):
    with pytest.raises(ParseError):
        parse_poly(bad, QQ, XY)


def test_eps_over_field_rejected():
    with pytest.raises(ParseError):
        parse_poly("eps*x", QQ, XY)


def test_eps_truncation_in_parser():
    assert parse_poly("eps^2*x", DUAL, XY).is_zero()


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------


def small_polys(ring=QQ, nvars=2, max_terms=4, max_exp=3):
    fracs = st.fractions(min_value=-5, max_value=5, max_denominator=3)
    exps = st.tuples(*[st.integers(min_value=0, max_value=max_exp)] * nvars)
    coef_tuple = st.tuples(*[fracs] * ring.width)
    term = st.tuples(exps, coef_tuple)
    return st.lists(term, min_size=0, max_size=max_terms).map(
        lambda items: Poly.from_terms(ring, nvars, items)
    )


@settings(max_examples=60, deadline=None)
@given(small_polys(), small_polys())
def test_order_at_origin_is_additive_over_field(f, g):
    prod = f * g
    assert prod.min_degree() == f.min_degree() + g.min_degree()


@settings(max_examples=60, deadline=None)
@given(small_polys(ring=DUAL), small_polys(ring=DUAL))
def test_order_superadditive_over_artinian(f, g):
    prod = f * g
    assert prod.min_degree() >= f.min_degree() + g.min_degree()


@settings(max_examples=40, deadline=None)
@given(small_polys())
def test_translate_round_trip(f):
    pt = (Fraction(2), Fraction(-1, 2))
    back = tuple(-q for q in pt)
    assert f.translate(pt).translate(back) == f


@settings(max_examples=40, deadline=None)
@given(small_polys(nvars=3))
def test_partials_commute(f):
    assert f.partial(0).partial(2) == f.partial(2).partial(0)


@settings(max_examples=40, deadline=None)
@given(small_polys(ring=DUAL), small_polys(ring=DUAL))
def test_set_fiber_is_a_ring_map(f, g):
    assert (f * g).set_fiber() == f.set_fiber() * g.set_fiber()
    assert (f + g).set_fiber() == f.set_fiber() + g.set_fiber()


@settings(max_examples=40, deadline=None)
@given(small_polys())
def test_translate_matches_pointwise_evaluation(f):
    pt = (Fraction(1, 3), Fraction(-2))
    probe = (Fraction(1), Fraction(1, 2))
    shifted = f.translate(pt)
    direct = f.evaluate(tuple(a + b for a, b in zip(probe, pt)))
    assert shifted.evaluate(probe) == direct
