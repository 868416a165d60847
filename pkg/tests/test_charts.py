"""Chart bookkeeping: blow-ups, strict transforms, coordinate changes."""

import random
from fractions import Fraction

import pytest

from desing.charts import (
    AlignedCenter,
    Chart,
    blowup,
    center_has_normal_crossings,
    center_transversal_to,
    child_point,
    divisor_has_normal_crossings,
    extend_chart,
    parent_point,
    pullback,
    restrict_chart,
    triangular_change,
    validate_center,
)
from desing.errors import ChartMismatch, UnsupportedLocus
from desing.poly import QQ, CoefRing


def plane(hyps=(), w=()):
    return Chart(cid="c0", ring=QQ, names=("x", "y"), w_coords=frozenset(w), hyps=tuple(hyps))


def space(hyps=(), w=()):
    return Chart(cid="c0", ring=QQ, names=("x", "y", "z"), w_coords=frozenset(w), hyps=tuple(hyps))


def test_blowup_origin_of_plane_has_two_charts():
    res = blowup(plane(), AlignedCenter("c0", frozenset({0, 1})), "E1")
    assert [c.cid for c in res.children] == ["c0.x", "c0.y"]
    cx = res.children[0]
    assert cx.hyp_coord("E1") == 0
    f = plane().parse("y^2 - x^3")
    assert pullback(cx, f) == cx.parse("x^2*y^2 - x^3")
    cy = res.children[1]
    assert cy.hyp_coord("E1") == 1
    assert pullback(cy, f) == cy.parse("y^2 - x^3*y^3")


def test_codimension_one_center_gives_identity_chart():
    res = blowup(plane(), AlignedCenter("c0", frozenset({0})), "E1")
    assert len(res.children) == 1
    child = res.children[0]
    assert child.hyp_coord("E1") == 0
    f = plane().parse("x^2*y^4")
    assert pullback(child, f) == child.parse("x^2*y^4")


def test_strict_transform_rules():
    chart = space(hyps=(("H1", 0), ("H2", 2)))
    res = blowup(chart, AlignedCenter("c0", frozenset({0, 1})), "E1")
    by_id = {c.cid: c for c in res.children}
    cx, cy = by_id["c0.x"], by_id["c0.y"]
    # H1 sits at a center coordinate: gone from its own chart, kept elsewhere
    assert cx.hyp_coord("H1") is None
    assert cy.hyp_coord("H1") == 0
    # H2 avoids the center: unchanged everywhere
    assert cx.hyp_coord("H2") == 2
    assert cy.hyp_coord("H2") == 2
    assert cx.hyp_coord("E1") == 0
    assert cy.hyp_coord("E1") == 1


def test_exceptional_is_aligned_in_every_chart():
    chart = space()
    res = blowup(chart, AlignedCenter("c0", frozenset({0, 1, 2})), "E1")
    assert len(res.children) == 3
    for child in res.children:
        assert child.hyp_coord("E1") is not None
        assert divisor_has_normal_crossings(child)


def test_point_round_trip_through_blowup():
    chart = plane()
    center = AlignedCenter("c0", frozenset({0, 1}))
    res = blowup(chart, center, "E1")
    rng = random.Random(7)
    for _ in range(25):
        pt = (Fraction(rng.randint(1, 9), rng.randint(1, 4)), Fraction(rng.randint(-9, 9), 3))
        for child in res.children:
            moved = child_point(chart, center, child, "E1", pt)
            if moved is not None:
                assert parent_point(child, moved) == pt


def test_point_on_center_has_no_chart_image():
    chart = plane()
    center = AlignedCenter("c0", frozenset({0, 1}))
    res = blowup(chart, center, "E1")
    for child in res.children:
        assert child_point(chart, center, child, "E1", (0, 0)) is None


def test_center_validation():
    with pytest.raises(UnsupportedLocus):
        validate_center(plane(w=(1,)), AlignedCenter("c0", frozenset({0})))
    with pytest.raises(UnsupportedLocus):
        validate_center(plane(w=(1,)), AlignedCenter("c0", frozenset({1})))
    with pytest.raises(ChartMismatch):
        validate_center(plane(), AlignedCenter("other", frozenset({0})))


def test_crossings_and_transversality():
    chart = space(hyps=(("H1", 0), ("H2", 2)))
    center = AlignedCenter("c0", frozenset({0, 1}))
    assert center_has_normal_crossings(chart, center)
    assert not center_transversal_to(chart, center, "H1")
    assert center_transversal_to(chart, center, "H2")
    assert center_transversal_to(chart, center, "H9")  # absent hypersurface


def test_triangular_change_moves_equation_to_coordinate():
    chart = plane()
    eq = chart.parse("y + x^2")
    moved = triangular_change(chart, 1, eq)
    assert moved.cid == "c0~y"
    assert pullback(moved, eq) == moved.parse("y")
    f = chart.parse("y^2 - x^3")
    assert pullback(moved, f) == moved.parse("y^2 - 2*x^2*y + x^4 - x^3")


def test_triangular_change_with_unit_scale():
    chart = plane()
    moved = triangular_change(chart, 1, chart.parse("2*y + 3*x^2"))
    assert pullback(moved, chart.parse("2*y + 3*x^2")) == moved.parse("y")


@pytest.mark.parametrize(
    "eq",
    ["y + 1", "x^2", "y^2 + x", "y + x*y", "y*x"],
)
def test_triangular_change_rejects_bad_equations(eq):
    chart = plane()
    with pytest.raises(ChartMismatch):
        triangular_change(chart, 1, chart.parse(eq))


def test_triangular_change_protects_hypersurface_coordinates():
    chart = plane(hyps=(("H1", 1),))
    with pytest.raises(ChartMismatch):
        triangular_change(chart, 1, chart.parse("y + x^2"))


def test_restrict_chart_grows_w():
    chart = space()
    sub = restrict_chart(chart, 2)
    assert sub.w_coords == frozenset({2})
    assert sub.dim_w == 2
    with pytest.raises(ChartMismatch):
        restrict_chart(sub, 2)


def test_restrict_chart_drops_hypersurface_at_the_cut():
    # the divisor at the restricted coordinate coincides with the new scheme
    sub = restrict_chart(space(hyps=(("H1", 2), ("H2", 0))), 2)
    assert sub.hyp_coord("H1") is None
    assert sub.hyp_coord("H2") == 0


def test_extend_chart_appends_coordinates():
    chart = plane(hyps=(("H1", 0),))
    big = extend_chart(chart, ("u",))
    assert big.names == ("x", "y", "u")
    assert big.hyp_coord("H1") == 0
    f = chart.parse("y^2 - x^3")
    assert pullback(big, f) == big.parse("y^2 - x^3")
    with pytest.raises(ChartMismatch):
        extend_chart(chart, ("x",))


def test_hypersurface_table_validation():
    with pytest.raises(ChartMismatch):
        Chart(cid="c0", ring=QQ, names=("x", "y"), w_coords=frozenset(), hyps=(("A", 0), ("B", 0)))
    with pytest.raises(ChartMismatch):
        Chart(cid="c0", ring=QQ, names=("x", "y"), w_coords=frozenset({0}), hyps=(("A", 0),))


def test_blowup_inside_w_keeps_w_coordinates():
    # W is the plane z = 0 inside 3-space; blow up the x-axis of W
    chart = space(w=(2,))
    res = blowup(chart, AlignedCenter("c0", frozenset({1, 2})), "E1")
    assert [c.cid for c in res.children] == ["c0.y"]
    child = res.children[0]
    assert child.w_coords == frozenset({2})
    assert child.hyp_coord("E1") == 1
    # the center coordinate z that stays in W maps as z -> y*z
    f = chart.parse("z")
    assert pullback(child, f) == child.parse("y*z")
