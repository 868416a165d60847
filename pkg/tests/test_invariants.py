"""Resolution state: ratio invariants, ledger propagation, lattice maxima."""

from fractions import Fraction

import pytest

from desing.charts import AlignedCenter, Chart
from desing.errors import LedgerInconsistent, UnsupportedLocus
from desing.invariants import (
    RatioCount,
    advance,
    anchor_index,
    apply_chart_change,
    attaining_pair_index,
    initial_state,
    lattice_max_ratio,
    lattice_max_refined,
    minimal_attaining,
    old_divisor_ids,
    pair_ratio_at,
    point_is_singular,
    ratio_at,
    refined_at,
    sing_is_empty,
    singular_candidates,
    young_divisor_ids,
)
from desing.multiideal import Center, make_multiideal
from desing.poly import QQ, format_poly, parse_poly

X, Y = 0, 1


def plane(cid="c0"):
    return Chart(
        cid=cid,
        ring=QQ,
        names=("x", "y"),
        w_coords=frozenset(),
        hyps=(),
        parent=None,
        parent_map=(),
    )


def pp(chart, text):
    return parse_poly(text, chart.ring, chart.names)


def build(marks, gen_texts, cid="c0"):
    chart = plane(cid)
    return make_multiideal(
        marks, [], [(chart, [[pp(chart, t)] for t in gen_texts])]
    )


def origin_center(cid="c0"):
    return Center((AlignedCenter(cid, frozenset({X, Y})),))


def fp(*values):
    return tuple(Fraction(v) for v in values)


def shown(piece, i):
    return tuple(format_poly(g, piece.chart.names) for g in piece.proper[i])


class TestRatioExample:
    """Two pairs (x^2 y^4, 2) and (x^4 y, 3); the locus is the x-axis."""

    @pytest.fixture()
    def state(self):
        return initial_state(build([2, 3], ["x^2 * y^4", "x^4 * y"]))

    def test_locus_membership(self, state):
        for t in (0, 1, 2, -1):
            assert point_is_singular(state, "c0", fp(0, t))
        assert not point_is_singular(state, "c0", fp(1, 0))

    def test_pair_ratios_at_origin(self, state):
        assert pair_ratio_at(state, "c0", fp(0, 0), 0) == 3
        assert pair_ratio_at(state, "c0", fp(0, 0), 1) == Fraction(5, 3)
        assert ratio_at(state, "c0", fp(0, 0)) == Fraction(5, 3)
        assert attaining_pair_index(state, "c0", fp(0, 0)) == 2

    def test_pair_ratios_off_origin(self, state):
        for t in (1, 2, -1):
            assert pair_ratio_at(state, "c0", fp(0, t), 0) == 1
            assert pair_ratio_at(state, "c0", fp(0, t), 1) == Fraction(4, 3)
            assert ratio_at(state, "c0", fp(0, t)) == 1
            assert attaining_pair_index(state, "c0", fp(0, t)) == 1

    def test_lattice_maximum_and_locus(self, state):
        assert lattice_max_ratio(state) == Fraction(5, 3)
        best, attaining = lattice_max_refined(state)
        assert best == RatioCount(Fraction(5, 3), 0)
        centers = minimal_attaining(attaining)
        assert len(centers) == 1
        assert centers[0].coords == frozenset({X, Y})

    def test_off_locus_point_rejected(self, state):
        with pytest.raises(ValueError):
            ratio_at(state, "c0", fp(1, 0))


class TestCuspFlow:
    def test_one_step_to_empty_locus(self):
        state = initial_state(build([2], ["y^2 - x^3"]))
        assert state.history == (Fraction(1),)
        assert not sing_is_empty(state)
        state = advance(state, origin_center(), "E1")
        assert state.exc_exps == ((0,),)
        assert state.history == (Fraction(1), None)
        assert sing_is_empty(state)

    def test_factored_layer_in_both_charts(self):
        state = initial_state(build([2], ["y^2 - x^3"]))
        state = advance(state, origin_center(), "E1")
        _, cx = state.piece_by_id("c0.x")
        assert shown(cx, 0) == ("y^2 - x",)
        assert tuple(
            format_poly(g, cx.chart.names) for g in cx.controlled[0]
        ) == ("y^2 - x",)


class TestWeightedLedger:
    def test_two_blowups_accumulate_weighted_exponents(self):
        state = initial_state(build([2], ["x^2 * y^4"]))
        assert lattice_max_ratio(state) == 3
        state = advance(state, origin_center(), "E1")
        assert state.exc_exps == ((4,),)
        state = advance(state, origin_center("c0.x"), "E2")
        assert state.exc_exps == ((4, 6),)
        _, piece = state.piece_by_id("c0.x.y")
        assert shown(piece, 0) == ("1",)
        assert tuple(
            format_poly(g, piece.chart.names) for g in piece.controlled[0]
        ) == ("x^4*y^6",)

    def test_exceptional_absent_from_its_own_center_chart(self):
        state = initial_state(build([2], ["x^2 * y^4"]))
        state = advance(state, origin_center(), "E1")
        state = advance(state, origin_center("c0.x"), "E2")
        _, piece = state.piece_by_id("c0.x.x")
        hids = [hid for hid, _ in piece.chart.hyps]
        assert hids == ["E2"]
        assert shown(piece, 0) == ("y^4",)


class TestAnchorAndDrop:
    def test_drop_resets_old_divisors(self):
        state = initial_state(build([2], ["x^2 * y^2 + x^5"]))
        assert state.history == (Fraction(2),)
        assert anchor_index(state) == 0
        assert old_divisor_ids(state) == ()
        state = advance(state, origin_center(), "E1")
        assert state.history == (Fraction(2), Fraction(1))
        assert anchor_index(state) == 1
        assert old_divisor_ids(state) == ("E1",)
        assert young_divisor_ids(state) == ()
        assert refined_at(state, "c0.x", fp(0, 0)) == RatioCount(Fraction(1, 2), 1)

    def test_refined_maximum_counts_old_divisors(self):
        state = initial_state(build([2], ["x^2 * y^2 + x^5"]))
        state = advance(state, origin_center(), "E1")
        best, attaining = lattice_max_refined(state)
        assert best == RatioCount(Fraction(1), 1)
        centers = minimal_attaining(attaining)
        assert len(centers) == 1
        chart = state.pieces[centers[0].piece_index].chart
        assert chart.cid == "c0.y"
        assert centers[0].coords == frozenset({X, Y})


class TestGuards:
    def test_zero_pair_rejected(self):
        chart = plane()
        mi = make_multiideal([2], [], [(chart, [[pp(chart, "0")]])])
        with pytest.raises(UnsupportedLocus):
            initial_state(mi)

    def test_singular_sample_off_lattice_detected(self, monkeypatch):
        from desing import invariants

        # the locus is the line x + y = 1/7, which no sample with small
        # denominator can hit by accident
        state = initial_state(
            build([2], ["x^2 + 2 * x * y + y^2 - 2/7 * x - 2/7 * y + 1/49"])
        )

        def fake_samples(chart, seed=0, count=20):
            return [fp(Fraction(1, 14), Fraction(1, 14))]

        monkeypatch.setattr(invariants, "chart_sample_points", fake_samples)
        with pytest.raises(UnsupportedLocus):
            sing_is_empty(state)

    def test_mismatched_part_multiplicities_rejected(self):
        chart_a = plane("cA")
        chart_b = plane("cB")
        mi = make_multiideal(
            [2],
            [],
            [
                (chart_a, [[pp(chart_a, "x^2")]]),
                (chart_b, [[pp(chart_b, "x^3")]]),
            ],
        )
        state = initial_state(mi)
        center = Center(
            (
                AlignedCenter("cA", frozenset({X})),
                AlignedCenter("cB", frozenset({X})),
            )
        )
        with pytest.raises(UnsupportedLocus):
            advance(state, center, "E1")


class TestChartChange:
    def test_triangular_change_preserves_invariants(self):
        state = initial_state(build([2], ["y^2 - x^3"]))
        chart = state.pieces[0].chart
        equation = pp(chart, "2 * y + 3 * x^2")
        changed = apply_chart_change(state, "c0", Y, equation)
        assert changed.pieces[0].chart.cid.startswith("c0~")
        assert changed.history == state.history
        assert changed.exc_exps == state.exc_exps
        assert point_is_singular(changed, changed.pieces[0].chart.cid, fp(0, 0))
        assert ratio_at(changed, changed.pieces[0].chart.cid, fp(0, 0)) == 1
        assert lattice_max_ratio(changed) == 1
