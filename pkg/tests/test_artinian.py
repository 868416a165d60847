"""Collections over the truncated base: fibers, center checks, lifting."""

import random
from fractions import Fraction

import pytest

from desing.artinian import (
    DirectionWitness,
    adapted_coordinate_ok,
    delta_relative,
    direction_failure_witness,
    equiresolve_attempt,
    fiber_chart,
    fiber_multiideal,
    inductive_center_lift,
    inductive_collection,
    pair_order_along,
    permissible_any_v,
    transform_multiideal_A,
    v_permissible_check,
    z_coefficient,
)
from desing.charts import AlignedCenter, Chart
from desing.errors import NotNice, NotPermissible, UnsupportedLocus
from desing.ideals import ideal_order_at, make_ideal, mutually_generate
from desing.multiideal import (
    Center,
    associated_basic_object,
    make_multiideal,
    transform_multiideal,
)
from desing.poly import INF, QQ, CoefRing
from desing.resolution import resolve

EPS2 = CoefRing(2)


def line_chart(ring=EPS2):
    return Chart(cid="c", ring=ring, names=("x",), w_coords=frozenset())


def plane_chart(ring=EPS2, names=("x", "z")):
    return Chart(cid="c", ring=ring, names=names, w_coords=frozenset())


def line_witness():
    """One pair (x^3, 3) and one pair (eps x + x^3, 2) on the affine line."""
    chart = line_chart()
    return make_multiideal(
        [3, 2], [], [(chart, [[chart.parse("x^3")], [chart.parse("eps*x + x^3")]])]
    )


def plane_witness():
    """The pair ((z^2 + eps x^2, z^3 + x^3), 2) on the plane."""
    chart = plane_chart()
    gens = [chart.parse("z^2 + eps*x^2"), chart.parse("z^3 + x^3")]
    return make_multiideal([2], [], [(chart, [gens])])


def origin(chart_id="c", coords=(0,)):
    return Center(parts=(AlignedCenter(chart_id, frozenset(coords)),))


class TestFiber:
    def test_fiber_of_the_line_witness(self):
        mi = line_witness()
        fib = fiber_multiideal(mi)
        piece = fib.piece("c")
        shown = [
            [piece.chart.show(g) for g in piece.pair_gens[i]] for i in range(2)
        ]
        assert shown == [["x^3"], ["x^3"]]
        assert fib.ring == QQ
        assert fib.chart_ids() == mi.chart_ids()

    def test_field_input_is_returned_unchanged(self):
        chart = line_chart(ring=QQ)
        mi = make_multiideal([2], [], [(chart, [[chart.parse("x^2")]])])
        assert fiber_multiideal(mi) is mi

    def test_zero_fiber_pair_is_refused(self):
        chart = line_chart()
        mi = make_multiideal([1], [], [(chart, [[chart.parse("eps*x")]])])
        with pytest.raises(UnsupportedLocus):
            fiber_multiideal(mi)

    def test_fiber_chart_reduces_the_recorded_map(self):
        mi = plane_witness()
        after = transform_multiideal(mi, origin(coords=(0, 1)), "E1", 1)
        for cid in after.chart_ids():
            chart_f = fiber_chart(after.piece(cid).chart)
            assert chart_f.ring == QQ
            assert all(p.ring == QQ for p in chart_f.parent_map)


class TestLineWitnessCenters:
    def test_sum_object_collapses_to_x6(self):
        mi = line_witness()
        assoc = associated_basic_object(mi)
        assert assoc.marks == (6,)
        chart = assoc.piece("c").chart
        x6 = make_ideal(chart, [chart.parse("x^6")])
        assert mutually_generate(assoc.piece("c").pair_ideal(0), x6)

    def test_center_rejected_for_the_pairs(self):
        report = permissible_any_v(line_witness(), origin())
        assert not report.ok
        assert report.orders[1].nu == 1
        assert any("pair 2" in issue for issue in report.issues)

    def test_center_accepted_for_the_sum_object(self):
        assoc = associated_basic_object(line_witness())
        report = v_permissible_check(assoc, origin(), 1)
        assert report.ok and report.v == 1
        assert report.orders[0].nu == 6 and report.orders[0].fiber_nu == 6

    def test_center_accepted_for_the_fiber_pairs(self):
        fib = fiber_multiideal(line_witness())
        report = permissible_any_v(fib, origin())
        assert report.ok
        assert [po.nu for po in report.orders] == [3, 3]

    def test_v_index_out_of_range(self):
        with pytest.raises(ValueError):
            v_permissible_check(line_witness(), origin(), 3)

    def test_gated_transform_names_the_failing_pair(self):
        with pytest.raises(NotPermissible) as info:
            transform_multiideal_A(line_witness(), origin(), 2, "E1", 1)
        assert info.value.pair_index == 2


class TestPlaneWitness:
    def test_restricted_levels(self):
        mi = plane_witness()
        sub = inductive_collection(mi, {"c": 1})
        assert sub.marks == (2, 1)
        chart = sub.piece("c|z").chart
        level1 = make_ideal(chart, [chart.parse("eps*x^2"), chart.parse("x^3")])
        level2 = make_ideal(chart, [chart.parse("eps*x"), chart.parse("x^2")])
        assert mutually_generate(sub.piece("c|z").pair_ideal(0), level1)
        assert mutually_generate(sub.piece("c|z").pair_ideal(1), level2)

    def test_center_orders_upstairs(self):
        mi = plane_witness()
        po = pair_order_along(mi, origin(coords=(0, 1)), 0)
        assert po.nu == 2 and po.fiber_nu == 2
        assert v_permissible_check(mi, origin(coords=(0, 1)), 1).ok

    def test_direction_failure_witness(self):
        w = direction_failure_witness()
        assert isinstance(w, DirectionWitness)
        assert w.upstairs_ok and not w.restricted_ok
        assert (w.restricted[0].nu, w.restricted[0].fiber_nu) == (2, 3)
        assert (w.restricted[1].nu, w.restricted[1].fiber_nu) == (1, 2)
        assert "unequal" in w.render()

    def test_fiber_mode_restriction_has_equal_orders(self):
        fib = fiber_multiideal(plane_witness())
        sub = inductive_collection(fib, {"c": 1})
        for i in range(sub.npairs):
            po = pair_order_along(sub, origin("c|z", coords=(0, 1)), i)
            assert po.nu == po.fiber_nu


class TestDeltaRelative:
    def test_plane_witness_first_level(self):
        from desing.ideals import member

        mi = plane_witness()
        d1 = delta_relative(mi.piece("c").pair_ideal(0))
        chart = mi.piece("c").chart
        for text in ("2*z", "2*eps*x", "3*z^2", "3*x^2"):
            assert member(chart.parse(text), d1)

    def test_fiber_compatibility_of_orders(self):
        mi = plane_witness()
        ideal_A = mi.piece("c").pair_ideal(0)
        left = [g.set_fiber() for g in delta_relative(ideal_A).gens]
        fib = fiber_multiideal(mi)
        right = delta_relative(fib.piece("c").pair_ideal(0))
        chart_f = fib.piece("c").chart
        left_ideal = make_ideal(chart_f, [g for g in left if not g.is_zero()])
        grid = [Fraction(0), Fraction(1), Fraction(-1), Fraction(1, 2)]
        for a in grid:
            for b in grid:
                assert ideal_order_at(left_ideal, (a, b)) == ideal_order_at(
                    right, (a, b)
                )


class TestAdaptedAndLift:
    def nice_surface(self):
        chart = plane_chart()
        return make_multiideal(
            [2], [], [(chart, [[chart.parse("z^2 + eps*x^2 + x^3")]])]
        )

    def test_adapted_coordinate_accept_and_reject(self):
        mi = self.nice_surface()
        assert adapted_coordinate_ok(mi, 0, {"c": 1})
        assert not adapted_coordinate_ok(mi, 0, {"c": 0})

    def test_inductive_collection_requires_adapted(self):
        mi = self.nice_surface()
        with pytest.raises(NotNice):
            inductive_collection(mi, {"c": 0})

    def test_lift_on_the_nice_surface(self):
        mi = self.nice_surface()
        assert inductive_center_lift(mi, {"c": 1}, origin(coords=(0, 1)))

    def test_lift_in_field_mode(self):
        chart = plane_chart(ring=QQ)
        mi = make_multiideal([2], [], [(chart, [[chart.parse("z^2 + x^3")]])])
        assert inductive_center_lift(mi, {"c": 1}, origin(coords=(0, 1)))

    def test_lift_false_when_hypotheses_fail(self):
        chart = plane_chart()
        mi = make_multiideal([2], [], [(chart, [[chart.parse("z^2 + eps*x")]])])
        assert not inductive_center_lift(mi, {"c": 1}, origin(coords=(0, 1)))

    def test_power_series_coefficients_obey_the_ladder(self):
        mi = self.nice_surface()
        chart = mi.piece("c").chart
        g = mi.piece("c").pair_gens[0][0]
        b = mi.marks[0]
        for q in range(b):
            a_q = z_coefficient(g, 1, q)
            assert a_q.is_zero() or a_q.order_along((0,)) >= b - q


def random_nice_instance(rng):
    """A pair z^2 + c1 eps^j x^k y^l + c2 x^m y^n with the ladder holding."""
    width = rng.choice([2, 3])
    ring = CoefRing(width)
    chart = Chart(cid="c", ring=ring, names=("x", "y", "z"), w_coords=frozenset())
    c1 = rng.choice([1, -1, 2, 3])
    c2 = rng.choice([1, -1, 2, -2])
    j = rng.randint(1, width - 1)
    k = rng.randint(0, 4)
    l = rng.randint(0, 4 - min(k, 2))
    if k + l < 2:
        k = 2
    m = rng.randint(0, 5)
    n = rng.randint(0, 3)
    if m + n < 2:
        m = 3
    eps_part = "%d*x^%d*y^%d" % (c1, k, l)
    eps_poly = chart.parse(eps_part)
    for _ in range(j):
        eps_poly = eps_poly.coef_mul_by(ring.eps())
    g = chart.parse("z^2") + eps_poly + chart.parse("%d*x^%d*y^%d" % (c2, m, n))
    return make_multiideal([2], [], [(chart, [[g]])])


class TestLiftProperty:
    def test_never_falsified_over_100_seeds(self):
        rng = random.Random(20260823)
        center = origin(coords=(0, 1, 2))
        for _ in range(100):
            mi = random_nice_instance(rng)
            lifted = inductive_center_lift(mi, {"c": 2}, center)
            assert lifted
            po = pair_order_along(mi, center, 0)
            assert po.fiber_nu >= po.nu


class TestTransformCompatibility:
    def test_controlled_transform_commutes_with_fiber(self):
        chart = plane_chart()
        mi = make_multiideal(
            [2], [], [(chart, [[chart.parse("z^2 + eps*x^2 + x^3")]])]
        )
        center = origin(coords=(0, 1))
        after_A = transform_multiideal(mi, center, "E1", 1)
        after_f = transform_multiideal(fiber_multiideal(mi), center, "E1", 1)
        fa = fiber_multiideal(after_A)
        assert fa.chart_ids() == after_f.chart_ids()
        for cid in fa.chart_ids():
            assert mutually_generate(
                fa.piece(cid).pair_ideal(0), after_f.piece(cid).pair_ideal(0)
            )


class TestEquiresolve:
    def test_line_witness_blocks_on_pair_two(self):
        tr = equiresolve_attempt(line_witness())
        assert not tr.completed and not tr.equiresolution
        assert "pair 2" in tr.failure
        assert len(tr.steps) == 1 and not tr.steps[0].report.ok

    def test_sum_object_reaches_equiresolution(self):
        tr = equiresolve_attempt(associated_basic_object(line_witness()))
        assert tr.completed and tr.equiresolution
        assert tr.fiber_trace.resolved

    def test_nice_surface_reaches_equiresolution(self):
        chart = plane_chart()
        mi = make_multiideal(
            [2], [], [(chart, [[chart.parse("z^2 + eps*x^2 + x^3")]])]
        )
        tr = equiresolve_attempt(mi)
        assert tr.completed and tr.equiresolution
        assert tr.steps[0].lifted_inductively is True

    def test_eps_free_input_matches_the_field_trace(self):
        chart = plane_chart(ring=QQ, names=("x", "y"))
        mi = make_multiideal([2], [], [(chart, [[chart.parse("y^2 - x^3")]])])
        tr = equiresolve_attempt(mi)
        field = resolve(mi)
        assert tr.completed and tr.equiresolution
        assert len(tr.steps) == sum(len(s.centers) for s in field.steps)
        assert tr.fiber_trace.resolved == field.resolved
