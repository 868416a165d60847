"""Charts, tracked hypersurfaces, and blow-ups in aligned coordinates.

The whole engine works inside one restricted geometric class: every tracked
hypersurface, the underlying smooth scheme W, and every blow-up center is the
zero set of a subset of the chart coordinates, possibly after a recorded
triangular coordinate change.  That keeps blow-ups, strict transforms, and
crossing checks exact coordinate bookkeeping.

Conventions:

* A chart is an affine coordinate patch.  ``w_coords`` lists the coordinate
  indices whose common zero set is the underlying scheme W; polynomials that
  "live on W" simply never use those variables.
* The hypersurface table maps a tracked hypersurface id to the coordinate
  index cutting it out in this chart.  A hypersurface missing from the table
  does not meet the chart.
* ``parent_map`` expresses each parent coordinate in this chart's
  coordinates, so pulling functions back along the chart map is a plain
  substitution.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Sequence, Tuple

from .errors import ChartMismatch, UnsupportedLocus
from .poly import CoefRing, Poly, coef_is_unit, coef_inverse


@dataclass(frozen=True)
class HypRecord:
    """A tracked hypersurface: input data or exceptional divisor of a step."""

    hid: str
    birth: int  # 0 for input hypersurfaces, s for the divisor created entering step s

    @property
    def is_exceptional(self) -> bool:
        return self.birth > 0


@dataclass(frozen=True)
class Chart:
    cid: str
    ring: CoefRing
    names: Tuple[str, ...]
    w_coords: frozenset
    hyps: Tuple[Tuple[str, int], ...] = ()
    parent: Optional[str] = None
    parent_map: Optional[Tuple[Poly, ...]] = None

    def __post_init__(self):
        n = len(self.names)
        seen = {}
        for hid, idx in self.hyps:
            if not 0 <= idx < n:
                raise ChartMismatch("hypersurface %s at bad coordinate %d" % (hid, idx))
            if idx in seen:
                raise ChartMismatch(
                    "hypersurfaces %s and %s share coordinate %d" % (seen[idx], hid, idx)
                )
            if idx in self.w_coords:
                raise ChartMismatch("hypersurface %s sits on a W coordinate" % hid)
            seen[idx] = hid
        for idx in self.w_coords:
            if not 0 <= idx < n:
                raise ChartMismatch("W coordinate %d out of range" % idx)

    # -- views ----------------------------------------------------------------

    @property
    def nvars(self) -> int:
        return len(self.names)

    @property
    def dim_w(self) -> int:
        return self.nvars - len(self.w_coords)

    def active_coords(self) -> Tuple[int, ...]:
        """Coordinates of W itself, in index order."""
        return tuple(i for i in range(self.nvars) if i not in self.w_coords)

    def hyp_table(self) -> Dict[str, int]:
        return dict(self.hyps)

    def hyp_coord(self, hid: str) -> Optional[int]:
        for h, idx in self.hyps:
            if h == hid:
                return idx
        return None

    def coord_hyp(self, idx: int) -> Optional[str]:
        for h, i in self.hyps:
            if i == idx:
                return h
        return None

    def origin(self) -> Tuple[Fraction, ...]:
        return (Fraction(0),) * self.nvars

    def check_point(self, point: Sequence[Fraction]) -> Tuple[Fraction, ...]:
        """Validate a point of W in this chart."""
        if len(point) != self.nvars:
            raise ChartMismatch("point length %d, chart has %d coordinates" % (len(point), self.nvars))
        pt = tuple(Fraction(p) for p in point)
        for i in self.w_coords:
            if pt[i] != 0:
                raise ChartMismatch("point leaves W: coordinate %s nonzero" % self.names[i])
        return pt

    def var(self, index: int) -> Poly:
        return Poly.variable(self.ring, self.nvars, index)

    def parse(self, text: str) -> Poly:
        from .poly import parse_poly

        return parse_poly(text, self.ring, self.names)

    def show(self, p: Poly) -> str:
        from .poly import format_poly

        return format_poly(p, self.names)


@dataclass(frozen=True)
class AlignedCenter:
    """A blow-up center: the zero set of a coordinate subset inside W."""

    chart_id: str
    coords: frozenset

    def __post_init__(self):
        if not self.coords:
            raise UnsupportedLocus("empty center coordinate set")


def validate_center(chart: Chart, center: AlignedCenter) -> None:
    if center.chart_id != chart.cid:
        raise ChartMismatch("center names chart %s, got %s" % (center.chart_id, chart.cid))
    for i in center.coords:
        if not 0 <= i < chart.nvars:
            raise ChartMismatch("center coordinate %d out of range" % i)
    if not center.coords >= chart.w_coords:
        raise UnsupportedLocus("center does not lie inside W")
    if center.coords == chart.w_coords:
        raise UnsupportedLocus("center equals the whole underlying scheme")


# ---------------------------------------------------------------------------
# crossing checks
# ---------------------------------------------------------------------------


def divisor_has_normal_crossings(chart: Chart) -> bool:
    """The tracked divisor is normal crossings: distinct coordinates per chart.

    True by construction for charts built through this module; kept as a real
    check so states can be audited.
    """
    seen = set()
    for _, idx in chart.hyps:
        if idx in seen or idx in chart.w_coords:
            return False
        seen.add(idx)
    return True


def center_has_normal_crossings(chart: Chart, center: AlignedCenter) -> bool:
    """An aligned center always meets aligned hypersurfaces cleanly."""
    validate_center(chart, center)
    return divisor_has_normal_crossings(chart)


def center_transversal_to(chart: Chart, center: AlignedCenter, hid: str) -> bool:
    """Transversality: the hypersurface's coordinate avoids the center's."""
    validate_center(chart, center)
    idx = chart.hyp_coord(hid)
    if idx is None:
        return True
    return idx not in center.coords


# ---------------------------------------------------------------------------
# blow-up
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlowupResult:
    parent: Chart
    center: AlignedCenter
    children: Tuple[Chart, ...]
    exc_id: str


def blowup(chart: Chart, center: AlignedCenter, exc_id: str) -> BlowupResult:
    """Blow up the chart along an aligned center.

    One standard chart per center coordinate off W; in the chart for
    coordinate i, every other center coordinate j maps as x_j -> x_i * x_j
    and the exceptional divisor is x_i = 0.  A center of codimension one in W
    yields a single identity chart with the center recorded as exceptional.
    """
    validate_center(chart, center)
    free = sorted(center.coords - chart.w_coords)
    children = []
    for i in free:
        images = []
        for j in range(chart.nvars):
            if j in center.coords and j != i:
                images.append(chart.var(i) * chart.var(j))
            else:
                images.append(chart.var(j))
        hyps = []
        for hid, idx in chart.hyps:
            if idx == i:
                continue  # strict transform misses this chart
            hyps.append((hid, idx))
        hyps.append((exc_id, i))
        children.append(
            Chart(
                cid="%s.%s" % (chart.cid, chart.names[i]),
                ring=chart.ring,
                names=chart.names,
                w_coords=chart.w_coords,
                hyps=tuple(hyps),
                parent=chart.cid,
                parent_map=tuple(images),
            )
        )
    return BlowupResult(parent=chart, center=center, children=tuple(children), exc_id=exc_id)


def pullback(child: Chart, p: Poly) -> Poly:
    """Pull a parent-chart polynomial back to the child chart."""
    if child.parent_map is None:
        raise ChartMismatch("chart %s has no parent" % child.cid)
    return p.substitute(child.parent_map)


def child_point(parent: Chart, center: AlignedCenter, child: Chart, exc_id: str, point: Sequence[Fraction]):
    """Transport a parent point off the center into a blow-up chart.

    Returns the child coordinates, or None when the point sits on the center
    (no unique preimage) or does not appear in this particular chart.
    """
    pt = parent.check_point(point)
    exc_idx = child.hyp_coord(exc_id)
    if exc_idx is None:
        raise ChartMismatch("chart %s carries no record of %s" % (child.cid, exc_id))
    if all(pt[j] == 0 for j in center.coords):
        return None
    if pt[exc_idx] == 0:
        return None
    out = list(pt)
    for j in center.coords:
        if j != exc_idx:
            out[j] = pt[j] / pt[exc_idx]
    return tuple(out)


def parent_point(child: Chart, point: Sequence[Fraction]) -> Tuple[Fraction, ...]:
    """Evaluate the chart map: the parent point below a child point.

    Coordinates are reported in the fiber (constant part); blow-up maps are
    rational so nothing is lost there.
    """
    if child.parent_map is None:
        raise ChartMismatch("chart %s has no parent" % child.cid)
    pt = tuple(Fraction(p) for p in point)
    return tuple(image.evaluate(pt)[0] for image in child.parent_map)


# ---------------------------------------------------------------------------
# triangular coordinate changes
# ---------------------------------------------------------------------------


def triangular_change(chart: Chart, pivot: int, equation: Poly) -> Chart:
    """Replace one coordinate by a new one defined by ``equation``.

    The equation must be triangular: a unit multiple of the pivot coordinate
    plus terms free of the pivot, with no constant term.  Hypersurface
    coordinates and W coordinates cannot serve as the pivot, so alignment of
    everything tracked survives the change.
    """
    if not 0 <= pivot < chart.nvars:
        raise ChartMismatch("pivot %d out of range" % pivot)
    if pivot in chart.w_coords:
        raise ChartMismatch("pivot %s is a W coordinate" % chart.names[pivot])
    if chart.coord_hyp(pivot) is not None:
        raise ChartMismatch(
            "pivot %s already defines hypersurface %s" % (chart.names[pivot], chart.coord_hyp(pivot))
        )
    if equation.ring != chart.ring or equation.nvars != chart.nvars:
        raise ChartMismatch("equation does not live on chart %s" % chart.cid)
    unit_exp = tuple(1 if i == pivot else 0 for i in range(chart.nvars))
    c = None
    rest_items = []
    for exp, coef in equation.terms.items():
        if sum(exp) == 0:
            raise ChartMismatch("equation has a constant term")
        if exp[pivot] > 0:
            if exp != unit_exp:
                raise ChartMismatch("equation is not triangular in the pivot")
            c = coef
        else:
            rest_items.append((exp, coef))
    if c is None or not coef_is_unit(c):
        raise ChartMismatch("equation needs a unit linear coefficient on the pivot")
    rest = Poly.from_terms(chart.ring, chart.nvars, rest_items)
    inv = coef_inverse(c)
    # parent coordinate x_pivot = (new_pivot - rest) * c^{-1}; everything else is shared
    images = []
    for j in range(chart.nvars):
        if j == pivot:
            images.append((chart.var(pivot) - rest).coef_mul_by(inv))
        else:
            images.append(chart.var(j))
    return Chart(
        cid="%s~%s" % (chart.cid, chart.names[pivot]),
        ring=chart.ring,
        names=chart.names,
        w_coords=chart.w_coords,
        hyps=chart.hyps,
        parent=chart.cid,
        parent_map=tuple(images),
    )


def restrict_chart(chart: Chart, z_index: int) -> Chart:
    """View the hypersurface x_z = 0 inside W as the new underlying scheme.

    A tracked hypersurface sitting at the restricted coordinate is dropped
    from the chart: it coincides with the new underlying scheme and is no
    longer a divisor there.
    """
    if z_index in chart.w_coords:
        raise ChartMismatch("coordinate %s already cut out" % chart.names[z_index])
    return Chart(
        cid="%s|%s" % (chart.cid, chart.names[z_index]),
        ring=chart.ring,
        names=chart.names,
        w_coords=chart.w_coords | {z_index},
        hyps=tuple(h for h in chart.hyps if h[1] != z_index),
        parent=chart.cid,
        parent_map=tuple(chart.var(j) for j in range(chart.nvars)),
    )


def extend_chart(chart: Chart, extra_names: Sequence[str]) -> Chart:
    """Product with an affine factor: fresh coordinates appended to W."""
    for name in extra_names:
        if name in chart.names:
            raise ChartMismatch("coordinate name %s already in use" % name)
    old_n = chart.nvars
    new_names = chart.names + tuple(extra_names)
    images = tuple(
        Poly.variable(chart.ring, len(new_names), j) for j in range(old_n)
    )
    return Chart(
        cid="%s+%d" % (chart.cid, len(extra_names)),
        ring=chart.ring,
        names=new_names,
        w_coords=chart.w_coords,
        hyps=chart.hyps,
        parent=chart.cid,
        parent_map=images,
    )
