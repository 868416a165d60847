"""Combinatorial resolution of monomial collections.

A :class:`MonomialForm` records, per pair, an exponent vector over a list of
tracked hypersurfaces, plus the family of nonempty strata (stored as the
antichain of maximal intersections).  A point on exactly the hypersurfaces
of a stratum S has pair multiplicity equal to the exponent sum over S, so
singularity, the gamma invariant, and the canonical center are all exact
finite computations here; no sampling is involved.

Gamma at a stratum is (-p, ratio, witness): p the least number of tracked
hypersurfaces whose exponent sum reaches some pair's mark, ratio the best
achieved sum over that mark, witness the lexicographically largest ascending
1-based index sequence realizing the ratio.  The canonical center is the
locus where gamma is maximal; it may have several minimal strata, which are
blown one by one inside a single recorded step, after which the maximum has
strictly dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Set, Tuple

from .errors import (
    LedgerInconsistent,
    NoWitness,
    NotPermissible,
    ParseError,
    StepCapExceeded,
)

_BATCH_CAP = 64


@dataclass(frozen=True)
class MonomialInvariant:
    """The gamma value (-p, ratio, witness), ordered lexicographically.

    Witness sequences are strictly increasing 1-based indices; comparison
    zero-pads the shorter sequence, so a longer sequence beats an equal
    prefix.
    """

    neg_size: int
    ratio: Fraction
    witness: Tuple[int, ...]

    def _cmp(self, other: "MonomialInvariant") -> int:
        if self.neg_size != other.neg_size:
            return -1 if self.neg_size < other.neg_size else 1
        if self.ratio != other.ratio:
            return -1 if self.ratio < other.ratio else 1
        n = max(len(self.witness), len(other.witness))
        a = self.witness + (0,) * (n - len(self.witness))
        b = other.witness + (0,) * (n - len(other.witness))
        if a == b:
            return 0
        return -1 if a < b else 1

    def __lt__(self, other: "MonomialInvariant") -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: "MonomialInvariant") -> bool:
        return self._cmp(other) <= 0

    def __str__(self) -> str:
        return "(%d, %s, [%s])" % (
            self.neg_size,
            self.ratio,
            ",".join(str(i) for i in self.witness),
        )


@dataclass(frozen=True)
class MonomialForm:
    marks: Tuple[int, ...]
    hyp_ids: Tuple[str, ...]
    exps: Tuple[Tuple[int, ...], ...]
    maximal: Tuple[Tuple[int, ...], ...]

    @property
    def npairs(self) -> int:
        return len(self.marks)

    def describe(self) -> str:
        lines = []
        for b, row in zip(self.marks, self.exps):
            lines.append("pair b=%d exps=[%s]" % (b, ",".join(str(e) for e in row)))
        return "\n".join(lines)


def _canonical_antichain(family: Iterable[Iterable[int]], m: int) -> Tuple[Tuple[int, ...], ...]:
    sets: Set[frozenset] = set()
    for member in family:
        fs = frozenset(member)
        for pos in fs:
            if not (0 <= pos < m):
                raise ValueError("stratum position %r out of range" % (pos,))
        sets.add(fs)
    maximal = [s for s in sets if not any(s < t for t in sets)]
    return tuple(sorted(tuple(sorted(s)) for s in maximal))


def make_monomial_form(
    marks: Sequence[int],
    hyp_ids: Sequence[str],
    exps: Sequence[Sequence[int]],
    maximal: Optional[Iterable[Iterable[int]]] = None,
) -> MonomialForm:
    if not marks:
        raise ValueError("at least one pair is required")
    for b in marks:
        if not isinstance(b, int) or b < 1:
            raise ValueError("marks must be positive integers, got %r" % (b,))
    ids = tuple(hyp_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate hypersurface ids: %r" % (ids,))
    rows = []
    for row in exps:
        r = tuple(int(e) for e in row)
        if len(r) != len(ids):
            raise ValueError("exponent rows need one entry per hypersurface")
        if any(e < 0 for e in r):
            raise ValueError("exponents must be nonnegative")
        rows.append(r)
    if len(rows) != len(marks):
        raise ValueError("one exponent row per pair is required")
    if maximal is None:
        maximal = [tuple(range(len(ids)))] if ids else [()]
    return MonomialForm(
        marks=tuple(marks),
        hyp_ids=ids,
        exps=tuple(rows),
        maximal=_canonical_antichain(maximal, len(ids)),
    )


_PAIR_RE = re.compile(r"^pair\s+b=(\d+)\s+exps=\[([0-9,\s]*)\]$")


def parse_monomial_form(text: str) -> MonomialForm:
    """Parse the compact textual form, one `pair b=... exps=[...]` per line."""
    marks: List[int] = []
    rows: List[List[int]] = []
    for raw in re.split(r"[;\n]", text):
        line = raw.strip()
        if not line:
            continue
        match = _PAIR_RE.match(line)
        if not match:
            raise ParseError("bad pair syntax: %r" % line)
        marks.append(int(match.group(1)))
        body = match.group(2).strip()
        rows.append([int(tok) for tok in body.split(",")] if body else [])
    if not marks:
        raise ParseError("no pairs in %r" % text)
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParseError("pairs disagree on the hypersurface count")
    ids = tuple("H%d" % (k + 1) for k in range(width))
    return make_monomial_form(marks, ids, rows)


def stratum_nonempty(form: MonomialForm, stratum: Iterable[int]) -> bool:
    s = frozenset(stratum)
    return any(s <= frozenset(m) for m in form.maximal)


def stratum_singular(form: MonomialForm, stratum: Iterable[int]) -> bool:
    s = frozenset(stratum)
    if not s or not stratum_nonempty(form, s):
        return False
    for b, row in zip(form.marks, form.exps):
        if sum(row[h] for h in s) < b:
            return False
    return True


def singular_strata(form: MonomialForm) -> List[Tuple[int, ...]]:
    """All nonempty singular strata, smallest first, deterministic order."""
    seen: Set[Tuple[int, ...]] = set()
    out: List[Tuple[int, ...]] = []
    for m in form.maximal:
        for size in range(1, len(m) + 1):
            for subset in combinations(m, size):
                if subset in seen:
                    continue
                seen.add(subset)
                if stratum_singular(form, subset):
                    out.append(subset)
    out.sort(key=lambda s: (len(s), s))
    return out


def gamma(form: MonomialForm, stratum: Iterable[int]) -> MonomialInvariant:
    """The gamma value at a point lying on exactly the given hypersurfaces."""
    s = tuple(sorted(set(stratum)))
    if not stratum_singular(form, s):
        raise NoWitness("stratum %r is not in the singular locus" % (s,))
    for p in range(1, len(s) + 1):
        achieved: List[Tuple[Fraction, Tuple[int, ...]]] = []
        for b, row in zip(form.marks, form.exps):
            for subset in combinations(s, p):
                total = sum(row[h] for h in subset)
                if total >= b:
                    achieved.append(
                        (Fraction(total, b), tuple(h + 1 for h in subset))
                    )
        if achieved:
            ratio = max(r for r, _ in achieved)
            witness = max(w for r, w in achieved if r == ratio)
            return MonomialInvariant(-p, ratio, witness)
    raise NoWitness("no exponent subset reaches a mark on stratum %r" % (s,))


def max_gamma(form: MonomialForm) -> Tuple[MonomialInvariant, List[Tuple[int, ...]]]:
    """Maximal gamma over the singular locus plus the minimal attaining strata.

    The attaining locus is a union of closed strata; by semicontinuity it is
    determined by its inclusion-minimal members, returned in lexicographic
    order.  Their union is the canonical center.
    """
    strata = singular_strata(form)
    if not strata:
        raise NoWitness("the singular locus is empty")
    values = {s: gamma(form, s) for s in strata}
    best = max(values.values())
    attaining = [s for s in strata if values[s]._cmp(best) == 0]
    minimal = [
        s
        for s in attaining
        if not any(set(t) < set(s) for t in attaining)
    ]
    minimal.sort()
    return best, minimal


def canonical_center(form: MonomialForm) -> Tuple[MonomialInvariant, List[Tuple[str, ...]]]:
    """The canonical center as hypersurface id tuples, one per minimal stratum."""
    best, minimal = max_gamma(form)
    return best, [tuple(form.hyp_ids[h] for h in s) for s in minimal]


def monomial_transform(
    form: MonomialForm, stratum: Iterable[int], new_hid: str
) -> MonomialForm:
    """Blow up the intersection of the given hypersurfaces.

    Each pair's new exceptional exponent is its exponent sum over the center
    minus its mark; a negative value means the center was not permissible
    for that pair.  The stratum family is updated so that the blown stratum
    becomes empty and the new hypersurface meets exactly what it should.
    """
    t = frozenset(stratum)
    if not t:
        raise ValueError("the center needs at least one hypersurface")
    if not stratum_nonempty(form, t):
        raise NotPermissible("center stratum %r is empty" % (sorted(t),))
    if new_hid in form.hyp_ids:
        raise ValueError("hypersurface id %r already in use" % new_hid)
    new_rows = []
    for i, (b, row) in enumerate(zip(form.marks, form.exps)):
        total = sum(row[h] for h in t)
        if total < b:
            raise NotPermissible(
                "center not permissible for pair %d: exponent sum %d < %d"
                % (i + 1, total, b),
                pair_index=i + 1,
            )
        new_rows.append(row + (total - b,))
    new_pos = len(form.hyp_ids)
    family: List[frozenset] = []
    for m in form.maximal:
        ms = frozenset(m)
        if t <= ms:
            b_part = ms - t
            for h in sorted(t):
                family.append(ms - {h})
                family.append((t - {h}) | b_part | {new_pos})
        else:
            family.append(ms)
    return MonomialForm(
        marks=form.marks,
        hyp_ids=form.hyp_ids + (new_hid,),
        exps=tuple(new_rows),
        maximal=_canonical_antichain(family, new_pos + 1),
    )


@dataclass(frozen=True)
class MonomialStep:
    """One canonical-center step: a gamma value and its component blow-ups."""

    value: MonomialInvariant
    components: Tuple[Tuple[str, ...], ...]
    new_ids: Tuple[str, ...]


@dataclass(frozen=True)
class MonomialTrace:
    steps: Tuple[MonomialStep, ...]
    final: MonomialForm


def _next_hid(existing: Set[str], prefix: str) -> str:
    k = len(existing) + 1
    while "%s%d" % (prefix, k) in existing:
        k += 1
    return "%s%d" % (prefix, k)


def resolve_monomial(
    form: MonomialForm, step_cap: int = 200, id_prefix: str = "E"
) -> MonomialTrace:
    """Iterate canonical-center blow-ups until the singular locus is empty.

    One step clears one maximum of gamma; when the attaining locus has
    several minimal strata they are blown in lexicographic order within the
    step.  The recorded maxima strictly decrease from step to step, and a
    non-decreasing maximum inside a step beyond the component budget is
    reported rather than looped on.
    """
    steps: List[MonomialStep] = []
    blows = 0
    while True:
        if not singular_strata(form):
            break
        entry_value, minimal = max_gamma(form)
        if steps and not (entry_value < steps[-1].value):
            raise LedgerInconsistent(
                "monomial maximum failed to decrease: %s then %s"
                % (steps[-1].value, entry_value)
            )
        components: List[Tuple[str, ...]] = []
        new_ids: List[str] = []
        inner = 0
        while True:
            strata = singular_strata(form)
            if not strata:
                break
            value, minimal = max_gamma(form)
            if value < entry_value:
                break
            if entry_value < value:
                raise LedgerInconsistent(
                    "monomial maximum increased from %s to %s"
                    % (entry_value, value)
                )
            target = minimal[0]
            hid = _next_hid(set(form.hyp_ids), id_prefix)
            components.append(tuple(form.hyp_ids[h] for h in target))
            new_ids.append(hid)
            form = monomial_transform(form, target, hid)
            inner += 1
            blows += 1
            if inner > _BATCH_CAP:
                raise StepCapExceeded(
                    "more than %d component blow-ups at one gamma value" % _BATCH_CAP
                )
            if blows > step_cap:
                raise StepCapExceeded(
                    "monomial resolution exceeded %d blow-ups" % step_cap
                )
        steps.append(MonomialStep(entry_value, tuple(components), tuple(new_ids)))
    return MonomialTrace(steps=tuple(steps), final=form)
