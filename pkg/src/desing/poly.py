"""Exact sparse polynomials over the rationals and over truncated dual rings.

Coefficients live in QQ or in QQ[eps]/(eps^m) for a fixed nilpotency index m.
A coefficient is a tuple of ``m`` Fractions, the entries being the components
on 1, eps, ..., eps^(m-1); plain QQ is the width-1 case.  A polynomial is a
map from exponent tuples to such coefficients, with zero coefficients never
stored.  All arithmetic is exact; no floats appear anywhere.

Orders (vanishing multiplicities) are plain ints, with ``math.inf`` as the
order of the zero polynomial.  The sentinel is only ever compared, never
computed with.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Sequence, Tuple

from .errors import ChartMismatch, ParseError, RingMismatch

Exponent = Tuple[int, ...]
Coef = Tuple[Fraction, ...]

INF = math.inf

_ZERO = Fraction(0)
_ONE = Fraction(1)


# ---------------------------------------------------------------------------
# coefficient ring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoefRing:
    """QQ when ``width == 1``, else QQ[eps]/(eps^width)."""

    width: int = 1

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("ring width must be at least 1")

    @property
    def artinian(self) -> bool:
        return self.width > 1

    def zero(self) -> Coef:
        return (_ZERO,) * self.width

    def one(self) -> Coef:
        return (_ONE,) + (_ZERO,) * (self.width - 1)

    def eps(self) -> Coef:
        if not self.artinian:
            raise RingMismatch("eps does not exist over the rational field")
        return (_ZERO, _ONE) + (_ZERO,) * (self.width - 2)

    def from_rational(self, q) -> Coef:
        return (Fraction(q),) + (_ZERO,) * (self.width - 1)

    def describe(self) -> str:
        if self.artinian:
            return "Q[eps]/(eps^%d)" % self.width
        return "Q"


QQ = CoefRing(1)


def coef_is_zero(c: Coef) -> bool:
    return all(part == 0 for part in c)


def coef_add(a: Coef, b: Coef) -> Coef:
    return tuple(x + y for x, y in zip(a, b))


def coef_neg(a: Coef) -> Coef:
    return tuple(-x for x in a)


def coef_mul(a: Coef, b: Coef) -> Coef:
    width = len(a)
    out = [_ZERO] * width
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            if i + j >= width:
                break
            if y != 0:
                out[i + j] += x * y
    return tuple(out)


def coef_scale(a: Coef, q: Fraction) -> Coef:
    return tuple(x * q for x in a)


def coef_is_unit(a: Coef) -> bool:
    return a[0] != 0


def coef_inverse(a: Coef) -> Coef:
    """Inverse in QQ[eps]/(eps^width); requires a unit (nonzero constant part)."""
    if a[0] == 0:
        raise ZeroDivisionError("coefficient with zero constant part is not a unit")
    width = len(a)
    inv = [_ONE / a[0]] + [_ZERO] * (width - 1)
    # Solve sum_{i+j=k} a_i inv_j = 0 for k >= 1, one power at a time.
    for k in range(1, width):
        acc = _ZERO
        for i in range(1, k + 1):
            acc += a[i] * inv[k - i]
        inv[k] = -acc / a[0]
    return tuple(inv)


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


def _grlex_key(e: Exponent):
    return (sum(e), e)


class Poly:
    """Immutable sparse polynomial.  Do not mutate ``terms`` after creation."""

    __slots__ = ("ring", "nvars", "terms", "_hash")

    def __init__(self, ring: CoefRing, nvars: int, terms: Dict[Exponent, Coef]):
        self.ring = ring
        self.nvars = nvars
        self.terms = terms
        self._hash = None

    # -- construction -------------------------------------------------------

    @staticmethod
    def from_terms(ring: CoefRing, nvars: int, items: Iterable[Tuple[Exponent, Coef]]) -> "Poly":
        acc: Dict[Exponent, Coef] = {}
        for exp, coef in items:
            if len(exp) != nvars:
                raise ChartMismatch("exponent length %d does not match %d variables" % (len(exp), nvars))
            if exp in acc:
                coef = coef_add(acc[exp], coef)
            if coef_is_zero(coef):
                acc.pop(exp, None)
            else:
                acc[exp] = coef
        return Poly(ring, nvars, acc)

    @staticmethod
    def zero(ring: CoefRing, nvars: int) -> "Poly":
        return Poly(ring, nvars, {})

    @staticmethod
    def constant(ring: CoefRing, nvars: int, value) -> "Poly":
        coef = value if isinstance(value, tuple) else ring.from_rational(value)
        if coef_is_zero(coef):
            return Poly.zero(ring, nvars)
        return Poly(ring, nvars, {(0,) * nvars: coef})

    @staticmethod
    def variable(ring: CoefRing, nvars: int, index: int) -> "Poly":
        exp = tuple(1 if i == index else 0 for i in range(nvars))
        return Poly(ring, nvars, {exp: ring.one()})

    # -- predicates and views -----------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(sum(e) == 0 for e in self.terms)

    def is_unit_constant(self) -> bool:
        """A nonzero constant whose constant part is invertible."""
        if len(self.terms) != 1:
            return False
        ((exp, coef),) = self.terms.items()
        return sum(exp) == 0 and coef_is_unit(coef)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def total_degree(self):
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def min_degree(self):
        if not self.terms:
            return INF
        return min(sum(e) for e in self.terms)

    def sorted_terms(self):
        """Terms in descending graded-lex order; the canonical enumeration."""
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]), reverse=True)

    def leading(self) -> Tuple[Exponent, Coef]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        exp = max(self.terms, key=_grlex_key)
        return exp, self.terms[exp]

    def uses_variable(self, index: int) -> bool:
        return any(e[index] for e in self.terms)

    # -- ring ops ------------------------------------------------------------

    def _check(self, other: "Poly"):
        if self.ring != other.ring:
            raise RingMismatch("mixed coefficient rings %s and %s" % (self.ring.describe(), other.ring.describe()))
        if self.nvars != other.nvars:
            raise ChartMismatch("mixed variable counts %d and %d" % (self.nvars, other.nvars))

    def __add__(self, other: "Poly") -> "Poly":
        self._check(other)
        acc = dict(self.terms)
        for exp, coef in other.terms.items():
            if exp in acc:
                s = coef_add(acc[exp], coef)
                if coef_is_zero(s):
                    del acc[exp]
                else:
                    acc[exp] = s
            else:
                acc[exp] = coef
        return Poly(self.ring, self.nvars, acc)

    def __neg__(self) -> "Poly":
        return Poly(self.ring, self.nvars, {e: coef_neg(c) for e, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        self._check(other)
        acc: Dict[Exponent, Coef] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                prod = coef_mul(c1, c2)
                if coef_is_zero(prod):
                    continue
                exp = tuple(a + b for a, b in zip(e1, e2))
                if exp in acc:
                    s = coef_add(acc[exp], prod)
                    if coef_is_zero(s):
                        del acc[exp]
                    else:
                        acc[exp] = s
                else:
                    acc[exp] = prod
        return Poly(self.ring, self.nvars, acc)

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power")
        result = Poly.constant(self.ring, self.nvars, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def scale(self, q) -> "Poly":
        q = Fraction(q)
        if q == 0:
            return Poly.zero(self.ring, self.nvars)
        return Poly(self.ring, self.nvars, {e: coef_scale(c, q) for e, c in self.terms.items()})

    def coef_mul_by(self, c: Coef) -> "Poly":
        items = []
        for e, old in self.terms.items():
            prod = coef_mul(old, c)
            if not coef_is_zero(prod):
                items.append((e, prod))
        return Poly.from_terms(self.ring, self.nvars, items)

    def mul_coord_power(self, index: int, k: int) -> "Poly":
        acc = {}
        for e, c in self.terms.items():
            exp = list(e)
            exp[index] += k
            acc[tuple(exp)] = c
        return Poly(self.ring, self.nvars, acc)

    # -- calculus ------------------------------------------------------------

    def partial(self, index: int) -> "Poly":
        items = []
        for e, c in self.terms.items():
            k = e[index]
            if k == 0:
                continue
            exp = list(e)
            exp[index] = k - 1
            items.append((tuple(exp), coef_scale(c, Fraction(k))))
        return Poly.from_terms(self.ring, self.nvars, items)

    def deriv_eval(self, alpha: Exponent, point: Sequence[Fraction]) -> Coef:
        """Value of the alpha-th partial derivative at a rational point."""
        acc = self.ring.zero()
        for e, c in self.terms.items():
            scale = _ONE
            ok = True
            for ei, ai in zip(e, alpha):
                if ei < ai:
                    ok = False
                    break
                for r in range(ai):
                    scale *= ei - r
            if not ok:
                continue
            val = scale
            for i, (ei, ai) in enumerate(zip(e, alpha)):
                rem = ei - ai
                if rem:
                    p = Fraction(point[i])
                    if p == 0:
                        val = _ZERO
                        break
                    val *= p ** rem
            if val != 0:
                acc = coef_add(acc, coef_scale(c, val))
        return acc

    def evaluate(self, point: Sequence[Fraction]) -> Coef:
        return self.deriv_eval((0,) * self.nvars, point)

    # -- substitution and friends -------------------------------------------

    def substitute(self, images: Sequence["Poly"]) -> "Poly":
        """Apply the ring map sending variable i to images[i].

        All images must share one ring and variable count; the result lives
        in the images' variable space.
        """
        if len(images) != self.nvars:
            raise ChartMismatch("need %d images, got %d" % (self.nvars, len(images)))
        if not images:
            return Poly(self.ring, 0, dict(self.terms))
        tgt = images[0]
        for im in images:
            if im.ring != self.ring:
                raise RingMismatch("image ring differs from polynomial ring")
            tgt._check(im)
        out = Poly.zero(tgt.ring, tgt.nvars)
        powers: Dict[Tuple[int, int], Poly] = {}

        def power(i: int, k: int) -> Poly:
            if k == 0:
                return Poly.constant(tgt.ring, tgt.nvars, 1)
            got = powers.get((i, k))
            if got is None:
                got = images[i] ** k
                powers[(i, k)] = got
            return got

        for e, c in self.terms.items():
            piece = Poly.constant(tgt.ring, tgt.nvars, c)
            for i, k in enumerate(e):
                if k:
                    piece = piece * power(i, k)
            out = out + piece
        return out

    def translate(self, point: Sequence[Fraction]) -> "Poly":
        """Recentre at ``point``: the result at 0 behaves as self at point."""
        if len(point) != self.nvars:
            raise ChartMismatch("point length %d does not match %d variables" % (len(point), self.nvars))
        images = []
        for i, p in enumerate(point):
            v = Poly.variable(self.ring, self.nvars, i)
            p = Fraction(p)
            images.append(v if p == 0 else v + Poly.constant(self.ring, self.nvars, p))
        return self.substitute(images)

    def set_variable_zero(self, index: int) -> "Poly":
        items = [(e, c) for e, c in self.terms.items() if e[index] == 0]
        return Poly(self.ring, self.nvars, dict(items))

    def drop_variable(self, index: int) -> "Poly":
        """Remove a variable the polynomial does not use."""
        if self.uses_variable(index):
            raise ChartMismatch("variable %d still occurs" % index)
        acc = {}
        for e, c in self.terms.items():
            acc[e[:index] + e[index + 1 :]] = c
        return Poly(self.ring, self.nvars - 1, acc)

    def append_variables(self, count: int) -> "Poly":
        acc = {e + (0,) * count: c for e, c in self.terms.items()}
        return Poly(self.ring, self.nvars + count, acc)

    def set_fiber(self) -> "Poly":
        """Kill eps: keep the constant part of every coefficient, over QQ."""
        items = []
        for e, c in self.terms.items():
            if c[0] != 0:
                items.append((e, (c[0],)))
        return Poly.from_terms(QQ, self.nvars, items)

    # -- orders --------------------------------------------------------------

    def order_at_origin(self):
        return self.min_degree()

    def order_at_point(self, point: Sequence[Fraction]):
        """Vanishing order at a rational point of the chart; inf for 0."""
        if self.is_zero():
            return INF
        if all(Fraction(p) == 0 for p in point):
            return self.min_degree()
        return self.translate(point).min_degree()

    def order_at_least(self, point: Sequence[Fraction], k: int) -> bool:
        """Whether the order at ``point`` is >= k, via derivative evaluations."""
        if k <= 0:
            return True
        if self.is_zero():
            return True
        if all(Fraction(p) == 0 for p in point):
            return self.min_degree() >= k
        for alpha in _multi_indices_below(self.nvars, k):
            if not coef_is_zero(self.deriv_eval(alpha, point)):
                return False
        return True

    def order_along(self, coords: Iterable[int]):
        """Order at the generic point of the coordinate subvariety V(coords)."""
        coords = tuple(coords)
        if self.is_zero():
            return INF
        return min(sum(e[i] for i in coords) for e in self.terms)

    # -- division ------------------------------------------------------------

    def divide_coord_power(self, index: int, k: int) -> "Poly":
        """Exact division by the k-th power of one coordinate, or ValueError."""
        if k == 0:
            return self
        acc = {}
        for e, c in self.terms.items():
            if e[index] < k:
                raise ValueError("term not divisible by coordinate power")
            exp = list(e)
            exp[index] -= k
            acc[tuple(exp)] = c
        return Poly(self.ring, self.nvars, acc)

    def try_exact_division(self, divisor: "Poly"):
        """Quotient self/divisor when it exists, else None.

        Sound single-divisor result: needs the divisor's leading coefficient
        to be a unit so leading terms cannot collapse.
        """
        self._check(divisor)
        if divisor.is_zero():
            return None
        dexp, dcoef = divisor.leading()
        if not coef_is_unit(dcoef):
            return None
        dinv = coef_inverse(dcoef)
        remainder = self
        quotient = Poly.zero(self.ring, self.nvars)
        guard = 0
        bound = 4 * (len(self.terms) + 1) * (len(divisor.terms) + 1) + 64
        while not remainder.is_zero():
            guard += 1
            if guard > bound:
                return None
            rexp, rcoef = remainder.leading()
            if any(a < b for a, b in zip(rexp, dexp)):
                return None
            step_exp = tuple(a - b for a, b in zip(rexp, dexp))
            step_coef = coef_mul(rcoef, dinv)
            step = Poly(self.ring, self.nvars, {step_exp: step_coef})
            quotient = quotient + step
            remainder = remainder - step * divisor
        return quotient

    # -- dunder plumbing ------------------------------------------------------

    def _canon(self):
        return (self.ring, self.nvars, tuple(self.sorted_terms()))

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self.ring == other.ring and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._canon())
        return self._hash

    def __repr__(self):
        return "Poly(%s)" % format_poly(self, tuple("x%d" % (i + 1) for i in range(self.nvars)))


def _multi_indices_below(nvars: int, bound: int):
    """All exponent tuples of total degree < bound, degree-major order."""
    for total in range(bound):
        yield from _multi_indices_exact(nvars, total)


def _multi_indices_exact(nvars: int, total: int):
    if nvars == 0:
        if total == 0:
            yield ()
        return
    if nvars == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _multi_indices_exact(nvars - 1, total - head):
            yield (head,) + rest


# ---------------------------------------------------------------------------
# text form
# ---------------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(\d+/\d+|\d+|[A-Za-z_][A-Za-z_0-9]*|\^|\*|\+|-|\(|\))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError("unexpected character at position %d in %r" % (pos, text))
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_poly(text: str, ring: CoefRing, names: Sequence[str]) -> Poly:
    """Parse ``c*x^a*...`` terms joined by + and -.

    Rationals are ``p`` or ``p/q``; ``eps`` is the nilpotent generator and is
    only legal over an artinian ring.  Parentheses are not part of the grammar.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty polynomial text")
    index = {name: i for i, name in enumerate(names)}
    nvars = len(names)
    result = Poly.zero(ring, nvars)
    pos = 0
    sign = 1
    first = True
    while pos < len(tokens):
        tok = tokens[pos]
        if tok in ("+", "-"):
            sign = -1 if tok == "-" else 1
            pos += 1
            if pos >= len(tokens):
                raise ParseError("dangling sign in %r" % text)
        elif not first:
            raise ParseError("expected + or - before %r" % tok)
        term_coef = ring.from_rational(sign)
        term_exp = [0] * nvars
        expect_factor = True
        while pos < len(tokens):
            tok = tokens[pos]
            if not expect_factor:
                if tok in ("+", "-"):
                    break
                raise ParseError("missing * before %r in %r" % (tok, text))
            if tok == "*":
                raise ParseError("misplaced * in %r" % text)
            pos += 1
            power = 1
            if pos < len(tokens) and tokens[pos] == "^":
                if pos + 1 >= len(tokens) or not tokens[pos + 1].isdigit():
                    raise ParseError("broken exponent in %r" % text)
                power = int(tokens[pos + 1])
                pos += 2
            if re.fullmatch(r"\d+(/\d+)?", tok):
                q = Fraction(tok)
                term_coef = coef_scale(term_coef, q**power)
            elif tok == "eps":
                if not ring.artinian:
                    raise ParseError("eps used over the rational field")
                if power >= ring.width:
                    term_coef = ring.zero()
                else:
                    for _ in range(power):
                        term_coef = coef_mul(term_coef, ring.eps())
            elif tok in index:
                term_exp[index[tok]] += power
            else:
                raise ParseError("unknown symbol %r in %r" % (tok, text))
            expect_factor = False
            if pos < len(tokens) and tokens[pos] == "*":
                pos += 1
                expect_factor = True
        if expect_factor:
            raise ParseError("trailing * in %r" % text)
        result = result + Poly.from_terms(ring, nvars, [(tuple(term_exp), term_coef)])
        sign = 1
        first = False
    return result


def _format_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else "%d/%d" % (q.numerator, q.denominator)


def format_poly(p: Poly, names: Sequence[str]) -> str:
    """Canonical text: descending graded-lex monomials, eps powers ascending."""
    if p.is_zero():
        return "0"
    pieces = []
    for exp, coef in p.sorted_terms():
        for k in range(len(coef)):
            if coef[k] == 0:
                continue
            q = coef[k]
            factors = []
            if k == 1:
                factors.append("eps")
            elif k > 1:
                factors.append("eps^%d" % k)
            for i, e in enumerate(exp):
                if e == 1:
                    factors.append(names[i])
                elif e > 1:
                    factors.append("%s^%d" % (names[i], e))
            mag = abs(q)
            if mag != 1 or not factors:
                factors.insert(0, _format_fraction(mag))
            body = "*".join(factors)
            if not pieces:
                pieces.append(body if q > 0 else "-" + body)
            else:
                pieces.append(("+ " if q > 0 else "- ") + body)
    return " ".join(pieces)
