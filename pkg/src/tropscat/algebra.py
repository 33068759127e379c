"""Exponents, order functions, truncated monoid algebras and localizations.

The ring model is local to a computation site (a joint, a slab, a cell):
exponents are pairs (vec, h) with vec in the chart lattice Z^n and h the
affine coordinate, so the monomial z^(vec,h) behaves like z^vec * t^... with
t = z^((0,...,0),1) the distinguished deformation parameter.

A :class:`Context` fixes the maximal cells around the site through their
polarization slopes.  The order of an exponent on the i-th cell is

    ord_i(vec, h) = h - <slopes[i], vec>

and the order at the site is the maximum over the cells.  Polynomials are
truncated at order > k eagerly; division by the distinguished slab
functions is kept symbolic through :class:`Localized`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple

from .exact import (
    angle_key, ccw_normal, frac, int_nullspace, is_zero_vec,
    lattice_reduce, positive_functional, primitive, vdot,
)


class Exponent(NamedTuple):
    vec: tuple
    h: int


class ContextMismatch(ValueError):
    pass


class NotDivisible(ValueError):
    def __init__(self, witness):
        super().__init__(f"not divisible; first failing monomial {witness}")
        self.witness = witness


class NotUnit(ValueError):
    pass


@dataclass(frozen=True)
class Context:
    """Order data around a computation site.

    rank: lattice rank n; exponent vectors live in Z^n.  The normal plane Q
    of the site is spanned by the first two coordinates; the remaining
    coordinates are tangent to the site.
    slopes: one integral covector per maximal cell, counterclockwise.
    cuts: primitive Q-directions of the codimension-one cells through the
    site, counterclockwise; cell i sits between cuts[i] and cuts[i+1].
    Empty for a site interior to a maximal cell; two opposite directions in
    codimension one.
    order: truncation order k.
    cut_funcs: the distinguished localizing functions, one per cut (set
    after the bare context exists; see :meth:`with_cut_funcs`).
    """

    rank: int
    order: int
    slopes: tuple = ((0, 0),)
    cuts: tuple = ()
    cut_funcs: tuple = ()
    _gradings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.cuts:
            keys = [angle_key(d) for d in self.cuts]
            if sorted(keys) != keys or len(set(keys)) != len(keys):
                raise ValueError("cuts must be distinct and in counterclockwise order")
        if len(self.slopes) != max(1, len(self.cuts)):
            raise ValueError("need one slope per maximal cell around the site")
        for lam in self.slopes:
            if len(lam) != self.rank:
                raise ValueError("slope covectors must have full rank length")
        r = len(self.cuts)
        for i in range(r):
            d = tuple(self.cuts[i]) + (0,) * (self.rank - 2)
            if vdot(self.slopes[i - 1], d) != vdot(self.slopes[i], d):
                raise ValueError(f"slopes are discontinuous across cut {i}")

    @property
    def codim(self):
        if not self.cuts:
            return 0
        lines = {tuple(primitive(d)) for d in self.cuts}
        lines |= {tuple(primitive(tuple(-x for x in d))) for d in self.cuts}
        return 1 if len(lines) == 2 and len(self.cuts) == 2 else 2

    def n_cells(self):
        return max(1, len(self.cuts))

    def compatible(self, other):
        return (self.rank, self.order, self.slopes, self.cuts) == \
               (other.rank, other.order, other.slopes, other.cuts)

    # -- orders ------------------------------------------------------------

    def qpart(self, vec):
        return (vec[0], vec[1]) if self.rank >= 2 else (vec[0], 0)

    def ord_on(self, m: Exponent, i: int) -> int:
        return m.h - vdot(self.slopes[i], m.vec)

    def ord(self, m: Exponent) -> int:
        """Order at the site: max over the surrounding maximal cells."""
        return max(self.ord_on(m, i) for i in range(self.n_cells()))

    def ord_min(self, m: Exponent) -> int:
        return min(self.ord_on(m, i) for i in range(self.n_cells()))

    def weight(self, m: Exponent) -> int:
        """Total order over all cells; additive, 0 exactly on monoid units."""
        return sum(self.ord_on(m, i) for i in range(self.n_cells()))

    def in_monoid(self, m: Exponent) -> bool:
        return self.ord_min(m) >= 0

    def is_unit_exp(self, m: Exponent) -> bool:
        return self.ord_min(m) == 0 and self.ord(m) == 0

    def lift(self, vec, order=0):
        """The exponent over vec whose minimal cell order equals ``order``."""
        h = max(vdot(lam, vec) for lam in self.slopes) + order
        return Exponent(tuple(vec), h)

    def t_exp(self, power=1):
        return Exponent((0,) * self.rank, power)

    # -- cuts --------------------------------------------------------------

    def cut_normal(self, i):
        """Primitive covector vanishing on cut i, positive counterclockwise."""
        n2 = ccw_normal(self.cuts[i])
        return n2 + (0,) * (self.rank - 2)

    def cut_index_of_direction(self, d):
        d = primitive(d)
        for i, c in enumerate(self.cuts):
            if primitive(c) == d:
                return i
        return None

    def with_cut_funcs(self, funcs):
        funcs = tuple(funcs)
        if len(funcs) != len(self.cuts):
            raise ValueError("need one localizing function per cut")
        grads = []
        for f in funcs:
            s0 = [m.vec for m in f.terms if self.weight(m) == 0 and not is_zero_vec(m.vec)]
            if s0:
                g = positive_functional(s0, self.rank)
                if g is None:
                    raise ValueError("cut function has no one-sided unit support")
            else:
                g = (0,) * self.rank
            grads.append(g)
        new = replace(self, cut_funcs=(), _gradings=tuple(grads))
        rebound = tuple(TruncatedPoly(new, f.terms) for f in funcs)
        object.__setattr__(new, "cut_funcs", rebound)
        return new

    def term_key(self, m: Exponent, grading=None):
        """Deterministic term order: (weight, optional unit grading, lex)."""
        g = vdot(grading, m.vec) if grading is not None else 0
        return (self.weight(m), g, m.vec, m.h)

    def grading_for_cut(self, i):
        return self._gradings[i] if self._gradings else None

    def unit_lattice(self):
        """Primitive basis of the unit exponents {ord_i = 0 for all i}."""
        rows = [tuple(lam) + (-1,) for lam in self.slopes]
        return int_nullspace(rows, self.rank + 1)

    def coset_reduce(self, m: Exponent):
        """Canonical representative of m modulo the unit lattice."""
        cur = lattice_reduce(tuple(m.vec) + (m.h,), self.unit_lattice())
        return Exponent(cur[:-1], cur[-1])


class TruncatedPoly:
    """Finite sum of rational multiples of monomials, truncated at order k."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx, terms=None):
        self.ctx = ctx
        clean = {}
        for m, c in (terms or {}).items():
            if not isinstance(m, Exponent):
                m = Exponent(tuple(m[0]), m[1])
            c = frac(c)
            if c == 0 or ctx.ord(m) > ctx.order:
                continue
            clean[m] = clean.get(m, Fraction(0)) + c
        self.terms = {m: c for m, c in clean.items() if c != 0}

    # -- constructors --------------------------------------------------

    @classmethod
    def zero(cls, ctx):
        return cls(ctx)

    @classmethod
    def one(cls, ctx):
        return cls(ctx, {Exponent((0,) * ctx.rank, 0): 1})

    @classmethod
    def monomial(cls, ctx, m, coeff=1):
        return cls(ctx, {m: coeff})

    # -- basics ---------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, TruncatedPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def constant_term(self):
        return self.terms.get(Exponent((0,) * self.ctx.rank, 0), Fraction(0))

    def support(self):
        return set(self.terms)

    def coeff(self, m):
        return self.terms.get(m, Fraction(0))

    def __repr__(self):
        if not self.terms:
            return "0"
        bits = []
        for m in sorted(self.terms, key=lambda e: (e.h, e.vec)):
            bits.append(f"{self.terms[m]}*z^{(tuple(m.vec), m.h)}")
        return " + ".join(bits)

    # -- ring operations -------------------------------------------------

    def _check(self, other):
        if not self.ctx.compatible(other.ctx):
            raise ContextMismatch("operands built over different contexts")
        return self.ctx if len(self.ctx.cut_funcs) >= len(other.ctx.cut_funcs) else other.ctx

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = TruncatedPoly(self.ctx, {Exponent((0,) * self.ctx.rank, 0): other})
        ctx = self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return TruncatedPoly(ctx, terms)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedPoly(self.ctx, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other if isinstance(other, TruncatedPoly) else TruncatedPoly(
            self.ctx, {Exponent((0,) * self.ctx.rank, 0): -frac(other)}))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return TruncatedPoly(self.ctx, {m: c * other for m, c in self.terms.items()})
        ctx = self._check(other)
        a, b = (self, other) if len(self.terms) <= len(other.terms) else (other, self)
        terms = {}
        k = ctx.order
        for m1, c1 in a.terms.items():
            for m2, c2 in b.terms.items():
                m = Exponent(tuple(x + y for x, y in zip(m1.vec, m2.vec)), m1.h + m2.h)
                if ctx.ord(m) > k:
                    continue
                terms[m] = terms.get(m, Fraction(0)) + c1 * c2
        return TruncatedPoly(ctx, terms)

    __rmul__ = __mul__

    def __pow__(self, e):
        if e < 0:
            raise ValueError("negative powers need unit_inverse()")
        out = TruncatedPoly.one(self.ctx)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base if e > 1 else base
            e >>= 1
        return out

    def map_exponents(self, fn):
        """Apply an exponent map (for chart transports); re-truncates."""
        return TruncatedPoly(self.ctx, {fn(m): c for m, c in self.terms.items()})

    def unit_inverse(self):
        """Inverse of a polynomial with nonzero constant term and nilpotent tail."""
        c0 = self.constant_term()
        if c0 == 0:
            raise NotUnit("no constant term")
        const = Exponent((0,) * self.ctx.rank, 0)
        eps = TruncatedPoly(self.ctx, {m: c / c0 for m, c in self.terms.items() if m != const})
        bad = [m for m in eps.terms if self.ctx.weight(m) == 0]
        if bad:
            raise NotUnit(f"tail contains non-nilpotent unit monomials {bad}")
        out = TruncatedPoly.one(self.ctx)
        power = TruncatedPoly.one(self.ctx)
        sign = 1
        while True:
            power = power * eps
            sign = -sign
            if power.is_zero():
                break
            out = out + power * sign
        return out * (1 / c0)


def _divide_slice(rhs: TruncatedPoly, f0: TruncatedPoly, grading):
    """Divide within one weight level by the weight-zero part of the divisor.

    All monomials of f0 except the constant are strictly positive under
    ``grading``, which bounds the quotient support and certifies failure.
    """
    ctx = rhs.ctx
    c0 = f0.constant_term()
    gval = (lambda m: vdot(grading, m.vec)) if grading is not None else (lambda m: 0)
    key = lambda m: (gval(m), m.vec, m.h)
    maxg = max(gval(m) for m in rhs.terms)
    quo = {}
    rem = rhs
    while not rem.is_zero():
        m = min(rem.terms, key=key)
        if gval(m) > maxg:
            raise NotDivisible(m)
        c = rem.terms[m] / c0
        quo[m] = c
        rem = rem - TruncatedPoly.monomial(ctx, m, c) * f0
    return TruncatedPoly(ctx, quo)


def try_divide(num: TruncatedPoly, f: TruncatedPoly, grading=None):
    """Exact quotient num / f in the truncated ring, or raise NotDivisible.

    f must have a nonzero constant term; its nonconstant zero-weight
    monomials must be strictly positive under ``grading`` (computed from the
    support when not given).  Coefficients are solved order by order: the
    total weight splits the problem into graded levels and the quotient at
    each level is a division by the weight-zero part of f.  The witness of
    failure is the first unreachable remainder monomial.
    """
    ctx = num.ctx
    if f.constant_term() == 0:
        raise NotUnit("divisor has no constant term")
    if num.is_zero():
        return TruncatedPoly.zero(ctx)
    f0 = TruncatedPoly(ctx, {m: c for m, c in f.terms.items() if ctx.weight(m) == 0})
    fpos = f - f0
    if any(ctx.weight(m) < 0 for m in f.terms):
        raise NotUnit("divisor has monomials of negative weight")
    if grading is None:
        s0 = [m.vec for m in f0.terms if not is_zero_vec(m.vec) or m.h]
        if s0:
            grading = positive_functional(s0, ctx.rank)
            if grading is None:
                raise NotUnit("divisor unit support admits no positive grading")
    levels = {}
    for m, c in num.terms.items():
        levels.setdefault(ctx.weight(m), {})[m] = c
    quo = TruncatedPoly.zero(ctx)
    guard = 0
    while levels:
        guard += 1
        if guard > 1000:
            raise RuntimeError("weight levels did not exhaust")
        w = min(levels)
        rhs = TruncatedPoly(ctx, levels.pop(w))
        if rhs.is_zero():
            continue
        qw = _divide_slice(rhs, f0, grading)
        quo = quo + qw
        if not fpos.is_zero():
            for m, c in (qw * fpos).terms.items():
                lvl = levels.setdefault(ctx.weight(m), {})
                lvl[m] = lvl.get(m, Fraction(0)) - c
    return quo


def divides(num, f, grading=None):
    try:
        return try_divide(num, f, grading)
    except NotDivisible:
        return None


class Localized:
    """num / prod(cut_funcs[i] ** den[i]) with the denominators symbolic."""

    __slots__ = ("num", "den")

    def __init__(self, num: TruncatedPoly, den=None):
        self.num = num
        self.den = tuple(den) if den is not None else (0,) * len(num.ctx.cut_funcs)
        if len(self.den) != len(num.ctx.cut_funcs):
            raise ContextMismatch("denominator index does not match context cuts")
        if any(d < 0 for d in self.den):
            raise ValueError("denominator exponents must be nonnegative")

    @property
    def ctx(self):
        return self.num.ctx

    @classmethod
    def from_poly(cls, p):
        return cls(p)

    @classmethod
    def one(cls, ctx):
        return cls(TruncatedPoly.one(ctx))

    @classmethod
    def zero(cls, ctx):
        return cls(TruncatedPoly.zero(ctx))

    def is_zero(self):
        return self.num.is_zero()

    def _lift(self, other):
        if isinstance(other, TruncatedPoly):
            return Localized(other)
        if isinstance(other, (int, Fraction)):
            return Localized(TruncatedPoly.one(self.ctx) * frac(other))
        return other

    def _common(self, other):
        den = tuple(max(a, b) for a, b in zip(self.den, other.den))
        def raise_to(x, target):
            num = x.num
            for i, (have, want) in enumerate(zip(x.den, target)):
                for _ in range(want - have):
                    num = num * x.ctx.cut_funcs[i]
            return num
        return raise_to(self, den), raise_to(other, den), den

    def __add__(self, other):
        other = self._lift(other)
        a, b, den = self._common(other)
        return Localized(a + b, den)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        a, b, den = self._common(other)
        return Localized(a - b, den)

    def __neg__(self):
        return Localized(-self.num, self.den)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Localized(self.num * other, self.den)
        other = self._lift(other)
        return Localized(self.num * other.num,
                         tuple(a + b for a, b in zip(self.den, other.den)))

    __rmul__ = __mul__

    def times_cut_power(self, i, a):
        """Multiply by cut_funcs[i] ** a for any integer a."""
        if a == 0:
            return self
        if a < 0:
            den = list(self.den)
            den[i] += -a
            return Localized(self.num, den)
        num = self.num
        drop = min(a, self.den[i])
        den = list(self.den)
        den[i] -= drop
        for _ in range(a - drop):
            num = num * self.ctx.cut_funcs[i]
        return Localized(num, den)

    def reduce(self):
        """Cancel cut-function factors from the numerator where possible."""
        num, den = self.num, list(self.den)
        for i, f in enumerate(self.ctx.cut_funcs):
            g = self.ctx.grading_for_cut(i)
            while den[i] > 0 and not num.is_zero():
                q = divides(num, f, g)
                if q is None:
                    break
                num, den[i] = q, den[i] - 1
        if num.is_zero():
            den = [0] * len(den)
        return Localized(num, den)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, TruncatedPoly)):
            other = self._lift(other)
        if not isinstance(other, Localized):
            return NotImplemented
        a, b, _ = self._common(other)
        return a == b

    def __hash__(self):
        raise TypeError("unhashable")

    def __repr__(self):
        if all(d == 0 for d in self.den):
            return repr(self.num)
        return f"({self.num!r}) / f^{self.den}"

    def as_poly(self):
        """The underlying polynomial if the reduced denominator is trivial, else None."""
        r = self.reduce()
        return r.num if all(d == 0 for d in r.den) else None

    def inverse(self):
        """Inverse of a unit: swap denominators, invert the reduced numerator."""
        r = self.reduce()
        inv_num = r.num.unit_inverse()
        out = Localized(inv_num)
        for i, d in enumerate(r.den):
            out = out.times_cut_power(i, d)
        return out


def localize_reduce(x: Localized) -> Localized:
    return x.reduce()
