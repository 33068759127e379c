"""Log derivations and log automorphisms of the truncated rings.

A derivation is an additive map from the chart lattice into the ring,
stored by its values on the standard basis; it acts on the ring by
z^m |-> xi(m) z^m.  An automorphism is a multiplicative map into the units,
stored the same way, acting by z^m |-> theta(m) z^(beta m) where beta is an
optional affine exponent map (parallel transport); beta is the identity in
all joint-local computations.

exp and log are mutually inverse between derivations supported above order
zero and automorphisms congruent to 1 there; both series terminate because
the total weight of every surviving monomial is bounded by the truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import Context, ContextMismatch, Exponent, Localized, NotUnit, TruncatedPoly
from .exact import is_zero_vec, vdot


def _as_localized(ctx, x):
    if isinstance(x, Localized):
        return x
    if isinstance(x, TruncatedPoly):
        return Localized(x)
    return Localized(TruncatedPoly.one(ctx) * Fraction(x))


@dataclass(frozen=True)
class ExpMap:
    """Integral affine map on exponents: vec |-> A vec, with the affine part
    adjusted so orders on a reference cell are preserved."""

    matrix: tuple
    h_shift: tuple  # covector applied to vec, added to h

    def __call__(self, m: Exponent) -> Exponent:
        vec = tuple(vdot(row, m.vec) for row in self.matrix)
        return Exponent(vec, m.h + vdot(self.h_shift, m.vec))

    @classmethod
    def identity(cls, rank):
        return cls(tuple(tuple(1 if i == j else 0 for j in range(rank)) for i in range(rank)),
                   (0,) * rank)

    def compose(self, other):
        """self o other on exponents."""
        from .exact import mat_mul
        matrix = mat_mul(self.matrix, other.matrix)
        shift = tuple(o + vdot(self.h_shift, col)
                      for o, col in zip(other.h_shift, zip(*other.matrix)))
        return ExpMap(matrix, shift)


class Derivation:
    """Log derivation, stored as the tuple of values on the basis covectors."""

    __slots__ = ("ctx", "vals")

    def __init__(self, ctx: Context, vals):
        self.ctx = ctx
        self.vals = tuple(_as_localized(ctx, v) for v in vals)
        if len(self.vals) != ctx.rank:
            raise ContextMismatch("need one value per lattice basis vector")

    @classmethod
    def zero(cls, ctx):
        return cls(ctx, (Localized.zero(ctx),) * ctx.rank)

    @classmethod
    def from_terms(cls, ctx, terms):
        """Build sum of a*d_n from (coefficient, covector) pairs."""
        vals = [Localized.zero(ctx) for _ in range(ctx.rank)]
        for coeff, n in terms:
            coeff = _as_localized(ctx, coeff)
            for i, ni in enumerate(n):
                if ni:
                    vals[i] = vals[i] + coeff * ni
        return cls(ctx, vals)

    def value(self, m) -> Localized:
        """xi(m): the additive map evaluated on an exponent or lattice vector."""
        vec = m.vec if isinstance(m, Exponent) else m
        out = Localized.zero(self.ctx)
        for x, v in zip(vec, self.vals):
            if x:
                out = out + v * x
        return out

    def is_zero(self):
        return all(v.reduce().is_zero() for v in self.vals)

    def __add__(self, other):
        return Derivation(self.ctx, [a + b for a, b in zip(self.vals, other.vals)])

    def __sub__(self, other):
        return Derivation(self.ctx, [a - b for a, b in zip(self.vals, other.vals)])

    def __neg__(self):
        return Derivation(self.ctx, [-a for a in self.vals])

    def scale(self, c):
        return Derivation(self.ctx, [a * c for a in self.vals])

    def apply_to(self, x):
        """The ring derivation: z^m |-> xi(m) z^m, extended by Leibniz to quotients."""
        x = _as_localized(self.ctx, x)
        num = Localized.zero(self.ctx)
        for m, c in x.num.terms.items():
            num = num + self.value(m) * Localized(TruncatedPoly.monomial(self.ctx, m, c))
        out = Localized(num.num, tuple(a + b for a, b in zip(num.den, x.den)))
        for i, d in enumerate(x.den):
            if d:
                f = Localized(self.ctx.cut_funcs[i])
                df = self.apply_to(f)
                out = out - x * df.times_cut_power(i, -1) * d
        return out

    def compose_value(self, other, m):
        """(xi o eta)(m) = xi(m) eta(m) + xi-bar(eta(m)); the higher log differential."""
        em = other.value(m)
        return self.value(m) * em + self.apply_to(em)

    def bracket(self, other):
        vals = []
        for i in range(self.ctx.rank):
            e = Exponent(tuple(1 if j == i else 0 for j in range(self.ctx.rank)), 0)
            vals.append(self.compose_value(other, e) - other.compose_value(self, e))
        return Derivation(self.ctx, vals)

    def terms(self):
        """Decomposition into (exponent, covector of rationals, denominator index).

        All values are brought over a common denominator first, so the
        reported exponents are numerator monomials relative to that index.
        """
        vals = [v.reduce() for v in self.vals]
        if not vals:
            return []
        den = tuple(max(ds) for ds in zip(*(v.den for v in vals)))
        nums = []
        for v in vals:
            num = v.num
            for i in range(len(den)):
                for _ in range(den[i] - v.den[i]):
                    num = num * self.ctx.cut_funcs[i]
            nums.append(num)
        support = set()
        for num in nums:
            support |= set(num.terms)
        out = []
        for m in sorted(support, key=lambda e: (e.h, e.vec)):
            cov = tuple(num.coeff(m) for num in nums)
            out.append((m, cov, den))
        return out

    def __repr__(self):
        return "Derivation(" + ", ".join(repr(v) for v in self.vals) + ")"


class Automorphism:
    """Log automorphism, stored by its unit values on the basis covectors."""

    __slots__ = ("ctx", "vals", "expmap")

    def __init__(self, ctx, vals, expmap=None):
        self.ctx = ctx
        self.vals = tuple(_as_localized(ctx, v) for v in vals)
        self.expmap = expmap

    @classmethod
    def identity(cls, ctx):
        return cls(ctx, (Localized.one(ctx),) * ctx.rank)

    @classmethod
    def from_function(cls, ctx, f, n, cut_index=None):
        """theta(m) = f^(-<m, n>); the basic wall/slab crossing.

        When ``cut_index`` is given, f must be the corresponding cut function
        and negative powers stay symbolic; otherwise f must be 1 + nilpotent.
        """
        vals = []
        for i in range(ctx.rank):
            e = -n[i]
            if cut_index is not None:
                vals.append(Localized.one(ctx).times_cut_power(cut_index, e))
            else:
                if e >= 0:
                    vals.append(Localized(f ** e))
                else:
                    vals.append(Localized(f.unit_inverse() ** (-e)))
        return cls(ctx, vals)

    def value(self, m) -> Localized:
        vec = m.vec if isinstance(m, Exponent) else m
        out = Localized.one(self.ctx)
        for x, v in zip(vec, self.vals):
            if x > 0:
                for _ in range(x):
                    out = out * v
            elif x < 0:
                inv = v.inverse()
                for _ in range(-x):
                    out = out * inv
        return out

    def apply_to(self, x):
        """The ring map: z^m |-> theta(m) z^(beta m).

        Denominators transform by theta(f_i) = f_i * u_i with u_i a unit
        congruent to 1 above order zero; that keeps the result localized.
        """
        poly_only = isinstance(x, TruncatedPoly)
        x = _as_localized(self.ctx, x)
        beta = self.expmap if self.expmap is not None else (lambda m: m)
        out = Localized.zero(self.ctx)
        for m, c in x.num.terms.items():
            mono = Localized(TruncatedPoly.monomial(self.ctx, beta(m), c))
            out = out + self.value(m) * mono
        for i, d in enumerate(x.den):
            if d:
                img = _as_localized(self.ctx, self.apply_to(self.ctx.cut_funcs[i]))
                u = img.times_cut_power(i, -1).reduce()   # theta(f_i)/f_i, a unit
                inv = u.inverse().times_cut_power(i, -1)  # theta(f_i)^(-1)
                out = out * _loc_pow(inv, d)
        if poly_only and all(d == 0 for d in x.den):
            p = out.as_poly()
            if p is not None:
                return p
        return out

    def compose(self, other):
        """self o other; apply other first."""
        if self.expmap is None and other.expmap is None:
            expmap = None
        else:
            b1 = self.expmap or ExpMap.identity(self.ctx.rank)
            b2 = other.expmap or ExpMap.identity(self.ctx.rank)
            expmap = b1.compose(b2)
        vals = []
        for i in range(self.ctx.rank):
            e = Exponent(tuple(1 if j == i else 0 for j in range(self.ctx.rank)), 0)
            b2e = other.expmap(e) if other.expmap else e
            vals.append(self.apply_to(other.value(e)) * self.value(b2e.vec))
        return Automorphism(self.ctx, vals, expmap)

    def is_identity(self):
        one = Localized.one(self.ctx)
        ok = all(v == one for v in self.vals)
        if self.expmap is not None:
            ok = ok and all(self.expmap(Exponent(tuple(1 if j == i else 0
                                                       for j in range(self.ctx.rank)), 0))
                            == Exponent(tuple(1 if j == i else 0
                                              for j in range(self.ctx.rank)), 0)
                            for i in range(self.ctx.rank))
        return ok

    def inverse(self):
        if self.expmap is not None:
            raise NotImplementedError("inverse only for chart-pinned automorphisms")
        return exp(log(self).scale(-1))

    def __eq__(self, other):
        if not isinstance(other, Automorphism):
            return NotImplemented
        return all(a == b for a, b in zip(self.vals, other.vals)) and \
            (self.expmap is None) == (other.expmap is None)

    def __repr__(self):
        return "Automorphism(" + ", ".join(repr(v.reduce()) for v in self.vals) + ")"


def _loc_pow(x, e):
    out = Localized.one(x.ctx)
    for _ in range(e):
        out = out * x
    return out


def exp(xi: Derivation) -> Automorphism:
    """exp(xi)(m) = 1 + sum xi^i(m)/i!; finite by nilpotency above order zero."""
    ctx = xi.ctx
    vals = []
    for i in range(ctx.rank):
        e = Exponent(tuple(1 if j == i else 0 for j in range(ctx.rank)), 0)
        total = Localized.one(ctx)
        power = xi.value(e)
        fact = 1
        step = 1
        while not power.reduce().is_zero():
            total = total + power * Fraction(1, fact)
            step += 1
            fact *= step
            power = xi.value(e) * power + xi.apply_to(power)
            if step > 4 * ctx.order * ctx.n_cells() + 8:
                raise NotUnit("exp did not terminate; derivation not nilpotent")
        vals.append(total)
    return Automorphism(ctx, vals)


def log(theta: Automorphism) -> Derivation:
    """Inverse of exp via N_i = theta * (theta-bar o N_(i-1)) - N_(i-1)."""
    if theta.expmap is not None:
        raise NotUnit("log only for chart-pinned automorphisms")
    ctx = theta.ctx
    vals = []
    for i in range(ctx.rank):
        e = Exponent(tuple(1 if j == i else 0 for j in range(ctx.rank)), 0)
        n = theta.value(e) - 1
        total = Localized.zero(ctx)
        sign = 1
        idx = 1
        while not n.reduce().is_zero():
            total = total + n * Fraction(sign, idx)
            n_next = theta.value(e) * theta.apply_to(n) - n
            sign, idx = -sign, idx + 1
            n = n_next
            if idx > 4 * ctx.order * ctx.n_cells() + 8:
                raise NotUnit("log did not terminate; automorphism not unipotent")
        vals.append(total)
    return Derivation(ctx, vals)


def adjoint(theta: Automorphism, xi: Derivation) -> Derivation:
    """Ad_theta xi = (theta-bar o xi-bar o theta^{-1}) * theta + theta-bar o xi."""
    ctx = theta.ctx
    inv = theta.inverse()
    vals = []
    for i in range(ctx.rank):
        e = Exponent(tuple(1 if j == i else 0 for j in range(ctx.rank)), 0)
        first = theta.apply_to(xi.apply_to(inv.value(e))) * theta.value(e)
        second = theta.apply_to(xi.value(e))
        vals.append(first + second)
    return Derivation(ctx, vals)


def conjugate_simple(h, n0, coeff, m: Exponent, n) -> Derivation:
    """Closed form for Ad by theta: m |-> h^(-<m,n0>) on coeff * z^m d_n.

    Valid when n0 annihilates every exponent of h; returns
    z^m (h^(-<m,n0>) d_n + h^(-<m,n0>-1) (d_n h) d_(n0)) scaled by coeff.
    """
    ctx = h.ctx if isinstance(h, TruncatedPoly) else h.num.ctx
    hloc = _as_localized(ctx, h)
    a = -vdot(m.vec, n0)
    hpow = _loc_pow(hloc, a) if a >= 0 else _loc_pow(hloc.inverse(), -a)
    mono = Localized(TruncatedPoly.monomial(ctx, m, coeff))
    dnh = Derivation.from_terms(ctx, [(Localized.one(ctx), n)]).apply_to(hloc)
    lead = mono * hpow
    corr = mono * hpow * hloc.inverse() * dnh
    return Derivation.from_terms(ctx, [(lead, n), (corr, n0)])


# ---------------------------------------------------------------------------
# classification into the distinguished subalgebras

def classify(xi: Derivation, joint_dirs, cone=None):
    """Membership flags of each (exponent, covector) term of xi.

    joint_dirs: basis of the tangent directions of the joint inside the
    chart lattice (the codimension-two subspace).  Returns a list of
    (exponent, flagset) pairs with flags among g, h-tilde, h, h-perp,
    h-par, h-cone.
    """
    ctx = xi.ctx
    out = []
    for m, cov, den in xi.terms():
        flags = set()
        in_j_perp = _perp_to(cov, joint_dirs)
        mbar_zero = is_zero_vec(m.vec)
        mbar_in_j = _in_span(m.vec, joint_dirs)
        pairing = vdot(m.vec, cov)
        if in_j_perp:
            flags.add("g")
            if pairing == 0:
                flags.add("h-tilde")
                if not mbar_zero:
                    flags.add("h")
                    if not mbar_in_j:
                        flags.add("h-perp")
                if cone is not None and not mbar_zero:
                    q = ctx.qpart(m.vec)
                    if _neg_in_cone(q, cone):
                        flags.add("h-cone")
            if mbar_in_j and not mbar_zero:
                flags.add("h-par")
        out.append((m, frozenset(flags)))
    return out


def _perp_to(cov, dirs):
    return all(vdot(cov, d) == 0 for d in dirs)


def _in_span(vec, dirs):
    from .exact import solve
    if is_zero_vec(vec):
        return True
    if not dirs:
        return False
    cols = list(zip(*dirs))
    sol = solve(cols, vec)
    return sol is not None


def _neg_in_cone(q, cone):
    from .exact import cross2
    a, b = cone
    p = (-q[0], -q[1])
    if p == (0, 0):
        return False
    return cross2(a, p) >= 0 and cross2(p, b) >= 0


def preserves_volume(x) -> bool:
    """True iff the standard log volume form is preserved.

    For a derivation this is <m, n> = 0 for every term; for an automorphism
    the pullback of the form is computed exactly.
    """
    if isinstance(x, Derivation):
        return all(vdot(m.vec, cov) == 0 for m, cov, _ in x.terms())
    theta = x
    ctx = theta.ctx
    n = ctx.rank
    rows = []
    for i in range(n):
        e = Exponent(tuple(1 if j == i else 0 for j in range(n)), 0)
        ti = theta.value(e)
        dlog = []
        for j in range(n):
            ej = tuple(1 if l == j else 0 for l in range(n))
            dv = Derivation.from_terms(ctx, [(Localized.one(ctx), ej)]).apply_to(ti)
            dlog.append(dv * ti.inverse())
        rows.append(dlog)
    det = _ring_det(ctx, rows)
    return det == Localized.one(ctx)


def _ring_det(ctx, rows):
    n = len(rows)
    from itertools import permutations
    total = Localized.zero(ctx)
    for perm in permutations(range(n)):
        sign = 1
        seen = list(perm)
        for i in range(n):
            for j in range(i + 1, n):
                if seen[i] > seen[j]:
                    sign = -sign
        term = Localized.one(ctx)
        for i in range(n):
            entry = rows[i][perm[i]] if perm[i] != i else rows[i][perm[i]] + 1
            term = term * entry
        total = total + term * sign
    return total
