"""Scattering diagrams at a joint and their order-by-order completion.

A diagram lives on the normal plane Q of a joint: cuts (the traces of the
codimension-one cells, carrying functions) and rays (half-lines carrying
binomials 1 + c z^m).  The loop product composes the wall-crossing
automorphisms counterclockwise; completion inserts outgoing rays, and in
codimension two corrections to the cut functions, until the loop defect
lands in the residual class permitted for the codimension.

Everything is computed in a single chart pinned at the joint's reference
vertex, so the underlying monoid maps of all crossings are trivial and the
denominators stay symbolic in the cut functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import Context, Exponent, Localized, TruncatedPoly
from .exact import (
    angle_from, angle_key, ccw_normal, cross2, frac, is_zero_vec, primitive,
    solve, vdot,
)
from .logauto import Automorphism, Derivation, adjoint, exp, log


class DenominatorError(Exception):
    """Completion requires an automorphism with slab-function denominators."""

    def __init__(self, direction, witness: Derivation):
        self.direction = direction
        self.witness = witness
        super().__init__(
            f"completion on ray {direction} needs denominators: {witness!r}")

    def witness_supports(self):
        """(numerator exponents, denominator index) of the blocked generator."""
        terms = self.witness.terms()
        nums = {m for m, cov, den in terms}
        den = terms[0][2] if terms else ()
        return nums, den


class InconsistentInput(Exception):
    pass


class UnsortableDiagram(Exception):
    pass


@dataclass(frozen=True)
class Ray:
    direction: tuple          # primitive Q-direction of the support half-line
    exponent: Exponent
    coeff: Fraction

    def __post_init__(self):
        object.__setattr__(self, "direction", primitive(self.direction))
        object.__setattr__(self, "coeff", frac(self.coeff))
        if is_zero_vec(self.direction):
            raise UnsortableDiagram("ray with zero direction")

    def classification(self, ctx: Context):
        q = ctx.qpart(self.exponent.vec)
        if is_zero_vec(q):
            return "undirectional"
        if primitive(q) == self.direction:
            return "incoming"
        if primitive((-q[0], -q[1])) == self.direction:
            return "outgoing"
        raise UnsortableDiagram("ray exponent not parallel to its support")


@dataclass(frozen=True)
class JointSpec:
    """Order-free geometry of a joint: chart rank, cuts and cell slopes."""

    rank: int
    cuts: tuple = ()
    slopes: tuple = ((0, 0),)

    def context(self, order, cut_terms=()):
        ctx = Context(rank=self.rank, order=order, slopes=self.slopes, cuts=self.cuts)
        if self.cuts:
            funcs = [TruncatedPoly(ctx, terms) for terms in cut_terms]
            ctx = ctx.with_cut_funcs(funcs)
        return ctx

    @property
    def codim(self):
        return Context(rank=self.rank, order=0, slopes=self.slopes, cuts=self.cuts).codim


class ScatteringDiagram:
    """Cuts with functions plus a finite set of rays around one joint."""

    def __init__(self, spec: JointSpec, cut_terms=None, rays=()):
        self.spec = spec
        self.cut_terms = [dict(t) for t in (cut_terms or [])]
        if len(self.cut_terms) != len(spec.cuts):
            raise InconsistentInput("need one cut function per cut")
        self.rays = list(rays)

    @classmethod
    def codim0(cls, rank, rays=()):
        return cls(JointSpec(rank=rank), rays=rays)

    def copy(self):
        return ScatteringDiagram(self.spec, [dict(t) for t in self.cut_terms],
                                 list(self.rays))

    @property
    def codim(self):
        return self.spec.codim

    def context(self, order) -> Context:
        return self.spec.context(order, self.cut_terms)

    def add_ray(self, ray: Ray):
        self.rays.append(ray)

    def add_cut_term(self, i, m: Exponent, coeff):
        t = self.cut_terms[i]
        t[m] = t.get(m, Fraction(0)) + frac(coeff)
        if t[m] == 0:
            del t[m]

    def __repr__(self):
        return (f"ScatteringDiagram(cuts={self.spec.cuts}, "
                f"rays={[(r.direction, tuple(r.exponent.vec), r.exponent.h, r.coeff) for r in self.rays]})")


@dataclass
class Crossing:
    kind: str                 # "cut" or "ray"
    index: int
    direction: tuple
    auto: Automorphism
    inv: Automorphism


def _ray_auto(ctx, ray: Ray, sign=1):
    f = TruncatedPoly.one(ctx) + TruncatedPoly.monomial(ctx, ray.exponent, ray.coeff)
    n = ccw_normal(ray.direction) + (0,) * (ctx.rank - 2)
    n = tuple(sign * x for x in n)
    return Automorphism.from_function(ctx, f, n)


def _cut_auto(ctx, i, sign=1):
    n = tuple(sign * x for x in ctx.cut_normal(i))
    return Automorphism.from_function(ctx, ctx.cut_funcs[i], n, cut_index=i)


def crossings(diagram: ScatteringDiagram, ctx: Context):
    """All crossings in counterclockwise order starting at the base direction."""
    base = diagram.spec.cuts[0] if diagram.spec.cuts else (1, 0)
    items = []
    for i in range(len(diagram.spec.cuts)):
        items.append(Crossing("cut", i, diagram.spec.cuts[i],
                              _cut_auto(ctx, i), _cut_auto(ctx, i, sign=-1)))
    for i, ray in enumerate(diagram.rays):
        ray.classification(ctx)
        items.append(Crossing("ray", i, ray.direction,
                              _ray_auto(ctx, ray), _ray_auto(ctx, ray, sign=-1)))
    items.sort(key=lambda cr: (angle_from(base, cr.direction), cr.kind == "ray", cr.index))
    return items


def loop_product(diagram: ScatteringDiagram, order, orientation=1) -> Automorphism:
    """Composition of all crossing automorphisms around the joint.

    orientation=+1 walks counterclockwise starting just before the first
    cut (or the positive x-direction when there are no cuts); -1 gives the
    inverse loop.
    """
    ctx = diagram.context(order)
    items = crossings(diagram, ctx)
    if orientation < 0:
        items = [Crossing(c.kind, c.index, c.direction, c.inv, c.auto)
                 for c in reversed(items)]
    theta = Automorphism.identity(ctx)
    for c in items:
        theta = c.auto.compose(theta)
    return theta


def defect(diagram: ScatteringDiagram, order) -> Derivation:
    return log(loop_product(diagram, order))


def _conjugate_forward(chunk: Derivation, prefix):
    """Ad by the partial loop (first crossing applied first)."""
    out = chunk
    for c in prefix:
        out = adjoint(c.auto, out, inv=c.inv)
    return out


# ---------------------------------------------------------------------------
# residual classes

def _unit_shift_candidates(ctx, support, tail_support, k):
    """Unit exponents u with t^k z^u s = q for q in support, s in tail_support."""
    out = set()
    tk = ctx.t_exp(k)
    for q in support:
        for s in tail_support:
            u = Exponent(tuple(a - b - c for a, b, c in
                               zip(q.vec, s.vec, tk.vec)), q.h - s.h - tk.h)
            if ctx.is_unit_exp(u):
                out.add(u)
    return sorted(out, key=lambda m: (m.h, m.vec))


def _line_candidates(ctx, support, tail_support, k):
    """On-line order-k exponents m with z^m s = q (codimension one)."""
    out = set()
    d = primitive(ctx.cuts[0])
    for q in support:
        for s in tail_support:
            m = Exponent(tuple(a - b for a, b in zip(q.vec, s.vec)), q.h - s.h)
            qp = ctx.qpart(m.vec)
            if not is_zero_vec(qp) and cross2(qp, d) != 0:
                continue
            if ctx.ord(m) == k and ctx.ord_min(m) == k:
                out.add(m)
    return sorted(out, key=lambda m: (m.h, m.vec))


def _basis_cov(ctx, i):
    return tuple(1 if j == i else 0 for j in range(ctx.rank))


class ResidualReport:
    """Outcome of matching a defect against the permitted residual class."""

    def __init__(self, ok, unit_part=None, line_part=None, leftover=None):
        self.ok = ok
        self.unit_part = unit_part or []     # [(u, covector)] of t^k z^u d_n terms
        self.line_part = line_part or []     # [(m, coeff)] over f_rho, codim one
        self.leftover = leftover             # Derivation when not ok

    def __bool__(self):
        return self.ok


def _cut_order0_part(ctx, i):
    """Monomials of the cut function of order zero on both adjacent cells."""
    r = ctx.n_cells()
    f = ctx.cut_funcs[i]
    adj = (i - 1) % r, i % r
    terms = {m: c for m, c in f.terms.items()
             if ctx.ord_on(m, adj[0]) == 0 and ctx.ord_on(m, adj[1]) == 0}
    return TruncatedPoly(ctx, terms)


def match_residual(ctx, xi: Derivation, k) -> ResidualReport:
    """Solve xi = allowed-class element exactly; linear algebra over Q."""
    entries = xi.terms()
    if not entries:
        return ResidualReport(True)
    den = entries[0][2]
    codim = ctx.codim
    ncuts = len(ctx.cuts)
    want = tuple(max(d, 1) for d in den) if codim == 2 else \
        (tuple(max(d, 1) for d in den) if codim == 1 else den)

    # multiplier M = prod f~^want * prod f0
    f0s = [_cut_order0_part(ctx, i) for i in range(ncuts)]
    mult = TruncatedPoly.one(ctx)
    for i in range(ncuts):
        for _ in range(want[i]):
            mult = mult * ctx.cut_funcs[i]
    for f0 in f0s:
        mult = mult * f0

    # xi coordinates over the multiplier
    nums = []
    for v in xi.vals:
        v = v.reduce()
        num = v.num
        for i in range(ncuts):
            for _ in range(want[i] - v.den[i]):
                num = num * ctx.cut_funcs[i]
        for f0 in f0s:
            num = num * f0
        nums.append(num)
    support = set()
    for num in nums:
        support |= set(num.terms)
    if not support:
        return ResidualReport(True)

    # generator columns
    gens = []
    if codim == 0:
        for m, cov, _ in entries:
            q = ctx.qpart(m.vec)
            if not is_zero_vec(q):
                return ResidualReport(False, leftover=xi)
        unit = [(m, cov) for m, cov, _ in entries]
        ok = all(not is_zero_vec(m.vec) for m, cov in unit)
        return ResidualReport(ok, unit_part=unit,
                              leftover=None if ok else xi)

    def poly_of_gen(base_exp, tail):
        return TruncatedPoly.monomial(ctx, base_exp, 1) * tail

    jperp = [0, 1]  # Lambda_j-perp is spanned by the two Q-coordinate covectors
    tail_unit = mult
    for u in _unit_shift_candidates(ctx, support, tail_unit.terms, k):
        base = Exponent(tuple(a + b for a, b in zip(u.vec, ctx.t_exp(k).vec)),
                        u.h + k)
        p = poly_of_gen(base, tail_unit)
        for i in jperp:
            gens.append((("unit", u, i), p, _basis_cov(ctx, i)))
    if codim == 2:
        for c in range(ncuts):
            tail = TruncatedPoly.one(ctx)
            for i in range(ncuts):
                reps = want[i] if i != c else want[i] - 1
                for _ in range(reps):
                    tail = tail * ctx.cut_funcs[i]
            tail = tail * ctx.cut_funcs[c] ** 0
            for i, f0 in enumerate(f0s):
                if i != c:
                    tail = tail * f0
            # denominator f0_c remains: multiply the rest only
            tail = tail * ctx.cut_funcs[c] if False else tail
            full_tail = tail
            # account for the full f~_c^want[c] power with f0_c removed once:
            for _ in range(want[c]):
                full_tail = full_tail * ctx.cut_funcs[c]
            for u in _unit_shift_candidates(ctx, support, full_tail.terms, k):
                base = Exponent(tuple(a + b for a, b in zip(u.vec, ctx.t_exp(k).vec)),
                                u.h + k)
                gens.append((("cut", c, u), poly_of_gen(base, full_tail),
                             ctx.cut_normal(c)))
    else:  # codim 1
        f0 = f0s[0]
        tail = TruncatedPoly.one(ctx)
        for i in range(ncuts):
            for _ in range(want[i]):
                tail = tail * ctx.cut_funcs[i]
        tail = tail * f0s[1] if ncuts > 1 else tail
        for m in _line_candidates(ctx, support, tail.terms, k):
            gens.append((("line", m), poly_of_gen(m, tail), ctx.cut_normal(0)))

    # solve: coordinates indexed by (exponent, basis index)
    coords = sorted(support, key=lambda m: (m.h, m.vec))
    coord_index = {}
    rows = []
    rhs = []
    for m in coords:
        for i in range(ctx.rank):
            coord_index[(m, i)] = len(rows)
            rows.append([Fraction(0)] * len(gens))
            rhs.append(nums[i].coeff(m))
    for gi, (label, p, cov) in enumerate(gens):
        for m, c in p.terms.items():
            for i in range(ctx.rank):
                if cov[i]:
                    key = (m, i)
                    if key not in coord_index:
                        return ResidualReport(False, leftover=xi)
                    rows[coord_index[key]][gi] += c * cov[i]
    sol = solve(rows, rhs) if gens else (None if any(rhs) else ())
    if sol is None:
        return ResidualReport(False, leftover=xi)
    unit_part, line_part = [], []
    for (label, p, cov), lam in zip(gens, sol):
        if lam == 0:
            continue
        if label[0] == "unit":
            unit_part.append((label[1], tuple(lam * x for x in cov)))
        elif label[0] == "line":
            line_part.append((label[1], lam))
        else:
            line_part.append((label, lam))
    return ResidualReport(True, unit_part=unit_part, line_part=line_part)


# ---------------------------------------------------------------------------
# completion

@dataclass
class CompletionResult:
    diagram: ScatteringDiagram
    residual: Derivation
    report: ResidualReport
    added_rays: list = field(default_factory=list)
    cut_additions: list = field(default_factory=list)


def _bad_entries(ctx, entries, codim):
    """Numerator entries whose direction is not allowed to remain."""
    bad = []
    for m, cov, den in entries:
        q = ctx.qpart(m.vec)
        if is_zero_vec(q):
            continue
        if codim == 1:
            d = primitive(ctx.cuts[0])
            if cross2(q, d) == 0:
                continue
        bad.append((m, cov, den))
    return bad


def _leading_key(ctx, base):
    def key(entry):
        m, cov, den = entry
        q = ctx.qpart(m.vec)
        neg = (-q[0], -q[1])
        return (ctx.weight(m), angle_from(base, neg), m.vec, m.h)
    return key


def ks_complete_codim0(diagram: ScatteringDiagram, order, reverse=False):
    """Kontsevich-Soibelman completion: insert outgoing rays at one order.

    Requires consistency at the previous order; all insertions commute at
    the working order, so a single pass suffices.
    """
    if diagram.codim != 0:
        raise InconsistentInput("ks completion expects a codimension-zero joint")
    if order >= 1 and not loop_product(diagram, order - 1).is_identity():
        raise InconsistentInput("input diagram is not consistent at the previous order")
    out = diagram.copy()
    ctx = out.context(order)
    xi = defect(out, order)
    entries = xi.terms()
    bad = _bad_entries(ctx, entries, 0)
    bad.sort(key=_leading_key(ctx, (1, 0)), reverse=reverse)
    added = []
    for m, cov, _ in bad:
        q = ctx.qpart(m.vec)
        direction = primitive((-q[0], -q[1]))
        n = ccw_normal(direction) + (0,) * (ctx.rank - 2)
        c = _solve_parallel(cov, n)
        if c is None:
            raise InconsistentInput(f"defect term at {m} has covector {cov} "
                                    f"not normal to its ray")
        ray = Ray(direction, m, -c)
        out.add_ray(ray)
        added.append(ray)
    res = defect(out, order)
    report = match_residual(out.context(order), res, order)
    return CompletionResult(out, res, report, added_rays=added)


def _solve_parallel(cov, n):
    """cov = c * n: the scalar c, or None when not parallel."""
    c = None
    for a, b in zip(cov, n):
        if b == 0:
            if a != 0:
                return None
        else:
            cc = Fraction(a, b) if not isinstance(a, Fraction) else a / b
            if c is None:
                c = cc
            elif c != cc:
                return None
    return c if c is not None else Fraction(0)


def naive_complete(diagram: ScatteringDiagram, order, reverse=False,
                   max_rounds=200):
    """Order-by-order completion with denominator detection.

    Cancels every defect term transverse to the cuts by inserting outgoing
    rays (or, when the required direction is a cut of a codimension-two
    joint, by adding order-k terms to that cut's function).  The required
    insertion is obtained by conjugating the leading bad part forward to
    its angular position; if it fails to be polynomial the denominator
    problem is reported with the offending automorphism as witness.
    """
    if diagram.codim == 0:
        return ks_complete_codim0(diagram, order, reverse=reverse)
    if order >= 1 and not loop_product(diagram, order - 1).is_identity():
        raise InconsistentInput("input diagram is not consistent at the previous order")
    out = diagram.copy()
    added_rays = []
    cut_additions = []
    for _ in range(max_rounds):
        ctx = out.context(order)
        xi = defect(out, order)
        entries = xi.terms()
        bad = _bad_entries(ctx, entries, out.codim)
        if not bad:
            report = match_residual(ctx, xi, order)
            if not report.ok:
                raise InconsistentInput(
                    f"defect does not land in the permitted residual class: {xi!r}")
            return CompletionResult(out, xi, report, added_rays, cut_additions)
        base = out.spec.cuts[0]
        bad.sort(key=_leading_key(ctx, base), reverse=reverse)
        m0, cov0, den = bad[0]
        q0 = ctx.qpart(m0.vec)
        direction = primitive((-q0[0], -q0[1]))
        coset0 = ctx.coset_reduce(m0)
        group = [(m, cov) for m, cov, _ in bad
                 if ctx.coset_reduce(m) == coset0]
        chunk_vals = []
        for i in range(ctx.rank):
            terms = {m: cov[i] for m, cov in group if cov[i]}
            chunk_vals.append(Localized(TruncatedPoly(ctx, terms), den))
        chunk = Derivation(ctx, chunk_vals)

        items = crossings(out, ctx)
        cut_idx = ctx.cut_index_of_direction(direction)
        pos_key = angle_from(base, direction)
        if cut_idx is not None:
            prefix = [c for c in items
                      if angle_from(base, c.direction) < pos_key]
        else:
            prefix = [c for c in items
                      if angle_from(base, c.direction) < pos_key]
        required = _conjugate_forward(chunk, prefix).scale(-1)

        if cut_idx is not None and out.codim == 2:
            _apply_cut_addition(out, ctx, cut_idx, required, cut_additions)
        elif cut_idx is not None:
            raise InconsistentInput(
                "codimension-one defect along the cut line cannot be cancelled here")
        else:
            _apply_ray_insertions(out, ctx, direction, required, added_rays)
    raise RuntimeError("completion did not converge")


def _require_poly(required: Derivation, direction):
    vals = [v.reduce() for v in required.vals]
    if any(any(d > 0 for d in v.den) for v in vals):
        raise DenominatorError(direction, required)
    return vals


def _apply_ray_insertions(out, ctx, direction, required, added_rays):
    vals = _require_poly(required, direction)
    n = ccw_normal(direction) + (0,) * (ctx.rank - 2)
    support = set()
    for v in vals:
        support |= set(v.num.terms)
    for m in sorted(support, key=lambda e: (e.h, e.vec)):
        cov = tuple(v.num.coeff(m) for v in vals)
        c = _solve_parallel(cov, n)
        if c is None:
            raise DenominatorError(direction, required)
        q = ctx.qpart(m.vec)
        if is_zero_vec(q) or primitive((-q[0], -q[1])) != primitive(direction):
            raise DenominatorError(direction, required)
        ray = Ray(direction, m, -c)
        out.add_ray(ray)
        added_rays.append(ray)


def _apply_cut_addition(out, ctx, cut_idx, required, cut_additions):
    # required must equal sum of -c z^m / f_c d_{n_c}
    n = ctx.cut_normal(cut_idx)
    lifted = Derivation(ctx, [v.times_cut_power(cut_idx, 1) for v in required.vals])
    vals = [v.reduce() for v in lifted.vals]
    if any(any(d > 0 for d in v.den) for v in vals):
        raise DenominatorError(ctx.cuts[cut_idx], required)
    support = set()
    for v in vals:
        support |= set(v.num.terms)
    for m in sorted(support, key=lambda e: (e.h, e.vec)):
        cov = tuple(v.num.coeff(m) for v in vals)
        c = _solve_parallel(cov, n)
        if c is None:
            raise DenominatorError(ctx.cuts[cut_idx], required)
        q = ctx.qpart(m.vec)
        if not is_zero_vec(q) and cross2(q, ctx.cuts[cut_idx]) != 0:
            raise DenominatorError(ctx.cuts[cut_idx], required)
        out.add_cut_term(cut_idx, m, -c)
        cut_additions.append((cut_idx, m, -c))


# ---------------------------------------------------------------------------
# equivalence and simple modifications

def diagrams_equivalent(d1: ScatteringDiagram, d2: ScatteringDiagram, order) -> bool:
    """Equivalence modulo the order ideal: ray products per (exponent, side)
    agree and cut functions agree up to order."""
    if d1.spec != d2.spec:
        return False
    ctx = d1.context(order)
    ctx2 = d2.context(order)

    def ray_products(d, ctx):
        prods = {}
        for ray in d.rays:
            q = ctx.qpart(ray.exponent.vec)
            if is_zero_vec(q):
                eps = 0
            else:
                eps = 1 if primitive(q) == ray.direction else -1
            key = (ray.exponent, eps)
            f = TruncatedPoly.one(ctx) + TruncatedPoly.monomial(ctx, ray.exponent, ray.coeff)
            prods[key] = prods.get(key, TruncatedPoly.one(ctx)) * f
        return prods

    p1, p2 = ray_products(d1, ctx), ray_products(d2, ctx2)
    for key in set(p1) | set(p2):
        a = p1.get(key, TruncatedPoly.one(ctx))
        b = p2.get(key, TruncatedPoly.one(ctx2))
        if a != b:
            return False
    for t1, t2 in zip(d1.cut_terms, d2.cut_terms):
        f1 = TruncatedPoly(ctx, t1)
        f2 = TruncatedPoly(ctx, t2)
        if f1 != f2:
            return False
    return True


def perturb_cut(diagram: ScatteringDiagram, cut_index, m: Exponent, coeff, order):
    """Add c z^m to a cut function; returns the new diagram and the predicted
    extra loop factor exp(-c z^m / f_c d_{n_c})."""
    ctx = diagram.context(order)
    if ctx.ord(m) != order:
        raise InconsistentInput("cut perturbations must have top order")
    out = diagram.copy()
    out.add_cut_term(cut_index, m, coeff)
    mono = Localized(TruncatedPoly.monomial(ctx, m, -frac(coeff))).times_cut_power(cut_index, -1)
    delta = exp(Derivation.from_terms(ctx, [(mono, ctx.cut_normal(cut_index))]))
    return out, delta


def add_undirectional_ray(diagram: ScatteringDiagram, direction, m: Exponent,
                          coeff, order):
    """Add an undirectional ray; returns new diagram and predicted factor."""
    ctx = diagram.context(order)
    if ctx.ord(m) != order:
        raise InconsistentInput("undirectional rays must have top order")
    out = diagram.copy()
    ray = Ray(direction, m, coeff)
    if ray.classification(ctx) != "undirectional":
        raise InconsistentInput("exponent must project to zero for an undirectional ray")
    out.add_ray(ray)
    n = ccw_normal(primitive(direction)) + (0,) * (ctx.rank - 2)
    mono = Localized(TruncatedPoly.monomial(ctx, m, -frac(coeff)))
    delta = exp(Derivation.from_terms(ctx, [(mono, n)]))
    return out, delta
