"""Exact rational arithmetic helpers: vectors, matrices, lattice utilities.

Everything in this package computes over Q (``fractions.Fraction``) or Z.
Vectors are plain tuples, matrices are tuples of row tuples.  Dimensions
are tiny (rank <= 4), so simplicity beats asymptotics throughout.
"""

from __future__ import annotations

import functools
import math
from fractions import Fraction


def frac(x) -> Fraction:
    """Parse an exact rational from ``int``, ``Fraction`` or a ``"p/q"`` string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if "/" in s:
            p, q = s.split("/")
            return Fraction(int(p), int(q))
        return Fraction(int(s))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)


# ---------------------------------------------------------------------------
# vectors

def vadd(a, b):
    return tuple(x + y for x, y in zip(a, b, strict=True))


def vsub(a, b):
    return tuple(x - y for x, y in zip(a, b, strict=True))


def vneg(a):
    return tuple(-x for x in a)


def vscale(c, a):
    return tuple(c * x for x in a)


def vdot(a, b):
    return sum(x * y for x, y in zip(a, b, strict=True))


def is_zero_vec(a):
    return all(x == 0 for x in a)


def primitive(v):
    """Divide an integer vector by the gcd of its entries (0 stays 0)."""
    g = 0
    for x in v:
        g = math.gcd(g, abs(int(x)))
    if g == 0:
        return tuple(int(x) for x in v)
    return tuple(int(x) // g for x in v)


def to_int_vec(v):
    """Clear denominators: smallest positive multiple of v with integer entries."""
    v = tuple(Fraction(x) for x in v)
    lcm = 1
    for x in v:
        lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
    return tuple(int(x * lcm) for x in v)


# ---------------------------------------------------------------------------
# matrices (tuple of rows)

def mat_vec(a, v):
    return tuple(vdot(row, v) for row in a)


def mat_mul(a, b):
    bt = tuple(zip(*b))
    return tuple(tuple(vdot(row, col) for col in bt) for row in a)


def identity(n):
    return tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))


def transpose(a):
    return tuple(zip(*a))


def det(a):
    a = [list(map(Fraction, row)) for row in a]
    n = len(a)
    d = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            d = -d
        d *= a[c][c]
        inv = 1 / a[c][c]
        for r in range(c + 1, n):
            if a[r][c]:
                f = a[r][c] * inv
                for j in range(c, n):
                    a[r][j] -= f * a[c][j]
    return d


def mat_inv(a):
    n = len(a)
    aug = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(a)]
    for c in range(n):
        piv = next((r for r in range(c, n) if aug[r][c] != 0), None)
        if piv is None:
            raise ValueError("matrix is singular")
        aug[c], aug[piv] = aug[piv], aug[c]
        inv = 1 / aug[c][c]
        aug[c] = [x * inv for x in aug[c]]
        for r in range(n):
            if r != c and aug[r][c]:
                f = aug[r][c]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[c])]
    return tuple(tuple(row[n:]) for row in aug)


def mat_int(a):
    out = []
    for row in a:
        r = []
        for x in row:
            x = Fraction(x)
            if x.denominator != 1:
                raise ValueError("expected an integer matrix")
            r.append(int(x))
        out.append(tuple(r))
    return tuple(out)


def solve(a, b):
    """One solution of A x = b over Q, or None if inconsistent.

    A is given as a list of rows; the system may be over- or underdetermined
    (free variables are set to 0).
    """
    rows = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(a, b, strict=True)]
    n = len(a[0]) if a else 0
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    for i in range(r, len(rows)):
        if rows[i][n] != 0:
            return None
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = rows[i][n]
    return tuple(x)


def nullspace(a, n=None):
    """Rational basis of the kernel of A (rows in Q^n)."""
    if n is None:
        n = len(a[0]) if a else 0
    rows = [list(map(Fraction, row)) for row in a]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -rows[i][f]
        basis.append(tuple(v))
    return basis


def int_nullspace(a, n=None):
    """Integer basis (primitive generators) of the kernel lattice of A."""
    return [primitive(to_int_vec(v)) for v in nullspace(a, n)]


def hnf_rows(rows):
    """Row Hermite-ish normal form of an integer lattice basis.

    Returns rows with strictly increasing pivot columns, positive pivots,
    and zeros below each pivot; suitable for canonical coset reduction.
    """
    rows = [list(r) for r in rows if any(r)]
    if not rows:
        return []
    m = len(rows[0])
    out = []
    col = 0
    while rows and col < m:
        while True:
            cand = [r for r in rows if r[col] != 0]
            if len(cand) <= 1:
                break
            cand.sort(key=lambda r: abs(r[col]))
            p = cand[0]
            for r in cand[1:]:
                q = r[col] // p[col]
                for j in range(m):
                    r[j] -= q * p[j]
        p = next((r for r in rows if r[col] != 0), None)
        if p is not None:
            if p[col] < 0:
                p[:] = [-x for x in p]
            rows.remove(p)
            rows = [r for r in rows if any(r)]
            out.append(tuple(p))
        col += 1
    return out


def lattice_reduce(vec, basis):
    """Canonical representative of vec modulo the integer lattice spanned by basis."""
    cur = list(vec)
    for row in hnf_rows(basis):
        piv = next(j for j, x in enumerate(row) if x != 0)
        q = cur[piv] // row[piv]
        if q:
            cur = [c - q * x for c, x in zip(cur, row)]
    return tuple(cur)


# ---------------------------------------------------------------------------
# 2D angular order (no floats)

def _quadrant(d):
    x, y = d
    if x > 0 and y == 0:
        return 0
    if x > 0 and y > 0:
        return 1
    if x == 0 and y > 0:
        return 2
    if x < 0 < y:
        return 3
    if x < 0 and y == 0:
        return 4
    if x < 0 and y < 0:
        return 5
    if x == 0 and y < 0:
        return 6
    if x > 0 > y:
        return 7
    raise ValueError("zero direction has no angle")


def angle_key(d):
    """Sort key realizing the counterclockwise order of 2D directions from (1,0).

    Directions are nonzero integer pairs; equal directions get equal keys.
    """
    q = _quadrant(d)
    x, y = d
    if q in (1, 7):
        slope = Fraction(y, x)
    elif q in (3, 5):
        slope = Fraction(-x, y)
    else:
        slope = Fraction(0)
    return (q, slope)


def ccw_sorted(dirs):
    return sorted(dirs, key=angle_key)


def angle_from(base, d):
    """Angular position of d measured counterclockwise from base (base itself = smallest)."""
    kb, kd = angle_key(base), angle_key(d)
    return (kd < kb, kd)


def cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def ccw_normal(d):
    """Primitive covector vanishing on d, positive on the counterclockwise side."""
    d = primitive(d)
    return (-d[1], d[0])


# ---------------------------------------------------------------------------
# positive functionals and 2D hulls

def positive_functional(points, n=None):
    """An integer covector strictly positive on every given nonzero point.

    Returns None when no such functional exists.  Uses the fact that a
    suitable functional, if any, can be found among sums of coordinate
    covectors of the points themselves (all inputs are tiny); falls back to
    a small grid search.
    """
    pts = [tuple(p) for p in points if not is_zero_vec(p)]
    if not pts:
        return None
    if n is None:
        n = len(pts[0])
    cands = []
    s = tuple(sum(c) for c in zip(*pts))
    cands.append(s)
    cands.extend(pts)
    for rng in (1, 2, 3):
        from itertools import product
        for cand in cands + [v for v in product(range(-rng, rng + 1), repeat=n)]:
            if not is_zero_vec(cand) and all(vdot(cand, p) > 0 for p in pts):
                return tuple(int(x) for x in cand)
    return None


def hull2d(points):
    """Vertices of the convex hull of 2D rational points, counterclockwise.

    Collinear input collapses to the two extreme points (or one).
    """
    pts = sorted(set(tuple(map(Fraction, p)) for p in points))
    if len(pts) <= 2:
        return pts
    def half(pp):
        out = []
        for p in pp:
            while len(out) >= 2 and cross2(vsub(out[-1], out[-2]), vsub(p, out[-2])) <= 0:
                out.pop()
            out.append(p)
        return out
    lower = half(pts)
    upper = half(list(reversed(pts)))
    hull = lower[:-1] + upper[:-1]
    return hull if len(hull) >= 2 else pts[:1]


def lattice_points_2d(vertices):
    """All integral points of a bounded 2D polytope given by its vertices."""
    verts = [tuple(map(Fraction, v)) for v in vertices]
    hull = hull2d(verts)
    if not hull:
        return []
    xs = [v[0] for v in verts]
    ys = [v[1] for v in verts]
    out = []
    for x in range(math.ceil(min(xs)), math.floor(max(xs)) + 1):
        for y in range(math.ceil(min(ys)), math.floor(max(ys)) + 1):
            if point_in_hull2d((x, y), hull):
                out.append((x, y))
    return out


def point_in_hull2d(p, hull):
    p = tuple(map(Fraction, p))
    if len(hull) == 1:
        return p == hull[0]
    if len(hull) == 2:
        a, b = hull
        if cross2(vsub(b, a), vsub(p, a)) != 0:
            return False
        t = vdot(vsub(p, a), vsub(b, a))
        return 0 <= t <= vdot(vsub(b, a), vsub(b, a))
    for i in range(len(hull)):
        a, b = hull[i], hull[(i + 1) % len(hull)]
        if cross2(vsub(b, a), vsub(p, a)) < 0:
            return False
    return True


# ---------------------------------------------------------------------------
# symbolic epsilon offsets

@functools.total_ordering
class EpsRational:
    """A rational number plus a formal infinitesimal multiple: q + s*eps.

    Used for discriminant points: tie-breaking predicates become exact
    lexicographic comparisons on (q, s).
    """

    __slots__ = ("q", "s")

    def __init__(self, q, s=0):
        self.q = Fraction(q)
        self.s = int(s)

    def __eq__(self, other):
        other = _as_eps(other)
        return (self.q, self.s) == (other.q, other.s)

    def __lt__(self, other):
        other = _as_eps(other)
        return (self.q, self.s) < (other.q, other.s)

    def __hash__(self):
        return hash((self.q, self.s))

    def __repr__(self):
        if self.s == 0:
            return f"{self.q}"
        sign = "+" if self.s > 0 else "-"
        mult = abs(self.s)
        tag = "eps" if mult == 1 else f"{mult}*eps"
        return f"{self.q}{sign}{tag}"


def _as_eps(x):
    return x if isinstance(x, EpsRational) else EpsRational(x)
