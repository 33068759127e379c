import random
from fractions import Fraction

import pytest

from tropscat.algebra import Context, Exponent, Localized, TruncatedPoly
from tropscat.logauto import (
    Automorphism, Derivation, adjoint, classify, conjugate_simple, exp, log,
    preserves_volume,
)


def ctx_plain(rank=2, order=3):
    return Context(rank=rank, order=order, slopes=((0,) * rank,))


def rand_derivation(ctx, rng, nterms=2, maxord=None):
    maxord = maxord or ctx.order
    terms = []
    for _ in range(rng.randint(1, nterms)):
        vec = tuple(rng.randint(-2, 2) for _ in range(ctx.rank))
        m = ctx.lift(vec, rng.randint(1, maxord))
        coeff = TruncatedPoly.monomial(ctx, m, Fraction(rng.randint(-3, 3)))
        n = tuple(rng.randint(-2, 2) for _ in range(ctx.rank))
        terms.append((coeff, n))
    return Derivation.from_terms(ctx, terms)


def test_exp_zero_is_identity():
    ctx = ctx_plain()
    assert exp(Derivation.zero(ctx)).is_identity()
    assert log(Automorphism.identity(ctx)).is_zero()


def test_exp_of_annihilating_term_closed_form():
    # xi = a d_n with d_n a = 0 gives theta(m) = exp(a)^<m,n>
    ctx = ctx_plain(order=4)
    a_exp = ctx.lift((1, 0), 1)
    a = TruncatedPoly.monomial(ctx, a_exp, 2)
    n = (0, 1)
    xi = Derivation.from_terms(ctx, [(a, n)])
    theta = exp(xi)
    expa = TruncatedPoly.one(ctx)
    power = TruncatedPoly.one(ctx)
    fact = 1
    for i in range(1, 5):
        power = power * a
        fact *= i
        expa = expa + power * Fraction(1, fact)
    assert theta.value((0, 1)) == Localized(expa)
    assert theta.value((1, 0)) == Localized.one(ctx)


def test_exp_log_roundtrip_random():
    ctx = ctx_plain(order=3)
    rng = random.Random(5)
    for _ in range(40):
        xi = rand_derivation(ctx, rng)
        theta = exp(xi)
        back = log(theta)
        assert (back - xi).is_zero()


def test_log_exp_nilpotency_order_two():
    ctx = ctx_plain(order=2)
    m = ctx.lift((1, 0), 1)
    c = TruncatedPoly.monomial(ctx, m, 3)
    xi = Derivation.from_terms(ctx, [(c, (0, 1))])  # <m, n> = 0
    theta = exp(xi)
    assert (log(theta) - xi).is_zero()


def test_compose_inverse():
    ctx = ctx_plain(order=3)
    rng = random.Random(7)
    for _ in range(15):
        theta = exp(rand_derivation(ctx, rng))
        assert theta.compose(theta.inverse()).is_identity()
        assert theta.inverse().compose(theta).is_identity()


def test_exp_inverse_is_exp_neg():
    ctx = ctx_plain(order=3)
    rng = random.Random(11)
    xi = rand_derivation(ctx, rng)
    assert exp(xi).inverse() == exp(xi.scale(-1))


def test_compose_associative_and_multiple_composition():
    ctx = ctx_plain(order=3)
    rng = random.Random(9)
    for _ in range(10):
        t1, t2, t3 = (exp(rand_derivation(ctx, rng)) for _ in range(3))
        lhs = t1.compose(t2).compose(t3)
        rhs = t1.compose(t2.compose(t3))
        assert lhs == rhs
        # r-fold composition formula: theta1 * (theta1-bar o theta2) * ...
        for i in range(ctx.rank):
            e = Exponent(tuple(1 if j == i else 0 for j in range(ctx.rank)), 0)
            direct = lhs.value(e.vec)
            formula = t1.value(e.vec) \
                * t1.apply_to(t2.value(e.vec)) \
                * t1.apply_to(t2.apply_to(t3.value(e.vec)))
            assert direct == formula


def test_bracket_antisymmetry_jacobi():
    ctx = ctx_plain(order=4)
    rng = random.Random(13)
    for _ in range(10):
        x, y, z = (rand_derivation(ctx, rng) for _ in range(3))
        assert x.bracket(x).is_zero()
        assert (x.bracket(y) + y.bracket(x)).is_zero()
        jac = x.bracket(y.bracket(z)) + y.bracket(z.bracket(x)) + z.bracket(x.bracket(y))
        assert jac.is_zero()


def test_bracket_closed_form():
    # [z^m d_n, z^m' d_n'] = z^(m+m') d_(<m',n>n' - <m,n'>n)
    ctx = ctx_plain(order=4)
    m1, n1 = ctx.lift((1, 0), 1), (0, 1)
    m2, n2 = ctx.lift((0, 1), 1), (1, 0)
    x = Derivation.from_terms(ctx, [(TruncatedPoly.monomial(ctx, m1, 1), n1)])
    y = Derivation.from_terms(ctx, [(TruncatedPoly.monomial(ctx, m2, 1), n2)])
    m12 = Exponent((1, 1), m1.h + m2.h)
    # <m2,n1> n2 - <m1,n2> n1 = (1,0) - (0,1)
    expected = Derivation.from_terms(
        ctx, [(TruncatedPoly.monomial(ctx, m12, 1), (1, -1))])
    assert (x.bracket(y) - expected).is_zero()


def test_adjoint_identity_and_group_action():
    ctx = ctx_plain(order=3)
    rng = random.Random(17)
    for _ in range(8):
        xi = rand_derivation(ctx, rng)
        assert (adjoint(Automorphism.identity(ctx), xi) - xi).is_zero()
        t1, t2 = exp(rand_derivation(ctx, rng)), exp(rand_derivation(ctx, rng))
        lhs = adjoint(t1.compose(t2), xi)
        rhs = adjoint(t1, adjoint(t2, xi))
        assert (lhs - rhs).is_zero()
        # exp(Ad_theta xi) = theta o exp(xi) o theta^{-1}
        assert exp(adjoint(t1, xi)) == t1.compose(exp(xi)).compose(t1.inverse())


def test_conjugation_closed_form_matches_direct():
    ctx = ctx_plain(rank=3, order=3)
    rng = random.Random(19)
    for _ in range(10):
        # h involves only exponents annihilated by n0 = e3*
        n0 = (0, 0, 1)
        h = TruncatedPoly.one(ctx) + TruncatedPoly.monomial(
            ctx, ctx.lift((rng.randint(-1, 1), rng.randint(-1, 1), 0), 1),
            rng.randint(1, 2))
        theta = Automorphism.from_function(ctx, h, n0)
        m = ctx.lift((rng.randint(-1, 1), rng.randint(-1, 1), rng.randint(-1, 1)), 1)
        n = tuple(rng.randint(-1, 1) for _ in range(3))
        xi = Derivation.from_terms(ctx, [(TruncatedPoly.monomial(ctx, m, 1), n)])
        assert (adjoint(theta, xi) - conjugate_simple(h, n0, 1, m, n)).is_zero()


def test_classify_flags():
    # joint directions = third coordinate
    ctx = ctx_plain(rank=3, order=3)
    jdirs = [(0, 0, 1)]
    m0 = ctx.lift((0, 0, 0), 1)   # mbar = 0: in h-tilde but excluded from h
    xi = Derivation.from_terms(ctx, [(TruncatedPoly.monomial(ctx, m0, 1), (1, 0, 0))])
    [(m, flags)] = classify(xi, jdirs)
    assert "h-tilde" in flags and "h" not in flags and "h-par" not in flags
    m1 = ctx.lift((1, 0, 0), 1)   # mbar not in Lambda_j, <m,n>=0
    xi = Derivation.from_terms(ctx, [(TruncatedPoly.monomial(ctx, m1, 1), (0, 1, 0))])
    [(m, flags)] = classify(xi, jdirs)
    assert "h-perp" in flags and "h" in flags and "h-par" not in flags


def test_classify_exact_sequence_split():
    # the h terms split exactly into the perp and parallel parts
    ctx = ctx_plain(rank=3, order=3)
    jdirs = [(0, 0, 1)]
    rng = random.Random(23)
    seen_h = 0
    for _ in range(40):
        xi = rand_derivation(ctx, rng, nterms=3)
        for m, flags in classify(xi, jdirs):
            if "h" in flags:
                seen_h += 1
                assert ("h-perp" in flags) != ("h-par" in flags)
    assert seen_h > 0


def test_preserves_volume():
    ctx = ctx_plain(order=3)
    m = ctx.lift((1, 0), 1)
    good = Derivation.from_terms(ctx, [(TruncatedPoly.monomial(ctx, m, 2), (0, 1))])
    assert preserves_volume(good)
    bad = Derivation.from_terms(ctx, [(TruncatedPoly.monomial(ctx, m, 2), (1, 0))])
    assert not preserves_volume(bad)
    assert preserves_volume(exp(good))
    assert not preserves_volume(exp(bad))


def test_wall_automorphism_preserves_volume():
    # m |-> f^(-<m,n>) with d_n f = 0 preserves the standard form
    ctx = ctx_plain(order=3)
    f = TruncatedPoly.one(ctx) + TruncatedPoly.monomial(ctx, ctx.lift((1, 0), 1), 1)
    theta = Automorphism.from_function(ctx, f, (0, 1))
    assert preserves_volume(theta)
