import itertools
import random

import pytest

from mschemes import gf
from mschemes.gf import (
    FieldMismatch,
    NoNonresidue,
    NotPrime,
    Overflow,
    Poly,
    extension_for_levels,
    field_ctx,
    find_nonresidue,
    is_split_squarefree,
    poly_from_text,
    poly_gcd,
    poly_to_text,
    rth_root,
)

SMALL_ORDERS = [(2, 1), (3, 1), (5, 1), (7, 1), (2, 2), (3, 2), (2, 3), (5, 2), (7, 2), (2, 4), (3, 3)]


def brute_roots(f):
    return [a for a in f.ctx.elements() if f(a).is_zero()]


def all_monic(ctx, deg):
    for coeffs in itertools.product(range(ctx.order), repeat=deg):
        yield Poly(ctx, [ctx.from_index(i) for i in coeffs] + [ctx.one()])


def test_field_ctx_prime():
    ctx = field_ctx(7, 1)
    assert ctx.order == 7
    assert ctx.elem(3) + ctx.elem(5) == ctx.elem(1)


def test_field_ctx_f4_modulus():
    # oracle: enumerate monic quadratics over F_2 for irreducibility
    irreducible = []
    for c0, c1 in itertools.product(range(2), repeat=2):
        cand = [c0, c1, 1]
        roots = [x for x in range(2) if (c0 + c1 * x + x * x) % 2 == 0]
        if not roots:
            irreducible.append(tuple(cand))
    assert (1, 1, 1) in irreducible
    ctx = field_ctx(2, 2)
    assert ctx.modulus == (1, 1, 1)
    assert ctx.order == 4


def test_field_ctx_not_prime():
    with pytest.raises(NotPrime):
        field_ctx(4, 1)


def test_field_ctx_overflow():
    with pytest.raises(Overflow):
        field_ctx(2, 10, magnitude_cap=1000)


@pytest.mark.parametrize("p,d", SMALL_ORDERS)
def test_field_axioms(p, d):
    ctx = field_ctx(p, d)
    elems = list(ctx.elements())
    rng = random.Random(12345)
    triples = (
        list(itertools.product(elems, repeat=3))
        if ctx.order <= 8
        else [tuple(rng.choice(elems) for _ in range(3)) for _ in range(400)]
    )
    one = ctx.one()
    for a, b, c in triples:
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert (a + b) + c == a + (b + c)
    for a in elems:
        if not a.is_zero():
            assert a * a.inverse() == one


def test_poly_gcd_examples():
    ctx = field_ctx(7, 1)
    x2m1 = Poly(ctx, [-1, 0, 1])
    xm1 = Poly(ctx, [-1, 1])
    assert poly_gcd(x2m1, xm1) == xm1
    # x^3 - 1 = (x - 1)(x^2 + x + 1), verified by expansion
    cubic = Poly(ctx, [-1, 0, 0, 1])
    quad = Poly(ctx, [1, 1, 1])
    assert xm1 * quad == cubic
    assert poly_gcd(cubic, quad) == quad
    ctx5 = field_ctx(5, 1)
    assert poly_gcd(Poly(ctx5, [0, 1]), Poly(ctx5, [1, 1])) == Poly(ctx5, [1])


def test_poly_gcd_field_mismatch():
    with pytest.raises(FieldMismatch):
        poly_gcd(Poly(field_ctx(5, 1), [1, 1]), Poly(field_ctx(7, 1), [1, 1]))


def test_poly_gcd_divides_and_maximal():
    rng = random.Random(7)
    for p in (5, 7):
        ctx = field_ctx(p, 1)
        for _ in range(40):
            a = Poly(ctx, [rng.randrange(p) for _ in range(rng.randint(1, 7))])
            b = Poly(ctx, [rng.randrange(p) for _ in range(rng.randint(1, 7))])
            if a.is_zero() and b.is_zero():
                continue
            g = poly_gcd(a, b)
            assert (a % g).is_zero() and (b % g).is_zero()
            # any common monic divisor of degree <= 2 divides g
            for deg in (1, 2):
                for d in all_monic(ctx, deg):
                    if (a % d).is_zero() and (b % d).is_zero():
                        assert (g % d).is_zero()


def test_is_split_squarefree_examples():
    ctx = field_ctx(7, 1)
    cubic = Poly(ctx, [-1, 0, 0, 1])
    assert sorted(a.index for a in brute_roots(cubic)) == [1, 2, 4]
    assert is_split_squarefree(cubic)
    x2p1 = Poly(ctx, [1, 0, 1])
    squares = sorted({(i * i) % 7 for i in range(1, 7)})
    assert squares == [1, 2, 4] and 6 not in squares
    assert not is_split_squarefree(x2p1)
    sq = Poly(ctx, [-1, 1]) * Poly(ctx, [-1, 1])
    assert not is_split_squarefree(sq)


@pytest.mark.parametrize("p", [5, 7])
def test_is_split_squarefree_vs_bruteforce(p):
    ctx = field_ctx(p, 1)
    for deg in (1, 2, 3, 4):
        for f in all_monic(ctx, deg):
            expected = len(set(r.index for r in brute_roots(f))) == deg
            assert is_split_squarefree(f) == expected


def test_find_nonresidue_examples():
    ctx = field_ctx(7, 1)
    assert find_nonresidue(2, ctx).index == 3  # squares mod 7 = {1,2,4}
    assert find_nonresidue(3, ctx).index == 2  # cubes mod 7 = {1,6}
    with pytest.raises(NoNonresidue):
        find_nonresidue(3, field_ctx(5, 1))


@pytest.mark.parametrize("p,d", SMALL_ORDERS)
def test_find_nonresidue_property(p, d):
    ctx = field_ctx(p, d)
    q1 = ctx.order - 1
    for r in (2, 3, 5, 7):
        if r == p or q1 % r:
            continue
        a = find_nonresidue(r, ctx)
        assert a ** (q1 // r) != ctx.one()


def test_rth_root_examples():
    ctx = field_ctx(7, 1)
    assert rth_root(ctx.elem(2), 2) == ctx.elem(3)  # 3^2 = 2, 3 < 4
    assert rth_root(ctx.elem(3), 2) is None
    for p, d in SMALL_ORDERS:
        c = field_ctx(p, d)
        for r in {2, 3, p}:
            if not gf.is_prime(r):
                continue
            assert rth_root(c.one(), r) == c.one()


@pytest.mark.parametrize("p,d", SMALL_ORDERS)
def test_rth_root_roundtrip(p, d):
    ctx = field_ctx(p, d)
    for r in sorted({2, 3, p}):
        if not gf.is_prime(r):
            continue
        for a in ctx.elements():
            if a.is_zero():
                continue
            ar = a**r
            root = rth_root(ar, r)
            assert root is not None
            assert root**r == ar
            # canonical-least root
            all_roots = [b for b in ctx.elements() if not b.is_zero() and b**r == ar]
            assert root.index == min(b.index for b in all_roots)


def test_rth_root_none_iff_nonpower():
    ctx = field_ctx(13, 1)
    cubes = {(b**3).index for b in ctx.elements() if not b.is_zero()}
    for a in ctx.elements():
        if a.is_zero():
            continue
        got = rth_root(a, 3)
        assert (got is not None) == (a.index in cubes)


def test_extension_for_levels():
    assert extension_for_levels(field_ctx(7, 1), 4).d == 1  # 2 and 3 divide 6
    assert extension_for_levels(field_ctx(2, 1), 3).d == 2  # 3 | 2^2-1, s=2=char exempt
    assert extension_for_levels(field_ctx(5, 1), 3).d == 2  # 3 | 24 but 3 does not divide 4


def test_extension_for_levels_overflow():
    with pytest.raises(Overflow):
        extension_for_levels(field_ctx(13, 1), 12, magnitude_cap=10**6)


def test_embed_field_is_hom():
    src = field_ctx(2, 2)
    dst = field_ctx(2, 4)
    emb = gf.embed_field(src, dst)
    for a in src.elements():
        for b in src.elements():
            assert emb(a * b) == emb(a) * emb(b)
            assert emb(a + b) == emb(a) + emb(b)
    assert emb(src.one()) == dst.one()


def test_poly_text_roundtrip():
    ctx = field_ctx(7, 1)
    f = poly_from_text(ctx, "6,0,0,1")
    assert f == Poly(ctx, [-1, 0, 0, 1])
    assert poly_to_text(f) == "6,0,0,1"
    g = poly_from_text(ctx, "-1,0,0,1")  # negatives reduced mod p
    assert g == f
