"""Exact algebraic identities on randomly generated polynomials."""

from fractions import Fraction

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from lhk.algebra import builtin
from lhk.sympoly import SymPoly, coproduct, embed, is_casimir, permute_copies, poisson_bracket, transposition

SL2 = builtin("sl2").sc
SU2 = builtin("su2").sc
H6 = builtin("h6").sc

FAST = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def polys(draw, r, m=1, max_degree=3, max_terms=4):
    n = r * m
    nterms = draw(st.integers(0, max_terms))
    terms = {}
    for _ in range(nterms):
        degree = draw(st.integers(0, max_degree))
        exps = [0] * n
        for _ in range(degree):
            exps[draw(st.integers(0, n - 1))] += 1
        num = draw(st.integers(-4, 4))
        den = draw(st.integers(1, 3))
        terms[tuple(exps)] = Fraction(num, den)
    return SymPoly(r, m, terms)


algebras = st.sampled_from([SL2, SU2, H6])


@FAST
@given(st.data())
def test_antisymmetry(data):
    sc = data.draw(algebras)
    P, Q = data.draw(polys(sc.r)), data.draw(polys(sc.r))
    assert poisson_bracket(P, Q, sc) == -poisson_bracket(Q, P, sc)


@FAST
@given(st.data())
def test_leibniz(data):
    sc = data.draw(algebras)
    P = data.draw(polys(sc.r, max_degree=2))
    Q = data.draw(polys(sc.r, max_degree=2))
    R = data.draw(polys(sc.r, max_degree=4))
    lhs = poisson_bracket(P * Q, R, sc)
    rhs = P * poisson_bracket(Q, R, sc) + poisson_bracket(P, R, sc) * Q
    assert lhs == rhs


@FAST
@given(st.data())
def test_jacobi(data):
    sc = data.draw(algebras)
    P, Q, R = (data.draw(polys(sc.r, max_terms=3)) for _ in range(3))
    total = (
        poisson_bracket(P, poisson_bracket(Q, R, sc), sc)
        + poisson_bracket(Q, poisson_bracket(R, P, sc), sc)
        + poisson_bracket(R, poisson_bracket(P, Q, sc), sc)
    )
    assert total.is_zero()


@FAST
@given(st.data(), st.integers(2, 3))
def test_coproduct_is_poisson_morphism(data, m):
    sc = data.draw(algebras)
    P, Q = data.draw(polys(sc.r)), data.draw(polys(sc.r))
    lhs = coproduct(poisson_bracket(P, Q, sc), m)
    rhs = poisson_bracket(coproduct(P, m), coproduct(Q, m), sc)
    assert lhs == rhs


@FAST
@given(st.data())
def test_coassociativity(data):
    sc = data.draw(algebras)
    P = data.draw(polys(sc.r))
    # (Delta x id) Delta = Delta^(3): split copy 2 of Delta(P) into copies 2 and 3
    D2 = coproduct(P, 2)
    split = SymPoly.zero(sc.r, 3)
    for exps, coef in D2.terms:
        term = SymPoly.constant(coef, sc.r, 3)
        for alpha in range(sc.r):
            e1, e2 = exps[alpha], exps[sc.r + alpha]
            first = SymPoly.gen(alpha + 1, sc.r, 3, 1)
            rest = SymPoly.gen(alpha + 1, sc.r, 3, 2) + SymPoly.gen(alpha + 1, sc.r, 3, 3)
            term = term * first ** e1 * rest ** e2
        split = split + term
    assert split == coproduct(P, 3)


@FAST
@given(st.data(), st.integers(1, 3))
def test_coproduct_is_algebra_morphism(data, m):
    sc = data.draw(algebras)
    P, Q = data.draw(polys(sc.r)), data.draw(polys(sc.r))
    assert coproduct(P * Q, m) == coproduct(P, m) * coproduct(Q, m)
    assert coproduct(P + Q, m) == coproduct(P, m) + coproduct(Q, m)


@FAST
@given(st.data())
def test_casimir_propagation(data):
    sc, C = data.draw(st.sampled_from([
        (SL2, SymPoly.parse("v1*v3 - v2^2", 3)),
        (SU2, SymPoly.parse("v1^2 + v2^2 + v3^2", 3)),
        (H6, SymPoly.parse("v6", 6)),
    ]))
    assert is_casimir(C, sc)
    m = data.draw(st.integers(2, 3))
    k = data.draw(st.integers(1, m))
    alpha = data.draw(st.integers(1, sc.r))
    lifted = embed(coproduct(C, k), m)
    assert poisson_bracket(lifted, coproduct(SymPoly.gen(alpha, sc.r), m), sc).is_zero()


@FAST
@given(st.data())
def test_involution(data):
    sc, C = data.draw(st.sampled_from([
        (SL2, SymPoly.parse("v1*v3 - v2^2", 3)),
        (SU2, SymPoly.parse("v1^2 + v2^2 + v3^2", 3)),
    ]))
    m = 3
    j = data.draw(st.integers(1, m))
    k = data.draw(st.integers(j, m))
    Cj, Ck = embed(coproduct(C, j), m), embed(coproduct(C, k), m)
    assert poisson_bracket(Cj, Ck, sc).is_zero()


@FAST
@given(st.data())
def test_bracket_is_permutation_equivariant(data):
    sc = data.draw(algebras)
    P, Q = data.draw(polys(sc.r, m=2)), data.draw(polys(sc.r, m=2))
    s = transposition(2, 1, 2)
    lhs = permute_copies(poisson_bracket(P, Q, sc), s)
    assert lhs == poisson_bracket(permute_copies(P, s), permute_copies(Q, s), sc)


@FAST
@given(st.data())
def test_text_round_trip(data):
    m = data.draw(st.integers(1, 3))
    P = data.draw(polys(3, m=m))
    assert SymPoly.parse(P.to_text(), 3, m) == P


@FAST
@given(st.data())
def test_float_evaluation_matches_exact(data):
    P = data.draw(polys(3, m=2))
    vals = [Fraction(data.draw(st.integers(-5, 5)), 4) for _ in range(6)]
    exact = sum(
        (coef * _monomial(exps, vals) for exps, coef in P.terms), Fraction(0)
    )
    got = P.evaluate([float(v) for v in vals])
    assert abs(float(got) - float(exact)) <= 1e-9 * max(1.0, abs(float(exact)))


def _monomial(exps, vals):
    out = Fraction(1)
    for e, v in zip(exps, vals):
        out *= v ** e
    return out
