import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgnc.galois import GF2, make_field
from sgnc.polyalg import (
    NEG_INF,
    PolyMatrix,
    Polynomial,
    RationalFunction,
    SingularMatrixError,
    determinant,
    mat_mul,
    max_degree,
    nilpotent_inverse,
    poly_arith,
    poly_gcd,
    rank,
    rat_inverse,
)

F4 = make_field(2, 2)
z = Polynomial.monomial(GF2, 1)
one = Polynomial.one(GF2)


def P(*c, f=GF2):
    return Polynomial(f, tuple(c))


def M(rows, f=GF2):
    return PolyMatrix(f, rows)


def test_canonical_and_degree():
    assert P(1, 0, 0).coeffs == (1,)
    assert Polynomial.zero(GF2).degree == NEG_INF
    assert P(0, 0, 1).degree == 2
    assert Polynomial.parse(GF2, "1,0,1") == P(1, 0, 1)
    assert P(1, 0, 1).serialize() == "1,0,1"


def test_poly_arith_examples():
    assert poly_arith(P(1, 1), P(1, 1), "mul") == P(1, 0, 1)
    assert poly_arith(z**3, z, "div") == RationalFunction.of(z**2)
    assert poly_arith(P(1, 1), P(1, 1), "div") == RationalFunction.one(GF2)


def test_divmod_gcd():
    a = P(1, 1) * P(1, 1, 1)
    q, r = divmod(a, P(1, 1))
    assert q == P(1, 1, 1) and not r
    assert poly_gcd(a, P(1, 0, 1)) == P(1, 1)


def test_rational_canonical():
    r = RationalFunction(P(0, 1, 1), P(0, 0, 1, 1))  # (z+z^2)/(z^2+z^3) = 1/z
    assert r.num == one and r.den == z


def test_mat_mul_examples():
    MT1 = M([[z, z**3], [0, z**4]])
    I = PolyMatrix.identity(GF2, 2)
    assert mat_mul(MT1, I) == MT1
    assert mat_mul(I, MT1) == MT1
    assert mat_mul(MT1, PolyMatrix.zeros(GF2, 2, 2)) == PolyMatrix.zeros(GF2, 2, 2)


def test_nilpotent_inverse_examples():
    assert nilpotent_inverse(PolyMatrix.zeros(GF2, 3, 3)) == PolyMatrix.identity(GF2, 3)
    K = PolyMatrix.from_ints(GF2, [[0, 1], [0, 0]])
    assert nilpotent_inverse(K) == M([[1, z], [0, 1]])


def test_nilpotent_inverse_rejects_cycle():
    with pytest.raises(ValueError):
        nilpotent_inverse(PolyMatrix.from_ints(GF2, [[0, 1], [1, 0]]))


def test_rat_inverse_table_matrix():
    MT1 = M([[z, z**3], [0, z**4]])
    inv = rat_inverse(MT1)
    zi = RationalFunction(one, z)
    assert inv == M([[zi, RationalFunction(one, z**2)], [0, RationalFunction(one, z**4)]])
    assert MT1 @ inv == PolyMatrix.identity(GF2, 2)
    assert determinant(MT1) == RationalFunction.of(z**5)


def test_singular():
    with pytest.raises(SingularMatrixError):
        rat_inverse(M([[1, 1], [1, 1]]))


def test_rank_and_degree():
    assert rank(PolyMatrix.identity(GF2, 3)) == 3
    assert rank(PolyMatrix.zeros(GF2, 2, 3)) == 0
    for C in ([[1, 1], [0, 1]], [[1, 0], [1, 1]]):
        assert rank(PolyMatrix.from_ints(GF2, C).scale(RationalFunction.of(z**4))) == 2
    assert max_degree(PolyMatrix.identity(GF2, 2)) == 0
    assert max_degree(M([[1, z], [0, 1]])) == 1


# -- properties ----------------------------------------------------------------

coef = st.integers(0, 3)
poly4 = st.lists(coef, max_size=4).map(lambda c: Polynomial(F4, tuple(c)))


@st.composite
def strict_upper(draw, f=F4):
    n = draw(st.integers(1, 5))
    rows = [[draw(st.integers(0, f.q - 1)) if j > i else 0 for j in range(n)] for i in range(n)]
    perm = draw(st.permutations(range(n)))
    # conjugating by a permutation keeps nilpotency
    return PolyMatrix.from_ints(f, [[rows[perm[i]][perm[j]] for j in range(n)] for i in range(n)])


@given(strict_upper())
def test_nilpotent_inverse_identity(K):
    zz = Polynomial.monomial(F4, 1)
    I = PolyMatrix.identity(F4, K.rows)
    lhs = I + K.scale(-RationalFunction.of(zz))
    assert lhs @ nilpotent_inverse(K) == I


@st.composite
def square(draw):
    n = draw(st.integers(1, 3))
    return PolyMatrix(F4, [[draw(poly4) for _ in range(n)] for _ in range(n)])


@given(square())
def test_inverse_roundtrip(A):
    if determinant(A).is_zero():
        assert rank(A) < A.rows
        return
    assert rank(A) == A.rows
    assert A @ rat_inverse(A) == PolyMatrix.identity(F4, A.rows)


@given(square(), st.data())
def test_rank_invariant_under_row_scaling(A, data):
    i = data.draw(st.integers(0, A.rows - 1))
    num = data.draw(poly4.filter(bool))
    den = data.draw(poly4.filter(bool))
    assert rank(A.scale_row(i, RationalFunction(num, den))) == rank(A)


@given(poly4, poly4.filter(bool))
def test_division_algorithm(a, b):
    q, r = divmod(a, b)
    assert q * b + r == a
    assert r.degree < b.degree
