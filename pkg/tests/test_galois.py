import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgnc.galois import GF2, FieldError, make_field

SMALL = [(2, 1), (3, 1), (2, 2), (5, 1), (2, 3), (7, 1), (3, 2), (2, 4)]


def test_gf2_basics():
    one, zero = GF2.one, GF2.zero
    assert (one + one) == zero
    assert (one + zero) == one
    assert (one * one) == one
    assert one.inverse() == one


def test_gf4_default_reduction():
    F = make_field(2, 2)
    assert F.reduction_poly == (1, 1, 1)
    a = F.element(2)  # the generator x
    assert (a + a).value == 0
    assert (a * a).value == 3  # x^2 = x + 1
    assert a.inverse().value == 3


def test_bad_fields():
    with pytest.raises(FieldError):
        make_field(4, 1)
    with pytest.raises(FieldError):
        make_field(2, 9)
    with pytest.raises(FieldError):
        make_field(2, 2, (1, 0, 1))  # x^2 + 1 = (x+1)^2


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        make_field(2, 2).inv(0)


def test_mixing_fields_rejected():
    with pytest.raises(FieldError):
        make_field(2, 2).one + make_field(3, 1).one


def test_aes_field():
    F = make_field(2, 8, (1, 1, 0, 1, 1, 0, 0, 0, 1))
    assert F.mul(0x53, 0xCA) == 1
    assert F.mul(0x57, 0x83) == 0xC1


@pytest.mark.parametrize("p,m", SMALL)
def test_axioms_exhaustive(p, m):
    F = make_field(p, m)
    q = F.q
    els = range(q)
    for a in els:
        assert F.add(a, 0) == a and F.mul(a, 1) == a
        assert F.add(a, F.neg(a)) == 0
        if a:
            assert F.mul(a, F.inv(a)) == 1
    for a, b in itertools.product(els, repeat=2):
        assert F.add(a, b) == F.add(b, a)
        assert F.mul(a, b) == F.mul(b, a)
    if q <= 9:
        for a, b, c in itertools.product(els, repeat=3):
            assert F.mul(a, F.mul(b, c)) == F.mul(F.mul(a, b), c)
            assert F.add(a, F.add(b, c)) == F.add(F.add(a, b), c)
            assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))


@given(st.sampled_from([(2, 8), (2, 5), (3, 4), (13, 2)]), st.data())
def test_axioms_random(pm, data):
    F = make_field(*pm)
    a, b, c = (data.draw(st.integers(0, F.q - 1)) for _ in range(3))
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    if a:
        assert F.div(F.mul(a, b), a) == b
        assert F.pow(a, F.q - 1) == 1


def test_cached():
    assert make_field(2, 2) is make_field(2, 2)
