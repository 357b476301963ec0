from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from killcert.scalars import (
    MUL_TABLE,
    ONE,
    ZERO,
    Oct,
    associator,
    oct_conj,
    oct_inner,
    oct_mul,
    parse_rat,
    quat_lr_matrices,
    rat,
    rat_str,
    table_hash,
)

small = st.fractions(min_value=-5, max_value=5, max_denominator=6)
octs = st.lists(small, min_size=8, max_size=8).map(Oct)


def test_rat_rejects_floats():
    with pytest.raises(TypeError):
        rat(0.5)
    assert rat(3) == Fraction(3)
    assert rat("2/6") == Fraction(1, 3)


def test_rat_roundtrip():
    for x in (Fraction(0), Fraction(-7, 3), Fraction(5)):
        assert parse_rat(rat_str(x)) == x
    assert rat_str(Fraction(5)) == "5/1"


def test_units_square_to_minus_one():
    for k in range(1, 8):
        e = Oct.unit(k)
        assert oct_mul(e, e) == -ONE


def test_table_is_stable():
    assert len(MUL_TABLE) == 8 and all(len(r) == 8 for r in MUL_TABLE)
    assert table_hash() == table_hash()
    assert len(table_hash()) == 64


def test_quaternion_subalgebra_is_associative():
    i, j, k = Oct.unit(1), Oct.unit(2), Oct.unit(3)
    assert oct_mul(i, j) == k
    assert oct_mul(j, i) == -k
    assert associator(i, j, k).is_zero()


def test_octonions_are_not_associative():
    e1, e2, e4 = Oct.unit(1), Oct.unit(2), Oct.unit(4)
    assert not associator(e1, e2, e4).is_zero()


@settings(max_examples=60, deadline=None)
@given(octs, octs)
def test_norm_is_multiplicative(x, y):
    assert oct_mul(x, y).norm2() == x.norm2() * y.norm2()


@settings(max_examples=60, deadline=None)
@given(octs, octs)
def test_alternative_laws(x, y):
    assert associator(x, x, y).is_zero()
    assert associator(x, y, y).is_zero()


@settings(max_examples=40, deadline=None)
@given(octs, octs, octs)
def test_moufang_identity(x, y, z):
    # z(x(zy)) = ((zx)z)y
    lhs = oct_mul(z, oct_mul(x, oct_mul(z, y)))
    rhs = oct_mul(oct_mul(oct_mul(z, x), z), y)
    assert lhs == rhs


@settings(max_examples=60, deadline=None)
@given(octs, octs)
def test_conjugation_reverses_products(x, y):
    assert oct_conj(oct_mul(x, y)) == oct_mul(oct_conj(y), oct_conj(x))


@settings(max_examples=40, deadline=None)
@given(octs, octs, octs)
def test_associator_is_alternating(x, y, z):
    a = associator(x, y, z)
    assert associator(y, x, z) == -a
    assert associator(x, z, y) == -a
    assert associator(y, z, x) == a


@settings(max_examples=40, deadline=None)
@given(octs, octs)
def test_inner_product(x, y):
    assert oct_inner(x, x) == x.norm2()
    assert oct_inner(x, y) == oct_inner(y, x)


def test_quat_matrices_columns_are_images():
    u = Oct.quat(1, 2, -1, 3)
    L, R = quat_lr_matrices(u)
    for c in range(4):
        e = Oct.unit(c)
        assert L.col(c) == list(oct_mul(u, e).coords[:4])
        assert R.col(c) == list(oct_mul(e, u).coords[:4])


def test_quat_matrices_need_a_quaternion():
    with pytest.raises(ValueError):
        quat_lr_matrices(Oct.unit(5))


def test_json_roundtrip():
    x = Oct([Fraction(1, 2), 0, -3, 0, 0, Fraction(7, 5), 0, 1])
    assert Oct.from_json(x.to_json()) == x
    assert ZERO.is_zero()
