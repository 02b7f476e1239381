"""Exact arithmetic over GF(q) and its three-dimensional vectors."""

from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from xalign.errors import GFZeroDivisionError, InvalidOperandsError, SingularMatrixError
from xalign.gf import (
    GF,
    GFElement,
    GFVector,
    det_3x3_int,
    gf_add,
    gf_inv,
    gf_mul,
    is_prime,
    matvec,
    matvec_int,
    same_direction,
    scalar_product,
    solve_3x3,
    solve_3x3_int,
)

PRIMES = st.sampled_from([3, 5, 7, 11, 13, 101])


def test_add_examples():
    F5, F7 = GF(5), GF(7)
    assert gf_add(F5(3), F5(4)) == F5(2)
    assert gf_add(F7(6), F7(6)) == F7(5)
    for x in F5.elements():
        assert gf_add(x, F5.zero) == x


def test_mul_examples():
    F5, F7 = GF(5), GF(7)
    assert gf_mul(F7(3), F7(5)) == F7(1)
    assert gf_mul(F5(4), F5(4)) == F5(1)
    for x in F5.elements():
        assert gf_mul(x, F5.one) == x


def test_inverse_examples_against_search():
    F5 = GF(5)
    search = lambda a: next(x for x in range(1, 5) if a * x % 5 == 1)
    assert gf_inv(F5(2)) == F5(search(2)) == F5(3)
    assert gf_inv(F5(4)) == F5(search(4)) == F5(4)
    for q in (3, 5, 7, 11):
        assert gf_inv(GF(q).one) == GF(q).one


def test_inverse_of_zero_raises():
    with pytest.raises(GFZeroDivisionError):
        gf_inv(GF(5).zero)


def test_modulus_mismatch_raises():
    with pytest.raises(InvalidOperandsError):
        gf_add(GF(5)(1), GF(7)(1))
    with pytest.raises(InvalidOperandsError):
        gf_mul(GF(5)(1), GF(7)(1))
    with pytest.raises(InvalidOperandsError):
        scalar_product(GF(5)(1), GF(7).vector((1, 2, 3)))


def test_composite_and_small_moduli_rejected():
    for q in (1, 2, 4, 9, 15):
        with pytest.raises(InvalidOperandsError):
            GF(q)
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_element_value_range_enforced():
    with pytest.raises(InvalidOperandsError):
        GFElement(5, 5)
    with pytest.raises(InvalidOperandsError):
        GFElement(-1, 5)


@pytest.mark.parametrize("q", [3, 5, 7])
def test_field_axioms_exhaustive(q):
    F = GF(q)
    E = F.elements()
    for a, b in itertools.product(E, E):
        assert a + b == b + a
        assert a * b == b * a
    for a, b, c in itertools.product(E, E, E):
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
    for a in F.nonzero():
        inverses = [b for b in E if a * b == F.one]
        assert inverses == [gf_inv(a)]
    for a in E:
        assert [b for b in E if a + b == F.zero] == [-a]


def test_scalar_product_examples():
    F5 = GF(5)
    v = F5.vector((1, 2, 3))
    assert scalar_product(F5(2), v) == F5.vector((2, 4, 1))
    assert scalar_product(F5.one, v) == v
    assert scalar_product(F5.zero, v) == F5.vector((0, 0, 0))


def test_same_direction_examples():
    F5 = GF(5)
    assert same_direction(F5.vector((2, 4, 1)), F5.vector((1, 2, 3))) == F5(2)
    v = F5.vector((3, 1, 4))
    assert same_direction(v, v) == F5.one
    assert same_direction(F5.vector((1, 0, 0)), F5.vector((0, 1, 0))) is None


def test_same_direction_zero_vector_raises():
    F5 = GF(5)
    with pytest.raises(InvalidOperandsError):
        same_direction(F5.vector((0, 0, 0)), F5.vector((1, 2, 3)))


@pytest.mark.parametrize("q", [3, 5])
def test_same_direction_symmetry_exhaustive(q):
    F = GF(q)
    vecs = [F.vector(v) for v in itertools.product(range(q), repeat=3) if any(v)]
    for v1 in vecs:
        for v2 in vecs:
            c = same_direction(v1, v2)
            back = same_direction(v2, v1)
            if c is None:
                assert back is None
            else:
                assert back == gf_inv(c)
                assert scalar_product(c, v2) == v1


def test_vector_length_and_moduli_checked():
    with pytest.raises(InvalidOperandsError):
        GFVector((GF(5)(1), GF(5)(2)))
    with pytest.raises(InvalidOperandsError):
        GFVector((GF(5)(1), GF(5)(2), GF(7)(3)))


def test_solve_identity_and_scaled_identity():
    F5 = GF(5)
    I = [[F5(int(i == j)) for j in range(3)] for i in range(3)]
    y = F5.vector((4, 0, 2))
    assert solve_3x3(I, y) == y
    two = [[F5(2 * int(i == j)) for j in range(3)] for i in range(3)]
    assert solve_3x3(two, F5.vector((1, 1, 1))) == F5.vector((3, 3, 3))


def test_solve_singular_raises():
    F5 = GF(5)
    A = [[F5(1), F5(2), F5(3)], [F5(2), F5(4), F5(1)], [F5(0), F5(1), F5(1)]]
    assert det_3x3_int([[e.value for e in r] for r in A], 5) == 0
    with pytest.raises(SingularMatrixError):
        solve_3x3(A, F5.vector((1, 1, 1)))


def test_solve_round_trip_random_gf7():
    rng = np.random.default_rng(3)
    F7 = GF(7)
    done = 0
    while done < 200:
        A = rng.integers(0, 7, size=(3, 3)).tolist()
        if det_3x3_int(A, 7) == 0:
            continue
        y = F7.vector(rng.integers(0, 7, size=3).tolist())
        Ae = [[F7(v) for v in row] for row in A]
        assert matvec(Ae, solve_3x3(Ae, y)) == y
        done += 1


@given(q=PRIMES, data=st.data())
def test_solve_inverts_matvec(q, data):
    A = data.draw(st.lists(st.lists(st.integers(0, q - 1), min_size=3, max_size=3), min_size=3, max_size=3))
    x = data.draw(st.lists(st.integers(0, q - 1), min_size=3, max_size=3))
    if det_3x3_int(A, q) == 0:
        with pytest.raises(SingularMatrixError):
            solve_3x3_int(A, x, q)
        return
    assert tuple(solve_3x3_int(A, matvec_int(A, x, q), q)) == tuple(x)


@given(q=PRIMES, a=st.integers(1, 10**6))
def test_inverse_property(q, a):
    a %= q
    if a == 0:
        return
    x = GFElement(a, q)
    assert (x * gf_inv(x)).value == 1
