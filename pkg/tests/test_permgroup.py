from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from natgraph.permgroup import (
    GroupRingElem, LeadingTermElem, Perm, act, act_tuple, all_perms, coset_rep, in_kernel_module,
    is_generator, leading_K, leading_N, theta_E, two_column_decomposition, unshuffle_basis, unshuffles,
    YoungDiagram, young_projection_nonzero, young_symmetrizer,
)
from natgraph.opalg import cyclic_sum, is_quasi_symmetry, quasi_symmetries


def perms(n: int):
    return st.permutations(list(range(1, n + 1))).map(lambda t: Perm(tuple(t)))


@given(st.integers(3, 6).flatmap(lambda n: st.tuples(perms(n), perms(n), perms(n))))
def test_product_associative_and_inverse(pqr):
    p, q, r = pqr
    assert (p * q) * r == p * (q * r)
    assert p * p.inverse() == Perm.identity(p.n)
    assert (p * q).sign() == p.sign() * q.sign()


@given(st.integers(3, 6).flatmap(lambda n: st.tuples(perms(n), perms(n))))
def test_tuple_action_is_right_action(pq):
    p, q = pq
    x = tuple("abcdefg"[: p.n])
    assert act_tuple(act_tuple(x, p), q) == act_tuple(x, p * q)


def test_sign_matches_inversion_count():
    for p in all_perms(5):
        inv = sum(1 for i, j in itertools.combinations(range(5), 2) if p.images[i] > p.images[j])
        assert p.sign() == (-1) ** inv


@pytest.mark.parametrize("p,q", [(1, 2), (2, 2), (3, 2), (2, 3)])
def test_unshuffle_count_and_order(p, q):
    u = unshuffles(p, q)
    assert len(u) == math.comb(p + q, q)
    assert u == sorted(u)
    for s in u:
        assert list(s.images[:p]) == sorted(s.images[:p])
        assert list(s.images[p:]) == sorted(s.images[p:])


def test_coset_rep_idempotent():
    for s in all_perms(5):
        r = coset_rep(s)
        assert coset_rep(r) == r
        assert r in unshuffle_basis(5)


def test_theta_examples():
    assert theta_E(LeadingTermElem.generator(4)) == -1
    assert theta_E(leading_K(4)) == 0
    assert theta_E(leading_N(5)) == 0
    assert in_kernel_module(leading_K(3)) and in_kernel_module(leading_N(3))


@given(st.integers(3, 5).flatmap(lambda n: st.tuples(perms(n), perms(n))))
@settings(max_examples=40)
def test_leading_action_is_right_action(pq):
    p, q = pq
    x = leading_N(p.n) + LeadingTermElem.generator(p.n)
    assert act(act(x, p), q) == act(x, p * q)


def kernel_dim_oracle(n: int) -> int:
    # theta is the functional "minus the coefficient sum"; rank of its matrix via sympy
    m = sympy.Matrix([[-1] * math.comb(n, 2)])
    return math.comb(n, 2) - m.rank()


@pytest.mark.parametrize("n", range(3, 9))
def test_kernel_dimension_hook_sum(n):
    dims = sum(d for _, d in two_column_decomposition(n))
    assert dims == n * (n - 1) // 2 - 1 == kernel_dim_oracle(n)


def test_two_column_shapes():
    assert [(lam.rows, d) for lam, d in two_column_decomposition(3)] == [((2, 1), 2)]
    assert [(lam.rows, d) for lam, d in two_column_decomposition(4)] == [((2, 2), 2), ((3, 1), 3)]
    assert [lam.rows for lam, _ in two_column_decomposition(6)] == [(4, 2), (5, 1)]


def test_young_symmetrizer_quasi_idempotent():
    for rows in [(2, 1), (3, 1), (2, 2), (3, 2)]:
        e = young_symmetrizer(rows)
        lam = YoungDiagram(rows)
        assert e * e == e.scale(Fraction(math.factorial(lam.n), lam.hook_dimension()))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_generators(n):
    assert is_generator(leading_K(n))
    assert is_generator(leading_N(n))
    assert not is_generator(LeadingTermElem(n, {}))


def random_kernel_element(n: int, rng: random.Random) -> LeadingTermElem:
    basis = unshuffle_basis(n)
    vec = [Fraction(rng.randint(-3, 3)) for _ in basis]
    vec[0] -= sum(vec)
    return LeadingTermElem.from_vector(n, vec)


@pytest.mark.parametrize("n", [4, 5])
def test_single_isotypic_component_does_not_generate(n):
    rng = random.Random(n)
    shapes = [lam.rows for lam, _ in two_column_decomposition(n)]
    for keep in shapes:
        y = act(random_kernel_element(n, rng), young_symmetrizer(keep))
        assert in_kernel_module(y)
        assert young_projection_nonzero(y, keep)
        assert not is_generator(y)


def test_generator_rejects_element_outside_kernel():
    with pytest.raises(ValueError):
        is_generator(LeadingTermElem.generator(4))


def test_quasi_symmetry_examples():
    one = GroupRingElem.one(3)
    t12 = GroupRingElem.of(Perm.transposition(3, 1, 2))
    assert is_quasi_symmetry(leading_K(3), one + t12)
    assert is_quasi_symmetry(leading_K(3), cyclic_sum(3, (1, 2, 3)))
    assert not is_quasi_symmetry(leading_K(3), one)
    assert is_quasi_symmetry(leading_N(3), GroupRingElem.total(3))
    assert len(quasi_symmetries(leading_K(3))) == 4
    assert len(quasi_symmetries(leading_K(5))) == 111
