from __future__ import annotations

from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from natgraph.exactla import (
    NoSolution, SparseMatrix, Subspace, complement, echelon_projection, equivariant_projection, kernel_basis,
    rank, row_space_basis, solve_preimage,
)

small = st.integers(-3, 3)
matrices = st.integers(1, 5).flatmap(
    lambda r: st.integers(1, 6).flatmap(lambda c: st.lists(st.lists(small, min_size=c, max_size=c), min_size=r, max_size=r))
)


def as_sparse(rows: list[list[int]]) -> SparseMatrix:
    ncols = len(rows[0])
    cols = [{i: Fraction(r[j]) for i, r in enumerate(rows) if r[j]} for j in range(ncols)]
    return SparseMatrix.from_columns(list(range(ncols)), cols, list(range(len(rows))))


@given(matrices)
@settings(max_examples=80)
def test_rank_and_kernel_match_sympy(rows):
    M = as_sparse(rows)
    S = sympy.Matrix(rows)
    assert rank(M) == S.rank()
    ker = kernel_basis(M)
    assert len(ker) == len(S.nullspace())
    for v in ker:
        assert M.apply(v) == {}


@given(matrices, st.lists(small, min_size=6, max_size=6))
@settings(max_examples=80)
def test_preimage(rows, coeffs):
    M = as_sparse(rows)
    u = {j: Fraction(c) for j, c in enumerate(coeffs[: len(rows[0])]) if c}
    v = M.apply(u)
    w = solve_preimage(M, v)
    assert M.apply(w) == v


def test_no_solution():
    M = as_sparse([[1, 0], [0, 0]])
    with pytest.raises(NoSolution):
        solve_preimage(M, {1: Fraction(1)})


def test_complement_and_projection():
    order = {k: k for k in range(4)}
    Z = Subspace([{0: Fraction(1), 1: Fraction(1)}, {2: Fraction(1), 3: Fraction(-1)}], order)
    comp = complement(Z, range(4))
    assert len(comp) + Z.dim == 4
    p = echelon_projection(Z)
    for z in Z.vectors:
        assert p(z) == {}
    v = {0: Fraction(2), 3: Fraction(5)}
    assert p(p(v)) == p(v)
    assert Z.contains({k: a - b for k, a, b in [(k, v.get(k, 0), p(v).get(k, 0)) for k in range(4)] if a != b})


def test_equivariant_projection_commutes_with_group():
    # swap of coordinates 0 <-> 1 and 2 <-> 3; Z spanned by e0 + e1 (invariant)
    order = {k: k for k in range(4)}
    Z = Subspace([{0: Fraction(1), 1: Fraction(1)}], order)
    swap = lambda v: {(k ^ 1): c for k, c in v.items()}
    P = equivariant_projection(echelon_projection(Z), [(lambda v: dict(v), lambda v: dict(v)), (swap, swap)])
    for v in [{0: Fraction(1)}, {1: Fraction(3), 2: Fraction(1)}, {3: Fraction(-2)}]:
        assert P(swap(v)) == swap(P(v))
        assert P(P(v)) == P(v)
    assert P({0: Fraction(1), 1: Fraction(1)}) == {}


def test_row_space_basis_dimension():
    vs = [[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)], [Fraction(0), Fraction(1)]]
    assert len(row_space_basis(vs)) == 2
