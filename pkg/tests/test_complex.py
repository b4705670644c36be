from __future__ import annotations

from collections import Counter

import pytest

from natgraph.complex import (
    Bigrade, black_patch, coordinates, degree0_cocycles, delta, delta_h, delta_v, enumerate_basis, gk, grades,
    solve_gk_from_nilpotency, white_corolla,
)
from natgraph.exactla import SparseMatrix, rank
from natgraph.graphcore import LinComb
from natgraph.operators import curvature, lie_bracket, nabla
from natgraph.graphcore import trace_product


def basis(d: int):
    return [g for gr in grades(d) for g in enumerate_basis(d, gr)]


@pytest.mark.parametrize("d", [1, 2])
def test_differentials_square_to_zero(d):
    for g in basis(d):
        x = LinComb({g: 1})
        assert delta_h(delta_h(x)).is_zero()
        assert delta_v(delta_v(x)).is_zero()
        assert (delta_h(delta_v(x)) + delta_v(delta_h(x))).is_zero()


@pytest.mark.parametrize("d,expected", [(1, 1), (2, 4), (3, 35)])
def test_degree_zero_cohomology_dimension(d, expected):
    assert len(degree0_cocycles(d)) == expected


def test_negative_degree_beyond_d_is_empty():
    for d in (1, 2, 3):
        assert enumerate_basis(d, Bigrade(-d, d)) == []


def span_rank(xs):
    keys = sorted({g for x in xs for g in x.terms})
    M = SparseMatrix.from_columns(list(range(len(xs))), [coordinates(x) for x in xs], keys)
    return rank(M)


def test_named_arity_two_operators_form_a_basis():
    named = [
        nabla(1, 2), nabla(2, 1),
        trace_product(nabla(50, 2), 50, 1), trace_product(nabla(50, 1), 50, 2),
    ]
    cocycles = degree0_cocycles(2)
    assert span_rank(named) == 4
    assert span_rank(cocycles + named) == 4


@pytest.mark.parametrize("x", [lie_bracket(), nabla(), curvature()], ids=["bracket", "nabla", "curvature"])
def test_named_cocycles(x):
    assert delta(x).is_zero()


def test_connection_rule_low_orders():
    assert gk(0) == white_corolla(2, -1)
    g1 = gk(1)
    assert len(g1) == 4
    assert Counter(c for _, c in g1.items()) == Counter({-1: 3, 1: 1})
    # horizontal part is minus the White corolla of arity k+2
    for k in range(3):
        assert gk(k).filter(lambda g: g.count("N") == 0) == white_corolla(k + 2, -1)


def shape(g) -> tuple:
    return tuple(sorted(k for k in g.kinds if k[0] in ("B", "W")))


def test_black_vertex_rule():
    assert black_patch(7, 0).is_zero()
    b1 = black_patch(7, 1)
    assert len(b1) == 1 and shape(next(iter(b1.terms))) == (("B", 7, 0), ("W", 2))
    b2 = black_patch(7, 2)
    shapes = Counter()
    for g, c in b2.items():
        shapes[(shape(g), c)] += 1
    assert shapes == Counter({
        ((("B", 7, 0), ("W", 3)), 1): 1,
        ((("B", 7, 1), ("W", 2)), 1): 2,
        ((("B", 7, 1), ("W", 2)), -1): 1,
    })
    # the negative term is the Black vertex fed by a White vertex
    neg = [g for g, c in b2.items() if c < 0][0].graph()
    w = neg.whites()[0]
    assert neg.kinds[neg.out[w][0]][0] == "B"


def test_nilpotency_leaves_connection_rule_underdetermined():
    assert [solve_gk_from_nilpotency(k)[1] for k in (0, 1, 2)] == [0, 3, 5]
