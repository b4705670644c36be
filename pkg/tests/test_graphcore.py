from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from natgraph.complex import enumerate_basis, grades
from natgraph.graphcore import (
    Graph, LinComb, MalformedGraph, amputate, canonicalize, relabel_comb, substitute_comb, trace_close,
    unamputate,
)
from natgraph.operators import curvature, lie_bracket, nabla

BASIS = [g for d in (1, 2, 3) for gr in grades(d) for g in enumerate_basis(d, gr)]


def reorder(g: Graph, order: list[int]) -> Graph:
    """Vertex order[i] of g becomes vertex i."""
    pos = {old: new for new, old in enumerate(order)}
    kinds = [g.kinds[o] for o in order]
    out = [None if g.out[o] is None else (pos[g.out[o][0]], g.out[o][1]) for o in order]
    return Graph(kinds, out)


def white_sign(g: Graph, order: list[int]) -> int:
    pos = {old: new for new, old in enumerate(order)}
    seq = [pos[w] for w in g.whites()]
    inv = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return (-1) ** inv


@given(st.sampled_from(BASIS), st.randoms(use_true_random=False))
@settings(max_examples=150)
def test_canonical_form_invariant_under_reordering(cg, rnd):
    g = cg.graph()
    order = list(range(len(g.kinds)))
    rnd.shuffle(order)
    h = reorder(g, order)
    assert canonicalize(h).key == canonicalize(g).key
    assert LinComb.of(h) == LinComb.of(g).scale(white_sign(g, order))


def test_nabla_pair_is_unordered():
    a = Graph([("A",), ("N", 0), ("B", 1, 0), ("B", 2, 0)], [None, (0, 0), (1, 1), (1, 1)])
    b = Graph([("A",), ("N", 0), ("B", 2, 0), ("B", 1, 0)], [None, (0, 0), (1, 1), (1, 1)])
    assert LinComb.of(a) == LinComb.of(b)


def test_odd_automorphism_kills_graph():
    kinds = [("A",), ("B", 9, 2), ("W", 2), ("W", 2)] + [("B", 5, 0)] * 4
    out = [None, (0, 0), (1, 0), (1, 0), (2, 0), (2, 0), (3, 0), (3, 0)]
    g = Graph(kinds, out)
    assert canonicalize(g).parity == 0
    assert LinComb.of(g).is_zero()


def test_malformed_graphs_rejected():
    with pytest.raises(MalformedGraph):
        canonicalize(Graph([("A",), ("N", 0), ("B", 1, 0)], [None, (0, 0), (1, 1)]))
    with pytest.raises(MalformedGraph):
        Graph.from_json({"vertices": [["A"], ["B", 1, 0]], "edges": [[1, 0, 0], [1, 0, 0]]})


@pytest.mark.parametrize("cg", BASIS[:60])
def test_json_round_trip(cg):
    g = cg.graph()
    assert canonicalize(Graph.from_json(g.to_json())).key == cg.key


def test_lincomb_json_round_trip():
    R = curvature()
    assert LinComb.from_json(R.to_json()) == R


def test_amputate_round_trip():
    for cg, _ in curvature().items():
        g = cg.graph()
        assert LinComb.of(unamputate(amputate(g, [1, 2, 3]), [1, 2, 3])) == LinComb.of(g)


@given(st.integers(-5, 5), st.integers(-5, 5))
def test_lincomb_linearity(a, b):
    x, y = lie_bracket(), nabla()
    assert (x.scale(a) + y.scale(b)) - y.scale(b) == x.scale(a)
    assert (x + y).scale(Fraction(a)) == x.scale(a) + y.scale(a)
    assert (x - x).is_zero()


def test_substitution_leibniz():
    # [X, Y] with Y := [Y, Z] is antisymmetric after swapping the outer arguments
    inner = lie_bracket(2, 3)
    left = substitute_comb(lie_bracket(1, 90), 90, inner)
    right = substitute_comb(lie_bracket(90, 1), 90, inner)
    assert left == -right


def test_relabel_is_invertible():
    R = curvature()
    assert relabel_comb(relabel_comb(R, {1: 2, 2: 1}), {1: 2, 2: 1}) == R
    assert relabel_comb(R, {1: 2, 2: 1}) == -R


def test_trace_close_counts_loop_on_identity():
    g, loops = trace_close(Graph([("A",), ("B", 1, 0)], [None, (0, 0)]), 1)
    assert g.kinds == [] and loops == 1
