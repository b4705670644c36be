"""Named natural operators as degree-0 graph combinations.

Labels 1..d stand for the vector-field arguments in order.  Operators are built
from the Lie bracket and covariant derivative graphs by substitution, which
applies the Leibniz rule to derivatives falling on substituted arguments.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .graphcore import Graph, LinComb, identity_graph, relabel_comb, substitute_comb
from .permgroup import Perm

_TMP = 10_000


def lie_bracket(x: int = 1, y: int = 2) -> LinComb:
    """[X,Y] = X^m d_m Y - Y^m d_m X."""
    out = LinComb()
    out.add_graph(Graph([("A",), ("B", y, 1), ("B", x, 0)], [None, (0, 0), (1, 0)]), 1)
    out.add_graph(Graph([("A",), ("B", x, 1), ("B", y, 0)], [None, (0, 0), (1, 0)]), -1)
    return out


def nabla(x: int = 1, y: int = 2) -> LinComb:
    """∇_X Y = Γ(X,Y) + X^m d_m Y."""
    out = LinComb()
    out.add_graph(Graph([("A",), ("N", 0), ("B", x, 0), ("B", y, 0)], [None, (0, 0), (1, 1), (1, 1)]), 1)
    out.add_graph(Graph([("A",), ("B", y, 1), ("B", x, 0)], [None, (0, 0), (1, 0)]), 1)
    return out


def identity(label: int = 1) -> LinComb:
    return LinComb.of(identity_graph(label))


def nabla_of(u: int, y: LinComb) -> LinComb:
    """∇_U applied to the vector-valued operator y (y must not use label u)."""
    return substitute_comb(nabla(u, _TMP), _TMP, y)


def bracket_of(a: LinComb, b: LinComb) -> LinComb:
    return substitute_comb(substitute_comb(lie_bracket(_TMP, _TMP + 1), _TMP, a), _TMP + 1, b)


def shift_labels(x: LinComb, by: int) -> LinComb:
    labs = set()
    for g, _ in x.items():
        for k in g.kinds:
            if k[0] == "B":
                labs.add(k[1])
    return relabel_comb(x, {i: i + by for i in labs})


def covariant_derivative(q: LinComb, tensor_slots: Sequence[int], new: int) -> LinComb:
    """(∇Q)(U; Z) = ∇_U(Q(Z)) - Σ_i Q(..., ∇_U Z_i, ...), with U carried by label `new`."""
    out = nabla_of(new, q)
    for z in tensor_slots:
        out = out - substitute_comb(q, z, nabla(new, z))
    return out


@lru_cache(maxsize=None)
def curvature() -> LinComb:
    """R(X,Y)Z = ∇_{[X,Y]}Z - ∇_X ∇_Y Z + ∇_Y ∇_X Z with X,Y,Z = 1,2,3."""
    a = substitute_comb(nabla(_TMP, 3), _TMP, lie_bracket(1, 2))
    b = nabla_of(1, nabla(2, 3))
    c = nabla_of(2, nabla(1, 3))
    return a - b + c


@lru_cache(maxsize=None)
def iterated_curvature(r: int) -> LinComb:
    """(∇^r R)(U_1..U_r)(X,Y)(Z) with labels 1..r+3, outermost derivative first."""
    if r == 0:
        return curvature()
    q = shift_labels(iterated_curvature(r - 1), 1)
    return covariant_derivative(q, list(range(2, r + 4)), 1)


@lru_cache(maxsize=None)
def iterated_field_derivative(r: int) -> LinComb:
    """(∇^r X)(U_1..U_r) with U_i = i and the differentiated field X = r+1."""
    if r == 0:
        return identity(1)
    q = shift_labels(iterated_field_derivative(r - 1), 1)
    return covariant_derivative(q, list(range(2, r + 1)), 1)


def symmetrize(x: LinComb, labels: Sequence[int]) -> LinComb:
    labels = list(labels)
    perms = list(itertools.permutations(labels))
    out = LinComb()
    for p in perms:
        out.iadd(relabel_comb(x, dict(zip(labels, p))))
    return out.scale(Fraction(1, len(perms)))


@lru_cache(maxsize=None)
def K(n: int) -> LinComb:
    """K_n = ∇^{n-3} R as an n-ary operator."""
    return iterated_curvature(n - 3)


@lru_cache(maxsize=None)
def K_sym(n: int) -> LinComb:
    """Derivative arguments of ∇^{n-3}R averaged over their permutations."""
    return symmetrize(K(n), range(1, n - 2))


@lru_cache(maxsize=None)
def V(n: int) -> LinComb:
    """V_n = symmetrized ∇^{n-1} X_n (n >= 1)."""
    return symmetrize(iterated_field_derivative(n - 1), range(1, n))


def permute(x: LinComb, p: Perm) -> LinComb:
    """Operator x(X_{p(1)}, ..., X_{p(n)}) (label i becomes p(i))."""
    return relabel_comb(x, {i: p(i) for i in range(1, p.n + 1)})


def act_group_ring(x: LinComb, s) -> LinComb:
    out = LinComb()
    for p, c in s.terms.items():
        out.iadd(permute(x, p), c)
    return out


def compose(outer: LinComb, slot: int, inner: LinComb) -> LinComb:
    """outer with argument `slot` replaced by inner (labels must already be disjoint)."""
    return substitute_comb(outer, slot, inner)
