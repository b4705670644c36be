from __future__ import annotations

from fractions import Fraction

from natgraph.graphcore import LinComb, relabel_comb, substitute_comb, trace_product
from natgraph.operators import curvature

T = 50


def R(a: int, b: int, c: int) -> LinComb:
    """R(a, b) c with arbitrary leaf labels."""
    return relabel_comb(curvature(), {1: a, 2: b, 3: c})


def RR(a: int, b: int, c: int, d: int, e: int) -> LinComb:
    """R(a, R(b, c) d) e."""
    outer = relabel_comb(curvature(), {1: a, 2: 90, 3: e})
    inner = relabel_comb(curvature(), {1: b, 2: c, 3: d})
    return substitute_comb(outer, 90, inner)


def u_first() -> LinComb:
    """R(X,Y)Z + Y Tr(R(-,Z)X) + X Tr(R(-,Z)Y), a generating operator with wheel corrections."""
    return R(1, 2, 3) + trace_product(R(T, 3, 1), T, 2) + trace_product(R(T, 3, 2), T, 1)


def u_wheels() -> LinComb:
    """X Tr(R(Y,-)Z) + Y Tr(R(-,X)Z): built from wheels only."""
    return trace_product(R(2, T, 3), T, 1) + trace_product(R(T, 1, 3), T, 2)


U, V, X, Y, Z = 1, 2, 3, 4, 5

P5_TABLE = [
    (2, U, X, Z, Y, V), (-2, U, Y, Z, X, V), (2, V, X, Z, Y, U), (-2, V, Y, Z, X, U),
    (2, U, X, Y, V, Z), (2, V, X, Y, U, Z),
    (1, X, U, Z, V, Y), (1, X, V, Z, U, Y), (-1, Y, U, Z, V, X), (-1, Y, V, Z, U, X),
    (1, U, X, Z, V, Y), (1, V, X, Z, U, Y), (-1, U, Y, Z, V, X), (-1, V, Y, Z, U, X),
    (1, Y, X, U, V, Z), (1, Y, X, V, U, Z), (-1, X, Y, U, V, Z), (-1, X, Y, V, U, Z),
    (1, Y, X, U, Z, V), (1, Y, X, V, Z, U), (-1, X, Y, U, Z, V), (-1, X, Y, V, Z, U),
    (1, X, U, Z, Y, V), (1, X, V, Z, Y, U), (-1, Y, U, Z, X, V), (-1, Y, V, Z, X, U),
]


def p5() -> LinComb:
    out = LinComb()
    for c, *args in P5_TABLE:
        out.iadd(RR(*args), Fraction(-c, 2))
    return out
