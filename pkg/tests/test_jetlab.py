from __future__ import annotations

from fractions import Fraction

import pytest
import sympy

from natgraph.complex import gk
from natgraph.jetlab import (
    JetContext, PolyDiffeo, coord_curvature, coord_lie, coord_nabla, derive_gk, evaluate, naturality_check,
    pushforward, required_order,
)
from natgraph.operators import curvature, lie_bracket, nabla, permute
from natgraph.permgroup import Perm

from _fixtures import R, u_wheels


def sym_fields(ctx: JetContext):
    xs = sympy.symbols(f"x0:{ctx.dim}")

    def conv(p):
        # only derivatives up to order two reach the origin value
        return sum((sympy.Rational(v.numerator, v.denominator) * sympy.prod([x ** e for x, e in zip(xs, k)])
                    for k, v in p.c.items() if sum(k) <= 2), sympy.Integer(0))

    fields = {lab: [conv(p) for p in comps] for lab, comps in ctx.fields.items()}
    gamma = lambda l, m, n: conv(ctx.gamma_poly(l, m, n))
    return xs, fields, gamma


def oracle(ctx: JetContext):
    """Coordinate formulas evaluated with sympy, independent of the jet machinery."""
    xs, F, G = sym_fields(ctx)
    D = ctx.dim
    rng = range(D)

    def d(X, Y):
        return [sum(X[j] * sympy.diff(Y[i], xs[j]) for j in rng) for i in rng]

    def nab(X, Y):
        return [sum(X[j] * sympy.diff(Y[i], xs[j]) for j in rng)
                + sum(G(i, j, k) * X[j] * Y[k] for j in rng for k in rng) for i in rng]

    def at0(v):
        return [Fraction(str(e.subs({x: 0 for x in xs}))) for e in v]

    X, Y, Z = F[1], F[2], F.get(3)
    br = [a - b for a, b in zip(d(X, Y), d(Y, X))]
    out = {"lie": at0(br), "nabla": at0(nab(X, Y))}
    if Z is not None:
        # graph convention: R(X,Y)Z = ∇_[X,Y] Z - ∇_X ∇_Y Z + ∇_Y ∇_X Z
        r = [a - b + c for a, b, c in zip(nab(br, Z), nab(X, nab(Y, Z)), nab(Y, nab(X, Z)))]
        out["curvature"] = at0(r)
    return out


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_graphs_match_coordinate_formulas(dim):
    for seed in range(4 if dim < 4 else 2):
        ctx = JetContext.random(dim, 3, [1, 2, 3], seed=seed)
        want = oracle(ctx)
        assert evaluate(lie_bracket(), ctx) == want["lie"] == coord_lie(ctx)
        assert evaluate(nabla(), ctx) == want["nabla"] == coord_nabla(ctx)
        assert evaluate(curvature(), ctx) == want["curvature"] == coord_curvature(ctx)


def test_pushforward_round_trip():
    ctx = JetContext.random(2, 3, [1], seed=5)
    phi = PolyDiffeo.random(2, 3, seed=9)
    back = pushforward(pushforward(ctx, phi), phi.inverse(8))
    for k in ctx.gamma:
        assert back.gamma[k].truncate(2).c == ctx.gamma[k].truncate(2).c
    for a, b in zip(back.fields[1], ctx.fields[1]):
        assert a.truncate(2).c == b.truncate(2).c


def test_pushforward_by_identity():
    ctx = JetContext.random(3, 2, [1, 2, 3], seed=2)
    same = pushforward(ctx, PolyDiffeo.linear([[1, 0, 0], [0, 1, 0], [0, 0, 1]]))
    assert evaluate(curvature(), same) == evaluate(curvature(), ctx)


def test_naturality():
    assert naturality_check(curvature(), 3, trials=3)[0]
    assert naturality_check(lie_bracket(), 2, trials=3)[0]
    christoffel = nabla().filter(lambda g: g.count("N") > 0)
    ok, witness = naturality_check(christoffel, 2, trials=3)
    assert not ok and witness is not None


def test_curvature_identities_numerically():
    ctx = JetContext.random(3, 3, [1, 2, 3], seed=11)
    r = evaluate(curvature(), ctx)
    assert evaluate(permute(curvature(), Perm.transposition(3, 1, 2)), ctx) == [-a for a in r]
    cyc = [evaluate(permute(curvature(), p), ctx) for p in (Perm.identity(3), Perm.cycle(3, 1, 2, 3),
                                                            Perm.cycle(3, 1, 3, 2))]
    assert [sum(t) for t in zip(*cyc)] == [0, 0, 0]


@pytest.mark.parametrize("k", [0, 1, 2, pytest.param(3, marks=pytest.mark.slow)])
def test_connection_rule_from_transformation_law(k):
    assert derive_gk(k) == gk(k)


def test_two_dimensional_curvature_identity():
    x = u_wheels() + R(1, 2, 3)
    order = required_order(x) + 1
    for seed in range(3):
        assert evaluate(x, JetContext.random(2, order, [1, 2, 3], seed=seed)) == [0, 0]
    assert evaluate(x, JetContext.random(3, order, [1, 2, 3], seed=0)) != [0, 0, 0]
