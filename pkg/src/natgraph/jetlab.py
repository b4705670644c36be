"""Jet-level oracle: evaluate graphs on polynomial fields and test naturality.

Vector fields, the connection and the infinitesimal symmetry xi are polynomial
maps with exact rational coefficients.  A graph is evaluated at the origin by
contracting the jet tensors its vertices stand for; coordinate changes are
polynomial diffeomorphisms fixing the origin.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .graphcore import Graph, LinComb, unamputate

Exp = tuple


# ---------------------------------------------------------------------------
# truncated polynomials


class Poly:
    __slots__ = ("dim", "c")

    def __init__(self, dim: int, coeffs: Mapping | None = None) -> None:
        self.dim = dim
        self.c: dict = {k: Fraction(v) for k, v in (coeffs or {}).items() if v}

    @staticmethod
    def const(dim: int, a) -> Poly:
        return Poly(dim, {(0,) * dim: a})

    @staticmethod
    def var(dim: int, i: int) -> Poly:
        e = [0] * dim
        e[i] = 1
        return Poly(dim, {tuple(e): 1})

    def __add__(self, o: Poly) -> Poly:
        out = dict(self.c)
        for k, v in o.c.items():
            out[k] = out.get(k, 0) + v
        return Poly(self.dim, out)

    def __sub__(self, o: Poly) -> Poly:
        return self + o.scale(-1)

    def scale(self, a) -> Poly:
        return Poly(self.dim, {k: v * a for k, v in self.c.items()})

    def mul(self, o: Poly, order: int) -> Poly:
        out: dict = {}
        for k1, v1 in self.c.items():
            d1 = sum(k1)
            if d1 > order:
                continue
            for k2, v2 in o.c.items():
                if d1 + sum(k2) > order:
                    continue
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + v1 * v2
        return Poly(self.dim, out)

    def truncate(self, order: int) -> Poly:
        return Poly(self.dim, {k: v for k, v in self.c.items() if sum(k) <= order})

    def diff(self, i: int) -> Poly:
        out = {}
        for k, v in self.c.items():
            if k[i]:
                e = list(k)
                e[i] -= 1
                out[tuple(e)] = v * k[i]
        return Poly(self.dim, out)

    def at0(self) -> Fraction:
        return self.c.get((0,) * self.dim, Fraction(0))

    def degree(self) -> int:
        return max((sum(k) for k in self.c), default=0)

    def jet(self, idx: Sequence[int]) -> Fraction:
        """d_{idx} of the polynomial at the origin."""
        e = [0] * self.dim
        for i in idx:
            e[i] += 1
        c = self.c.get(tuple(e), 0)
        if not c:
            return Fraction(0)
        f = 1
        for x in e:
            f *= math.factorial(x)
        return c * f

    def __eq__(self, o) -> bool:
        return isinstance(o, Poly) and self.c == o.c

    def to_json(self) -> list:
        return [[list(k), str(v)] for k, v in sorted(self.c.items())]

    @staticmethod
    def from_json(dim: int, data) -> Poly:
        return Poly(dim, {tuple(k): Fraction(v) for k, v in data})


def monomials(dim: int, order: int) -> list[Exp]:
    out = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(dim), deg):
            e = [0] * dim
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def random_poly(rng: random.Random, dim: int, order: int, lo: int = 0, span: int = 3) -> Poly:
    return Poly(dim, {e: rng.randint(-span, span) for e in monomials(dim, order) if sum(e) >= lo})


def compose_many(polys: Sequence[Poly], sub: Sequence[Poly], order: int) -> list[Poly]:
    """polys(sub(y)) truncated at the given order (sub has no constant terms)."""
    dim_out = sub[0].dim
    cache: dict = {}
    one = Poly.const(dim_out, 1)

    def mono(e: Exp) -> Poly:
        if e in cache:
            return cache[e]
        if sum(e) == 0:
            res = one
        else:
            i = next(j for j, x in enumerate(e) if x)
            f = list(e)
            f[i] -= 1
            res = mono(tuple(f)).mul(sub[i], order)
        cache[e] = res
        return res

    outs = []
    for p in polys:
        acc: dict = {}
        for e, v in p.c.items():
            if sum(e) > order:
                continue
            for k, w in mono(e).c.items():
                acc[k] = acc.get(k, 0) + v * w
        outs.append(Poly(dim_out, acc))
    return outs


# ---------------------------------------------------------------------------
# contexts


@dataclass
class JetContext:
    dim: int
    order: int
    gamma: dict  # (lam, mu, nu) with mu <= nu -> Poly
    fields: dict  # label -> list of Poly (components)
    xi: list | None = None

    def gamma_poly(self, lam: int, mu: int, nu: int) -> Poly:
        return self.gamma[(lam, min(mu, nu), max(mu, nu))]

    @staticmethod
    def random(dim: int, order: int, labels: Sequence[int], seed: int = 0, span: int = 3,
               with_xi: bool = False, flat: bool = False, gamma_zero_at_origin: bool = False) -> JetContext:
        rng = random.Random(seed)
        gamma = {}
        for lam in range(dim):
            for mu in range(dim):
                for nu in range(mu, dim):
                    if flat:
                        gamma[(lam, mu, nu)] = Poly(dim)
                    else:
                        gamma[(lam, mu, nu)] = random_poly(rng, dim, order, 1 if gamma_zero_at_origin else 0, span)
        fields = {lab: [random_poly(rng, dim, order, 0, span) for _ in range(dim)] for lab in labels}
        xi = [random_poly(rng, dim, order + 2, 2, span) for _ in range(dim)] if with_xi else None
        return JetContext(dim, order, gamma, fields, xi)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "order": self.order,
            "gamma": [[list(k), p.to_json()] for k, p in sorted(self.gamma.items())],
            "fields": {str(lab): [p.to_json() for p in comps] for lab, comps in sorted(self.fields.items())},
        }

    @staticmethod
    def from_json(data: Mapping) -> JetContext:
        dim = data["dim"]
        gamma = {tuple(k): Poly.from_json(dim, p) for k, p in data["gamma"]}
        fields = {int(lab): [Poly.from_json(dim, p) for p in comps] for lab, comps in data["fields"].items()}
        return JetContext(dim, data["order"], gamma, fields)


class InsufficientOrder(ValueError):
    pass


def _black_tensor(ctx: JetContext, label: int, u: int, cache: dict) -> np.ndarray:
    key = ("B", label, u)
    if key not in cache:
        D = ctx.dim
        comps = ctx.fields[label]
        T = np.empty((D,) * (u + 1), dtype=object)
        for idx in itertools.product(range(D), repeat=u + 1):
            T[idx] = comps[idx[0]].jet(idx[1:])
        cache[key] = T
    return cache[key]


def _nabla_tensor(ctx: JetContext, k: int, cache: dict) -> np.ndarray:
    key = ("N", k)
    if key not in cache:
        D = ctx.dim
        T = np.empty((D,) * (k + 3), dtype=object)
        for idx in itertools.product(range(D), repeat=k + 3):
            lam, om, mu, nu = idx[0], idx[1:k + 1], idx[k + 1], idx[k + 2]
            T[idx] = ctx.gamma_poly(lam, mu, nu).jet(om)
        cache[key] = T
    return cache[key]


def _white_tensor(ctx: JetContext, u: int, cache: dict) -> np.ndarray:
    key = ("W", u)
    if key not in cache:
        if ctx.xi is None:
            raise ValueError("context carries no infinitesimal symmetry for white vertices")
        D = ctx.dim
        T = np.empty((D,) * (u + 1), dtype=object)
        for idx in itertools.product(range(D), repeat=u + 1):
            T[idx] = ctx.xi[idx[0]].jet(idx[1:])
        cache[key] = T
    return cache[key]


def _vertex_tensor(ctx: JetContext, kind: tuple, cache: dict) -> np.ndarray:
    t = kind[0]
    if t == "B":
        if kind[2] > ctx.order:
            raise InsufficientOrder(f"field jet order {kind[2]} exceeds context order {ctx.order}")
        return _black_tensor(ctx, kind[1], kind[2], cache)
    if t == "N":
        if kind[1] > ctx.order:
            raise InsufficientOrder(f"connection jet order {kind[1]} exceeds context order {ctx.order}")
        return _nabla_tensor(ctx, kind[1], cache)
    if t == "W":
        return _white_tensor(ctx, kind[1], cache)
    raise ValueError(f"cannot evaluate vertex {kind!r}")


def evaluate_graph(g: Graph, ctx: JetContext, cache: dict | None = None) -> np.ndarray:
    """Vector at the origin encoded by a graph with an anchor."""
    cache = {} if cache is None else cache
    n = len(g.kinds)
    ins = [g.inputs(v) for v in range(n)]
    # locate cycles
    state = [0] * n  # 0 unseen, 1 on stack, 2 done
    on_cycle = [False] * n
    for s in range(n):
        path = []
        v = s
        while v is not None and state[v] == 0:
            state[v] = 1
            path.append(v)
            e = g.out[v]
            v = None if e is None else e[0]
        if v is not None and state[v] == 1:
            i = path.index(v)
            for w in path[i:]:
                on_cycle[w] = True
        for w in path:
            state[w] = 2
    memo: dict = {}

    def contract(v: int, skip: int | None) -> np.ndarray:
        T = _vertex_tensor(ctx, g.kinds[v], cache)
        srcs = ins[v]
        for pos in range(len(srcs) - 1, -1, -1):
            u = srcs[pos][0]
            if u == skip:
                continue
            T = np.tensordot(T, value(u), axes=([pos + 1], [0]))
        return T

    def value(v: int) -> np.ndarray:
        if v not in memo:
            memo[v] = contract(v, None)
        return memo[v]

    def cycle_skip(v: int) -> int:
        for u, _ in ins[v]:
            if on_cycle[u] and g.out[u][0] == v:
                return u
        raise AssertionError("cycle vertex without cycle input")

    scalar = Fraction(1)
    done = set()
    for s in range(n):
        if not on_cycle[s] or s in done:
            continue
        cyc = [s]
        v = g.out[s][0]
        while v != s:
            cyc.append(v)
            v = g.out[v][0]
        done.update(cyc)
        M = None
        for v in cyc:
            # keep only one copy of the skipped cycle source slot
            pred = cycle_skip(v)
            T = _vertex_tensor(ctx, g.kinds[v], cache)
            srcs = ins[v]
            skipped = False
            for pos in range(len(srcs) - 1, -1, -1):
                u = srcs[pos][0]
                if u == pred and not skipped:
                    skipped = True
                    continue
                T = np.tensordot(T, value(u), axes=([pos + 1], [0]))
            M = T if M is None else np.tensordot(T, M, axes=([1], [0]))
        scalar *= np.trace(M)
    a = g.anchor()
    if a is None:
        raise ValueError("graph has no anchor")
    r = g.root()
    return value(r) * scalar


def evaluate(x: LinComb, ctx: JetContext) -> list[Fraction]:
    cache: dict = {}
    acc = np.array([Fraction(0)] * ctx.dim, dtype=object)
    for g, c in x.items():
        acc = acc + evaluate_graph(g.graph(), ctx, cache) * c
    return [Fraction(v) for v in acc]


def required_order(x: LinComb) -> int:
    m = 0
    for g, _ in x.items():
        for k in g.kinds:
            if k[0] == "B":
                m = max(m, k[2])
            elif k[0] == "N":
                m = max(m, k[1])
    return m


def labels_used(x: LinComb) -> list[int]:
    s = set()
    for g, _ in x.items():
        for k in g.kinds:
            if k[0] == "B":
                s.add(k[1])
    return sorted(s)


# ---------------------------------------------------------------------------
# coordinate formulas on polynomial fields


def field_bracket(X: Sequence[Poly], Y: Sequence[Poly], order: int) -> list[Poly]:
    D = len(X)
    out = []
    for lam in range(D):
        acc = Poly(D)
        for mu in range(D):
            acc = acc + X[mu].mul(Y[lam].diff(mu), order) - Y[mu].mul(X[lam].diff(mu), order)
        out.append(acc)
    return out


def field_nabla(ctx: JetContext, X: Sequence[Poly], Y: Sequence[Poly], order: int) -> list[Poly]:
    D = len(X)
    out = []
    for lam in range(D):
        acc = Poly(D)
        for mu in range(D):
            acc = acc + X[mu].mul(Y[lam].diff(mu), order)
            for nu in range(D):
                acc = acc + ctx.gamma_poly(lam, mu, nu).mul(X[mu].mul(Y[nu], order), order)
        out.append(acc)
    return out


def field_curvature(ctx: JetContext, X, Y, Z, order: int) -> list[Poly]:
    a = field_nabla(ctx, field_bracket(X, Y, order), Z, order)
    b = field_nabla(ctx, X, field_nabla(ctx, Y, Z, order), order)
    c = field_nabla(ctx, Y, field_nabla(ctx, X, Z, order), order)
    return [p - q + r for p, q, r in zip(a, b, c)]


def at_origin(F: Sequence[Poly]) -> list[Fraction]:
    return [p.at0() for p in F]


def coord_lie(ctx: JetContext, x: int = 1, y: int = 2) -> list[Fraction]:
    return at_origin(field_bracket(ctx.fields[x], ctx.fields[y], ctx.order))


def coord_nabla(ctx: JetContext, x: int = 1, y: int = 2) -> list[Fraction]:
    return at_origin(field_nabla(ctx, ctx.fields[x], ctx.fields[y], ctx.order))


def coord_curvature(ctx: JetContext, x: int = 1, y: int = 2, z: int = 3) -> list[Fraction]:
    f = ctx.fields
    return at_origin(field_curvature(ctx, f[x], f[y], f[z], ctx.order + 2))


def coord_trace_nabla(ctx: JetContext, x: int) -> Fraction:
    """Tr(∇_- X) = d_m X^m + Γ^m_{m n} X^n at the origin."""
    D = ctx.dim
    X = ctx.fields[x]
    s = Fraction(0)
    for m in range(D):
        s += X[m].diff(m).at0()
        for nn in range(D):
            s += ctx.gamma_poly(m, m, nn).at0() * X[nn].at0()
    return s


def const_fields(ctx: JetContext, vectors: Mapping[int, Sequence]) -> JetContext:
    fields = dict(ctx.fields)
    for lab, vec in vectors.items():
        fields[lab] = [Poly.const(ctx.dim, a) for a in vec]
    return JetContext(ctx.dim, ctx.order, ctx.gamma, fields, ctx.xi)


# ---------------------------------------------------------------------------
# diffeomorphisms


@dataclass
class PolyDiffeo:
    dim: int
    comps: list  # list of Poly, no constant terms

    def linear_part(self) -> list[list[Fraction]]:
        return [[p.c.get(tuple(1 if j == i else 0 for j in range(self.dim)), Fraction(0)) for i in range(self.dim)] for p in self.comps]

    def inverse(self, order: int) -> PolyDiffeo:
        A = self.linear_part()
        Ainv = _mat_inv(A)
        D = self.dim
        lin = [Poly(D, {tuple(1 if j == i else 0 for j in range(D)): 1}) for i in range(D)]
        nonlin = [Poly(D, {k: v for k, v in p.c.items() if sum(k) >= 2}) for p in self.comps]
        psi = [sum((lin[j].scale(Ainv[i][j]) for j in range(D)), Poly(D)) for i in range(D)]
        for _ in range(order + 1):
            N = compose_many(nonlin, psi, order)
            psi = []
            for i in range(D):
                acc = Poly(D)
                for j in range(D):
                    acc = acc + (lin[j] - N[j]).scale(Ainv[i][j])
                psi.append(acc.truncate(order))
        return PolyDiffeo(D, psi)

    @staticmethod
    def random(dim: int, degree: int, seed: int = 0, span: int = 2) -> PolyDiffeo:
        rng = random.Random(seed)
        # unimodular linear part keeps coefficients integral
        U = [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
        for i in range(dim):
            for j in range(i + 1, dim):
                U[i][j] = Fraction(rng.randint(-span, span))
        perm = list(range(dim))
        rng.shuffle(perm)
        A = [U[perm[i]] for i in range(dim)]
        comps = []
        for i in range(dim):
            c = {tuple(1 if k == j else 0 for k in range(dim)): A[i][j] for j in range(dim)}
            for e in monomials(dim, degree):
                if sum(e) >= 2:
                    c[e] = Fraction(rng.randint(-span, span))
            comps.append(Poly(dim, c))
        return PolyDiffeo(dim, comps)

    @staticmethod
    def linear(A: Sequence[Sequence]) -> PolyDiffeo:
        D = len(A)
        return PolyDiffeo(D, [Poly(D, {tuple(1 if k == j else 0 for k in range(D)): A[i][j] for j in range(D)}) for i in range(D)])

    def to_json(self) -> dict:
        return {"dim": self.dim, "comps": [p.to_json() for p in self.comps]}

    @staticmethod
    def from_json(data: Mapping) -> PolyDiffeo:
        return PolyDiffeo(data["dim"], [Poly.from_json(data["dim"], p) for p in data["comps"]])


def _mat_inv(A: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(A)
    M = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ValueError("linear part is not invertible")
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [x / p for x in M[col]]
        for r in range(n):
            if r != col and M[r][col]:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [row[n:] for row in M]


def _jacobian(comps: Sequence[Poly]) -> list[list[Poly]]:
    D = comps[0].dim
    return [[p.diff(j) for j in range(D)] for p in comps]


def pushforward(ctx: JetContext, phi: PolyDiffeo) -> JetContext:
    """Fields and connection expressed in the coordinates y = phi(x), jets up to ctx.order."""
    D, r = ctx.dim, ctx.order
    psi = phi.inverse(r + 2).comps
    Jphi = _jacobian(phi.comps)
    Jphi_at = [compose_many(row, psi, r) for row in Jphi]
    Jpsi = _jacobian(psi)
    fields = {}
    for lab, X in ctx.fields.items():
        Xs = compose_many(X, psi, r)
        fields[lab] = [sum((Jphi_at[a][l].mul(Xs[l], r) for l in range(D)), Poly(D)).truncate(r) for a in range(D)]
    keys = sorted(ctx.gamma)
    G = dict(zip(keys, compose_many([ctx.gamma[k] for k in keys], psi, r)))

    def g(l, m, n):
        return G[(l, min(m, n), max(m, n))]

    gamma = {}
    for a in range(D):
        for b in range(D):
            for c in range(b, D):
                inner = []
                for l in range(D):
                    acc = psi[l].diff(b).diff(c).truncate(r)
                    for m in range(D):
                        for n in range(D):
                            acc = acc + g(l, m, n).mul(Jpsi[m][b].mul(Jpsi[n][c], r), r)
                    inner.append(acc)
                gamma[(a, b, c)] = sum((Jphi_at[a][l].mul(inner[l], r) for l in range(D)), Poly(D)).truncate(r)
    return JetContext(D, r, gamma, fields, None)


def naturality_check(x: LinComb, dim: int, trials: int = 20, seed: int = 0, order: int | None = None,
                     diffeo_degree: int = 3) -> tuple[bool, dict | None]:
    """Exact comparison of evaluate(x) in two coordinate systems on random data."""
    order = required_order(x) + 1 if order is None else order
    labels = labels_used(x)
    for t in range(trials):
        s = seed * 1_000_003 + t
        ctx = JetContext.random(dim, order, labels, seed=s)
        phi = PolyDiffeo.random(dim, diffeo_degree, seed=s + 7)
        v = evaluate(x, ctx)
        w = evaluate(x, pushforward(ctx, phi))
        A = phi.linear_part()
        Av = [sum(A[i][j] * v[j] for j in range(dim)) for i in range(dim)]
        if Av != w:
            return False, {"trial": t, "seed": s, "expected": [str(a) for a in Av], "got": [str(a) for a in w]}
    return True, None


# ---------------------------------------------------------------------------
# derivation of the connection rule from the transformation law


def lie_derivative_gamma(ctx: JetContext, order: int) -> dict:
    """(L_xi Γ)^l_{mn} as polynomials."""
    D = ctx.dim
    xi = ctx.xi
    out = {}
    for l in range(D):
        for m in range(D):
            for n in range(D):
                acc = xi[l].diff(m).diff(n)
                for r in range(D):
                    acc = acc + xi[r].mul(ctx.gamma_poly(l, m, n).diff(r), order)
                    acc = acc - ctx.gamma_poly(r, m, n).mul(xi[l].diff(r), order)
                    acc = acc + ctx.gamma_poly(l, r, n).mul(xi[r].diff(m), order)
                    acc = acc + ctx.gamma_poly(l, m, r).mul(xi[r].diff(n), order)
                out[(l, m, n)] = acc
    return out


def derive_gk(k: int, dim: int | None = None, samples: int | None = None, seed: int = 0) -> LinComb:
    """Fit the full Nabla(k) replacement against -d^k(L_xi Γ) on random jets."""
    from .complex import rooted_two_vertex_trees, white_corolla
    from .exactla import Echelon, NoSolution

    dim = dim or 3
    cands = sorted(set(rooted_two_vertex_trees(k)) | set(white_corolla(k + 2).terms))
    labels = list(range(1, k + 3))
    rows = []
    samples = samples or 4 * len(cands) // dim + 4
    for s in range(samples):
        rng = random.Random(seed * 7919 + s)
        ctx = JetContext.random(dim, k + 1, [], seed=seed * 7919 + s, with_xi=True)
        vecs = {lab: [rng.randint(-3, 3) for _ in range(dim)] for lab in labels}
        ctx = const_fields(ctx, vecs)
        L = lie_derivative_gamma(ctx, k + 2)
        # contract pair slots with the last two vectors, then differentiate along the first k
        target = []
        for l in range(dim):
            f = Poly(dim)
            for m in range(dim):
                for n in range(dim):
                    f = f + L[(l, m, n)].scale(vecs[k + 1][m] * vecs[k + 2][n])
            for i in range(k):
                f = sum((f.diff(j).scale(vecs[i + 1][j]) for j in range(dim)), Poly(dim))
            target.append(-f.at0())
        vals = [evaluate_graph(unamputate(c.graph()), ctx) for c in cands]
        for l in range(dim):
            row = {i: Fraction(vals[i][l]) for i in range(len(cands)) if vals[i][l]}
            row[len(cands)] = -target[l]
            rows.append(row)
    ech = Echelon.build(rows, {i: i for i in range(len(cands) + 1)})
    if len(cands) in ech.pivots:
        raise NoSolution("no graph combination matches the transformation law")
    if ech.rank != len(cands):
        raise ValueError("samples do not determine the rule uniquely")
    out = LinComb()
    for p, row in ech.rows:
        out._add(cands[p], -row.get(len(cands), 0))
    return out
