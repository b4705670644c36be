"""The bigraded graph complex: basis enumeration and the differentials δh, δv, δ.

Bigrading: p = -(number of Nabla vertices), q = whites + nablas.
The differential is the Chevalley-Eilenberg differential of formal vector fields
vanishing to second order, acting by -L_xi on jets of X and Gamma:

    Black(u)  -> white-on-top and black-on-top Leibniz splittings
    Nabla(k)  -> -White(k+2) (horizontal part)  +  G_k (vertical part)
    White(u)  -> bracket splitting into two whites
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .graphcore import CanonGraph, Graph, LinComb, graft_terms, slot_classes

# sign and order of the white splitting rule, fixed by requiring δ² = 0
WHITE_SIGN = 1
WHITE_BOTTOM_FIRST = False


@dataclass(frozen=True)
class Bigrade:
    p: int
    q: int

    @property
    def nablas(self) -> int:
        return -self.p

    @property
    def whites(self) -> int:
        return self.p + self.q


def bigrade_of(g: CanonGraph) -> Bigrade:
    n = g.count("N")
    return Bigrade(-n, g.count("W") + n)


def _splits(items: Sequence[int]) -> Iterable[tuple[tuple[int, ...], tuple[int, ...]]]:
    """All ordered splittings items = A ⊔ B (A kept below/inside, B the rest)."""
    items = tuple(items)
    for mask in range(1 << len(items)):
        A = tuple(x for i, x in enumerate(items) if mask >> i & 1)
        B = tuple(x for i, x in enumerate(items) if not mask >> i & 1)
        yield A, B


class _Builder:
    """Tiny helper to build rooted graphs with legs."""

    def __init__(self, nlegs: int) -> None:
        self.kinds: list = [("A",)]
        self.out: list = [None]
        self.legs = {}
        for i in range(1, nlegs + 1):
            self.legs[i] = len(self.kinds)
            self.kinds.append(("L", i))
            self.out.append(None)

    def vertex(self, kind: tuple) -> int:
        self.kinds.append(kind)
        self.out.append(None)
        return len(self.kinds) - 1

    def edge(self, src: int, tgt: int, cls: int = 0) -> None:
        self.out[src] = (tgt, cls)

    def leg(self, i: int, tgt: int, cls: int = 0) -> None:
        self.out[self.legs[i]] = (tgt, cls)

    def graph(self) -> Graph:
        return Graph(self.kinds, self.out)


@lru_cache(maxsize=None)
def black_patch(label: int, u: int) -> LinComb:
    """δ of Black(u) carrying label as a rooted u-graph."""
    out = LinComb()
    legs = range(1, u + 1)
    for A, B in _splits(legs):
        if len(B) >= 1:
            b = _Builder(u)
            w = b.vertex(("W", len(B) + 1))
            x = b.vertex(("B", label, len(A)))
            b.edge(w, 0)
            b.edge(x, w)
            for i in B:
                b.leg(i, w)
            for i in A:
                b.leg(i, x)
            out.add_graph(b.graph(), 1)
        if len(A) >= 2:
            b = _Builder(u)
            x = b.vertex(("B", label, len(B) + 1))
            w = b.vertex(("W", len(A)))
            b.edge(x, 0)
            b.edge(w, x)
            for i in B:
                b.leg(i, x)
            for i in A:
                b.leg(i, w)
            out.add_graph(b.graph(), -1)
    return out


@lru_cache(maxsize=None)
def white_corolla(u: int, coef: int = 1) -> LinComb:
    b = _Builder(u)
    w = b.vertex(("W", u))
    b.edge(w, 0)
    for i in range(1, u + 1):
        b.leg(i, w)
    return LinComb.of(b.graph(), coef)


@lru_cache(maxsize=None)
def nabla_patch_h(k: int) -> LinComb:
    return white_corolla(k + 2, -1)


@lru_cache(maxsize=None)
def nabla_patch_v(k: int) -> LinComb:
    """G_k: the two-vertex (Nabla, White) trees of the vertical differential of Nabla(k)."""
    out = LinComb()
    omega = list(range(1, k + 1))
    mu, nu = k + 1, k + 2
    for A, B in _splits(omega):
        if len(A) >= 2:
            # -d_A xi^rho d_{B rho} Gamma
            b = _Builder(k + 2)
            nv = b.vertex(("N", len(B) + 1))
            w = b.vertex(("W", len(A)))
            b.edge(nv, 0)
            b.edge(w, nv, 0)
            for i in B:
                b.leg(i, nv, 0)
            b.leg(mu, nv, 1)
            b.leg(nu, nv, 1)
            for i in A:
                b.leg(i, w)
            out.add_graph(b.graph(), -1)
        if len(A) >= 1:
            # + d_{A rho} xi^lambda d_B Gamma^rho_{mu nu}
            b = _Builder(k + 2)
            w = b.vertex(("W", len(A) + 1))
            nv = b.vertex(("N", len(B)))
            b.edge(w, 0)
            b.edge(nv, w)
            for i in A:
                b.leg(i, w)
            for i in B:
                b.leg(i, nv, 0)
            b.leg(mu, nv, 1)
            b.leg(nu, nv, 1)
            out.add_graph(b.graph(), 1)
            # - d_{A mu} xi^rho d_B Gamma^lambda_{rho nu}, and the same with nu
            for inner, outer in ((mu, nu), (nu, mu)):
                b = _Builder(k + 2)
                nv = b.vertex(("N", len(B)))
                w = b.vertex(("W", len(A) + 1))
                b.edge(nv, 0)
                b.edge(w, nv, 1)
                b.leg(outer, nv, 1)
                for i in B:
                    b.leg(i, nv, 0)
                for i in A:
                    b.leg(i, w)
                b.leg(inner, w)
                out.add_graph(b.graph(), -1)
    return out


def gk(k: int) -> LinComb:
    """Full replacement of Nabla(k): the horizontal -White(k+2) plus the vertical G_k."""
    return nabla_patch_h(k) + nabla_patch_v(k)


@lru_cache(maxsize=None)
def white_patch(u: int) -> LinComb:
    out = LinComb()
    for A, B in _splits(range(1, u + 1)):
        if len(A) >= 2 and len(B) >= 1:
            b = _Builder(u)
            if WHITE_BOTTOM_FIRST:
                bot = b.vertex(("W", len(A)))
                top = b.vertex(("W", len(B) + 1))
            else:
                top = b.vertex(("W", len(B) + 1))
                bot = b.vertex(("W", len(A)))
            b.edge(top, 0)
            b.edge(bot, top)
            for i in B:
                b.leg(i, top)
            for i in A:
                b.leg(i, bot)
            out.add_graph(b.graph(), WHITE_SIGN)
    return out


def _apply(x: LinComb, rule) -> LinComb:
    out = LinComb()
    for cg, c in x.items():
        g = cg.graph()
        for v, kind in enumerate(g.kinds):
            patch = rule(kind)
            if patch is not None and not patch.is_zero():
                graft_terms(g, v, patch.items(), out, c)
    return out


def _rule_h(kind):
    if kind[0] == "N":
        return nabla_patch_h(kind[1])
    return None


def _rule_v(kind):
    t = kind[0]
    if t == "B" and kind[2] >= 1:
        return black_patch(kind[1], kind[2])
    if t == "N":
        return nabla_patch_v(kind[1])
    if t == "W":
        return white_patch(kind[1])
    return None


def _rule_total(kind):
    if kind[0] == "N":
        return gk(kind[1])
    return _rule_v(kind)


def delta_h(x: LinComb, d: int | None = None) -> LinComb:
    return _apply(x, _rule_h)


def delta_v(x: LinComb, d: int | None = None) -> LinComb:
    return _apply(x, _rule_v)


def delta(x: LinComb, d: int | None = None) -> LinComb:
    return _apply(x, _rule_total)


# ---------------------------------------------------------------------------
# enumeration


def _partitions_bounded(total: int, parts: int, minimum: int) -> Iterable[tuple[int, ...]]:
    """Weakly increasing tuples of `parts` integers >= minimum summing to total."""
    if parts == 0:
        if total == 0:
            yield ()
        return

    def rec(rem, k, lo):
        if k == 0:
            if rem == 0:
                yield ()
            return
        for x in range(lo, rem - (k - 1) * lo + 1):
            for rest in rec(rem - x, k - 1, x):
                yield (x,) + rest

    yield from rec(total, parts, minimum)


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for c in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for x in c:
            out.append(x - prev - 1)
            prev = x
        out.append(total + parts - 2 - prev)
        yield tuple(out)


@dataclass(frozen=True)
class Bounds:
    max_vertices: int = 10
    max_arity: int = 6


def vertex_multisets(d: int, nablas: int, whites: int, leaves: Sequence[int] = (), bounds: Bounds = Bounds()):
    """Vertex kind lists with the right edge count: Σu + Σk + Σ(w-2) = d-1-n-m."""
    budget = d - 1 - nablas - whites
    if budget < 0 or d + nablas + whites + 1 > bounds.max_vertices:
        return
    free_labels = [i for i in range(1, d + 1) if i not in set(leaves)]
    for bu in range(budget + 1):
        for us in _compositions(bu, len(free_labels)):
            if any(u > bounds.max_arity for u in us):
                continue
            rest = budget - bu
            for bk in range(rest + 1):
                for ks in _partitions_bounded(bk, nablas, 0):
                    if any(k + 2 > bounds.max_arity for k in ks):
                        continue
                    for ws in _partitions_bounded(rest - bk, whites, 0):
                        if any(w + 2 > bounds.max_arity for w in ws):
                            continue
                        arities = dict(zip(free_labels, us))
                        kinds = [("A",)]
                        kinds += [("B", i, arities.get(i, 0)) for i in range(1, d + 1)]
                        kinds += [("N", k) for k in ks]
                        kinds += [("W", w + 2) for w in ws]
                        yield kinds


def graphs_on(kinds: list) -> Iterable[Graph]:
    """All edge assignments on a fixed vertex list (orderly for interchangeable sources)."""
    n = len(kinds)
    slots = []
    for v, k in enumerate(kinds):
        for c, cap in slot_classes(k):
            slots.append([v, c, cap])
    sources = [v for v in range(n) if kinds[v][0] != "A"]
    out: list = [None] * n

    def rec(i: int, last_for_kind: dict):
        if i == len(sources):
            yield Graph(list(kinds), list(out))
            return
        v = sources[i]
        k = kinds[v]
        interchangeable = False
        lo = last_for_kind.get(k, 0) if interchangeable else 0
        for s in range(lo, len(slots)):
            slot = slots[s]
            if slot[2] == 0:
                continue
            slot[2] -= 1
            out[v] = (slot[0], slot[1])
            if interchangeable:
                prev = last_for_kind.get(k)
                last_for_kind[k] = s
            yield from rec(i + 1, last_for_kind)
            if interchangeable:
                if prev is None:
                    del last_for_kind[k]
                else:
                    last_for_kind[k] = prev
            slot[2] += 1
        out[v] = None

    yield from rec(0, {})


def enumerate_basis(d: int, grade: Bigrade, bounds: Bounds = Bounds(), leaves: Sequence[int] = ()) -> list[CanonGraph]:
    """Isomorphism classes of nonvanishing graphs of the given bigrade, in canonical order.

    `leaves` lists labels forced to arity 0 (the subcomplexes Gr(n)_n, Gr(n+1)_n)."""
    nablas, whites = grade.nablas, grade.whites
    if nablas < 0 or whites < 0:
        return []
    seen: dict = {}
    for kinds in vertex_multisets(d, nablas, whites, leaves, bounds):
        for g in graphs_on(kinds):
            lc = LinComb.of(g)
            for cg in lc.terms:
                seen[cg] = None
    return sorted(seen)


def grades(d: int) -> list[Bigrade]:
    out = []
    for n in range(d):
        for m in range(d - n):
            out.append(Bigrade(-n, n + m))
    return out


def coordinates(x: LinComb) -> dict:
    return dict(x.terms)


def degree0_kernel_dim(d: int, bounds: Bounds = Bounds()) -> int:
    """dim of cocycles in total degree 0 (there are no coboundaries in degree 0)."""
    from .exactla import SparseMatrix, rank

    dom = []
    for n in range(d):
        dom += enumerate_basis(d, Bigrade(-n, n), bounds)
    cols = [coordinates(delta(LinComb.of(g))) for g in dom]
    M = SparseMatrix.from_columns(dom, cols)
    return len(dom) - rank(M)


def degree0_cocycles(d: int, bounds: Bounds = Bounds()) -> list[LinComb]:
    from .exactla import SparseMatrix, kernel_basis

    dom = []
    for n in range(d):
        dom += enumerate_basis(d, Bigrade(-n, n), bounds)
    cols = [coordinates(delta(LinComb.of(g))) for g in dom]
    M = SparseMatrix.from_columns(dom, cols)
    return [LinComb(v) for v in kernel_basis(M)]


def rooted_two_vertex_trees(k: int) -> list[CanonGraph]:
    """Rooted (k+2)-graphs made of one Nabla and one White vertex forming a tree under the root."""
    from .graphcore import canonicalize

    out: dict = {}
    for a in range(k + 2):
        b = k + 1 - a
        if b < 2:
            continue
        kinds = [("A",)] + [("L", i) for i in range(1, k + 3)] + [("N", a), ("W", b)]
        nv, wv = len(kinds) - 2, len(kinds) - 1
        for g in graphs_on(kinds):
            r = g.root()
            if r not in (nv, wv):
                continue
            other = wv if r == nv else nv
            if g.out[other][0] != r:
                continue
            cg = canonicalize(g)
            if cg.parity:
                out[CanonGraph(cg.key)] = None
    return sorted(out)


def solve_gk_from_nilpotency(k: int) -> tuple[LinComb, int]:
    """Determine the vertical Nabla(k) rule from δ² = 0 on the rooted Nabla(k) corolla.

    The lower-arity rules are taken as known.  Returns a particular solution of
    the linear constraints and the dimension of the solution space."""
    from .exactla import SparseMatrix, kernel_basis, solve_preimage
    from .graphcore import leg_corolla

    cands = rooted_two_vertex_trees(k)
    corolla = leg_corolla(("N", k))
    base = LinComb()
    graft_terms(corolla, 1, nabla_patch_h(k).items(), base)
    # δ(T) for a candidate uses the known rules on its (lower) Nabla and White vertices;
    # δ²(corolla) = δ(-W) + δ(Σ c_t T_t) must vanish
    const = delta(base)
    cols = [coordinates(delta(LinComb({t: 1}))) for t in cands]
    M = SparseMatrix.from_columns(cands, cols)
    target = {key: -c for key, c in const.terms.items()}
    sol = solve_preimage(M, target)
    null = kernel_basis(M)
    return LinComb(sol), len(null)
