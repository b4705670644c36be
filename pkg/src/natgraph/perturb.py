"""Homological perturbation: lifting horizontal cocycles to total cocycles.

The horizontal differential only turns Nabla vertices into White vertices of the
same arity, so it is block diagonal over "skeletons" (the graph with Nabla and
White forgotten down to a bare vertex of the same arity).  Preimages and
projections are computed block by block.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .complex import Bigrade, Bounds, coordinates, delta_h, delta_v, enumerate_basis
from .exactla import Echelon, SparseMatrix, kernel_basis, solve_preimage
from .graphcore import CanonGraph, Graph, LinComb, _canon_fast, relabel
from .permgroup import LeadingTermElem, Perm, all_perms, in_kernel_module


def skeleton(cg: CanonGraph) -> CanonGraph:
    g = cg.graph()
    kinds, out = [], []
    for k in g.kinds:
        kinds.append(("E", len(g.inputs(len(kinds)))) if k[0] in ("N", "W") else k)
    marked = {i for i, k in enumerate(g.kinds) if k[0] in ("N", "W")}
    for e in g.out:
        out.append(None if e is None else (e[0], 0) if e[0] in marked else e)
    sk, _ = _canon_fast(kinds, out)
    return sk


def block_domain(sk: CanonGraph) -> list[CanonGraph]:
    """All-Nabla decorations of a skeleton."""
    g = sk.graph()
    evs = [i for i, k in enumerate(g.kinds) if k[0] == "E"]
    ins = {v: [u for u, _ in g.inputs(v)] for v in evs}
    seen: dict = {}
    for pairs in itertools.product(*[list(itertools.combinations(ins[v], 2)) for v in evs]):
        kinds = list(g.kinds)
        out = list(g.out)
        for v in evs:
            kinds[v] = ("N", g.kinds[v][1] - 2)
        for v, pr in zip(evs, pairs):
            for u in ins[v]:
                out[u] = (v, 1 if u in pr else 0)
        cg, s = _canon_fast(kinds, out)
        if s:
            seen[cg] = None
    return sorted(seen)


@dataclass
class _Block:
    domain: list
    matrix: SparseMatrix
    kernel: Echelon


class PerturbationState:
    """Splitting data: either the echelon complement (plain) or its group average (equivariant)."""

    def __init__(self, group: Sequence[Perm] | None = None) -> None:
        self.group = list(group) if group else None
        self._blocks: dict = {}

    @property
    def equivariant(self) -> bool:
        return self.group is not None

    def block(self, sk: CanonGraph) -> _Block:
        b = self._blocks.get(sk)
        if b is None:
            dom = block_domain(sk)
            cols = [coordinates(delta_h(LinComb({g: 1}))) for g in dom]
            M = SparseMatrix.from_columns(dom, cols)
            ker = kernel_basis(M)
            order = {g: i for i, g in enumerate(dom)}
            b = _Block(dom, M, Echelon.build(ker, order))
            self._blocks[sk] = b
        return b

    def _by_skeleton(self, x: LinComb) -> dict:
        parts: dict = {}
        for g, c in x.terms.items():
            parts.setdefault(skeleton(g), {})[g] = c
        return parts

    def preimage(self, y: LinComb) -> LinComb:
        """Some u with δh u = y."""
        out = LinComb()
        for sk, part in sorted(self._by_skeleton(y).items(), key=lambda kv: kv[0].key):
            blk = self.block(sk)
            u = solve_preimage(blk.matrix, part)
            out.iadd(LinComb(u))
        return out

    def plain_projection(self, u: LinComb) -> LinComb:
        out = LinComb()
        for sk, part in self._by_skeleton(u).items():
            out.iadd(LinComb(self.block(sk).kernel.reduce(part)))
        return out

    def projection(self, u: LinComb) -> LinComb:
        if not self.equivariant:
            return self.plain_projection(u)
        acc = LinComb()
        for g in self.group:
            gi = g.inverse()
            gu = act_labels(u, g)
            acc.iadd(act_labels(self.plain_projection(gu), gi))
        return acc.scale(Fraction(1, len(self.group)))

    def in_zh(self, x: LinComb) -> bool:
        return delta_h(x).is_zero()


def act_labels(x: LinComb, p: Perm) -> LinComb:
    """Relabel leaves i -> p(i) for i <= p.n, other labels fixed."""
    out = LinComb()
    m = {i: p(i) for i in range(1, p.n + 1)}
    for g, c in x.terms.items():
        out.add_graph(relabel(g.graph(), m), c)
    return out


def u_step(x: LinComb, state: PerturbationState) -> LinComb:
    y = delta_v(x)
    if y.is_zero():
        return LinComb()
    return state.projection(state.preimage(y))


def nabla_count(x: LinComb) -> set:
    return {g.count("N") for g in x.terms}


@dataclass
class Cocycle:
    value: LinComb
    leading: LinComb

    @property
    def lower_order_terms(self) -> LinComb:
        return self.value - self.leading


def beta(z: LinComb, state: PerturbationState, max_steps: int = 64) -> Cocycle:
    """z - U z + U^2 z - ...; terminates because each step adds a Nabla vertex."""
    if not delta_h(z).is_zero():
        raise ValueError("input is not horizontally closed")
    total = LinComb(z.terms)
    x = z
    sign = -1
    for _ in range(max_steps):
        x = u_step(x, state)
        if x.is_zero():
            return Cocycle(total, LinComb(z.terms))
        total.iadd(x, sign)
        sign = -sign
    raise RuntimeError("perturbation series did not terminate")


def vf_order(x: LinComb) -> int:
    """max over terms of the summed Black arities (-1 for the zero combination)."""
    best = -1
    for g in x.terms:
        best = max(best, sum(k[2] for k in g.kinds if k[0] == "B"))
    return best


def c_order(x: LinComb) -> int:
    """max over terms of the largest Nabla derivative order (-1 if Nabla-free)."""
    best = -1
    for g in x.terms:
        for k in g.kinds:
            if k[0] == "N":
                best = max(best, k[1])
    return best


# ---------------------------------------------------------------------------
# horizontal cohomology


def zh_basis(d: int, n: int, bounds: Bounds = Bounds(), leaves: Sequence[int] = ()) -> list[LinComb]:
    dom = enumerate_basis(d, Bigrade(-n, n), bounds, leaves)
    if not dom:
        return []
    cols = [coordinates(delta_h(LinComb({g: 1}))) for g in dom]
    M = SparseMatrix.from_columns(dom, cols)
    return [LinComb(v) for v in kernel_basis(M)]


def kernel_module_graph_count(d: int, bounds: Bounds = Bounds()) -> int:
    return sum(len(zh_basis(d, n, bounds)) for n in range(d))


# ---------------------------------------------------------------------------
# generators b_n and xi_n


def b_graph(n: int) -> LinComb:
    """Black(n) carrying label n+1, fed by leaves 1..n."""
    kinds = [("A",), ("B", n + 1, n)] + [("B", i, 0) for i in range(1, n + 1)]
    out = [None, (0, 0)] + [(1, 0)] * n
    return LinComb.of(Graph(kinds, out))


def nabla_corolla(n: int) -> Graph:
    """Nabla(n-2) whose slot i is fed by leaf i (derivative slots first, pair last)."""
    kinds = [("A",), ("N", n - 2)] + [("B", i, 0) for i in range(1, n + 1)]
    out = [None, (0, 0)] + [(1, 0)] * (n - 2) + [(1, 1), (1, 1)]
    return Graph(kinds, out)


def xi_graph(leading: LeadingTermElem) -> LinComb:
    """Σ α_σ (Nabla(n-2) with slot i fed by leaf σ(i))."""
    n = leading.n
    base = nabla_corolla(n)
    out = LinComb()
    for p, c in leading.coeffs.items():
        out.add_graph(relabel(base, {i: p(i) for i in range(1, n + 1)}), c)
    return out


def leading_of_graphs(x: LinComb, n: int) -> LeadingTermElem:
    """Read a combination of single-Nabla(n-2) graphs with leaves 1..n back as an E0(n) element."""
    t: dict = {}
    for g, c in x.terms.items():
        gr = g.graph()
        nv = next(i for i, k in enumerate(gr.kinds) if k[0] == "N")
        der, pair = [], []
        for u, cl in gr.inputs(nv):
            lab = gr.kinds[u][1]
            (der if cl == 0 else pair).append(lab)
        p = Perm(tuple(sorted(der)) + tuple(sorted(pair)))
        t[p] = t.get(p, 0) + c
    return LeadingTermElem(n, t)


def ideal_cocycle(n: int, which: str = "sigma", leading: LeadingTermElem | None = None,
                  equivariant: bool = True) -> Cocycle:
    """ς_n = β(ξ_n) in Gr(n)_n or ν_n = β(b_n) in Gr(n+1)_n."""
    group = all_perms(n) if equivariant else None
    state = PerturbationState(group)
    if which == "nu":
        z = b_graph(n)
    else:
        if leading is None:
            raise ValueError("leading term required")
        if not in_kernel_module(leading):
            raise ValueError("leading term is not in the kernel module")
        z = xi_graph(leading)
    return beta(z, state)


def correction(ideal: Cocycle | LinComb, baseline: Cocycle | LinComb) -> LinComb:
    val = ideal.value if isinstance(ideal, Cocycle) else ideal
    base = baseline.value if isinstance(baseline, Cocycle) else baseline
    return val - base


def max_nabla_leading(x: LinComb) -> LinComb:
    """Terms with the fewest Nabla vertices."""
    if x.is_zero():
        return LinComb()
    m = min(g.count("N") for g in x.terms)
    return x.filter(lambda g: g.count("N") == m)
