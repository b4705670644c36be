"""Decorated directed graphs, canonical forms, linear combinations and grafting.

A graph is a functional digraph: every vertex except the anchor has exactly one
output edge, recorded as (target vertex, input class of the target).  Input
slots inside a class are symmetric.  Vertex kinds are tuples:

    ('A',)            anchor, one input
    ('B', label, u)   vector-field jet d^u X_label (label 0 = unlabeled)
    ('N', k)          d^k Gamma: class 0 has k derivative slots, class 1 the pair
    ('W', u)          odd vertex d^u xi, u >= 2 symmetric inputs
    ('L', i)          leg i of a rooted graph (no inputs)
    ('D', n)          scheme vertex with n ordered inputs (classes 0..n-1)
    ('V', n, label)   labeled scheme vertex with n ordered inputs

White vertices are odd; their order in the vertex list is the orientation, and
reordering them multiplies by the sign of the permutation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

Kind = tuple
Edge = tuple  # (target, class) or None


def slot_classes(kind: Kind) -> list[tuple[int, int]]:
    """(class, capacity) pairs of a vertex kind, in slot order."""
    t = kind[0]
    if t == "A":
        return [(0, 1)]
    if t == "B":
        return [(0, kind[2])] if kind[2] else []
    if t == "W":
        return [(0, kind[1])]
    if t == "N":
        return ([(0, kind[1])] if kind[1] else []) + [(1, 2)]
    if t == "L":
        return []
    if t == "D":
        return [(i, 1) for i in range(kind[1])]
    if t == "V":
        return [(i, 1) for i in range(kind[1])]
    raise ValueError(f"unknown vertex kind {kind!r}")


def arity(kind: Kind) -> int:
    return sum(c for _, c in slot_classes(kind))


def is_white(kind: Kind) -> bool:
    return kind[0] == "W"


class MalformedGraph(ValueError):
    pass


@dataclass
class Graph:
    kinds: list
    out: list  # per vertex: (target, class) or None for the anchor

    def __post_init__(self) -> None:
        self.kinds = [tuple(k) for k in self.kinds]
        self.out = [None if e is None else (int(e[0]), int(e[1])) for e in self.out]

    def validate(self) -> None:
        n = len(self.kinds)
        if len(self.out) != n:
            raise MalformedGraph("kinds/out length mismatch")
        anchors = [i for i, k in enumerate(self.kinds) if k[0] == "A"]
        if len(anchors) > 1:
            raise MalformedGraph("more than one anchor")
        fill: dict = {}
        for v, e in enumerate(self.out):
            if self.kinds[v][0] == "A":
                if e is not None:
                    raise MalformedGraph("anchor has an output")
                continue
            if e is None:
                raise MalformedGraph(f"vertex {v} has no output")
            t, c = e
            if not 0 <= t < n:
                raise MalformedGraph("edge target out of range")
            fill[(t, c)] = fill.get((t, c), 0) + 1
        for v, k in enumerate(self.kinds):
            if k[0] == "W" and k[1] < 2:
                raise MalformedGraph("white vertex needs at least 2 inputs")
            for c, cap in slot_classes(k):
                if fill.pop((v, c), 0) != cap:
                    raise MalformedGraph(f"slot class {c} of vertex {v} not filled exactly")
        if fill:
            raise MalformedGraph("edges into nonexistent slots")

    def inputs(self, v: int) -> list[tuple[int, int]]:
        """Sources feeding v in slot order: list of (source, class)."""
        src = [(e[1], u) for u, e in enumerate(self.out) if e is not None and e[0] == v]
        src.sort()
        return [(u, c) for c, u in src]

    def whites(self) -> list[int]:
        return [i for i, k in enumerate(self.kinds) if k[0] == "W"]

    def count(self, letter: str) -> int:
        return sum(1 for k in self.kinds if k[0] == letter)

    def anchor(self) -> int | None:
        for i, k in enumerate(self.kinds):
            if k[0] == "A":
                return i
        return None

    def root(self) -> int | None:
        a = self.anchor()
        for u, e in enumerate(self.out):
            if e is not None and e[0] == a:
                return u
        return None

    def copy(self) -> Graph:
        return Graph(list(self.kinds), list(self.out))

    def to_json(self) -> dict:
        return {
            "vertices": [list(k) for k in self.kinds],
            "edges": [[u, e[0], e[1]] for u, e in enumerate(self.out) if e is not None],
        }

    @staticmethod
    def from_json(data: Mapping) -> Graph:
        kinds = [tuple(k) for k in data["vertices"]]
        out: list = [None] * len(kinds)
        for u, t, c in data["edges"]:
            if out[u] is not None:
                raise MalformedGraph(f"vertex {u} has two outputs")
            out[u] = (t, c)
        g = Graph(kinds, out)
        g.validate()
        return g

    def to_text(self) -> str:
        parts = []
        for u, (k, e) in enumerate(zip(self.kinds, self.out)):
            ks = k[0] + ",".join(str(x) for x in k[1:])
            parts.append(f"{u}:{ks}" + ("" if e is None else f">{e[0]}.{e[1]}"))
        return " ".join(parts)


# ---------------------------------------------------------------------------
# canonical form


def _perm_sign(seq: Sequence[int]) -> int:
    seq = list(seq)
    s = 1
    for i in range(len(seq)):
        while seq[i] != i:
            j = seq[i]
            seq[i], seq[j] = seq[j], seq[i]
            s = -s
    return s


def _rank(values: Sequence) -> list[int]:
    order = {v: i for i, v in enumerate(sorted(set(values)))}
    return [order[v] for v in values]


def _refine(colors: list[int], out: Sequence, ins: Sequence) -> list[int]:
    ncol = len(set(colors))
    while True:
        sig = []
        for v, c in enumerate(colors):
            e = out[v]
            tgt = (-1, -1) if e is None else (colors[e[0]], e[1])
            sig.append((c, tgt, tuple(sorted((cl, colors[u]) for u, cl in ins[v]))))
        new = _rank(sig)
        m = len(set(new))
        if m == ncol:
            return new
        colors, ncol = new, m


def _certificate(kinds, out, colors) -> tuple:
    n = len(kinds)
    pos = colors  # discrete: colors are 0..n-1
    by_pos = [0] * n
    for v, p in enumerate(pos):
        by_pos[p] = v
    cert = []
    for p in range(n):
        v = by_pos[p]
        e = out[v]
        cert.append((kinds[v], -1, -1) if e is None else (kinds[v], pos[e[0]], e[1]))
    return tuple(cert), by_pos


_CANON_CACHE: dict = {}


def _canon(kinds: tuple, out: tuple) -> tuple[tuple, int]:
    """Canonical certificate and the sign of the white reordering (0 if odd automorphism)."""
    key = (kinds, out)
    hit = _CANON_CACHE.get(key)
    if hit is not None:
        return hit
    n = len(kinds)
    ins: list = [[] for _ in range(n)]
    for u, e in enumerate(out):
        if e is not None:
            ins[e[0]].append((u, e[1]))
    init = _rank(kinds)
    whites = [v for v in range(n) if kinds[v][0] == "W"]
    best: list = [None, set()]

    def visit(colors: list[int]) -> None:
        colors = _refine(colors, out, ins)
        if len(set(colors)) == n:
            cert, by_pos = _certificate(kinds, out, colors)
            if whites:
                canon_order = [v for v in by_pos if kinds[v][0] == "W"]
                rank_of = {v: i for i, v in enumerate(canon_order)}
                par = _perm_sign([rank_of[v] for v in whites])
            else:
                par = 1
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, {par}
            elif cert == best[0]:
                best[1].add(par)
            return
        cells: dict = {}
        for v, c in enumerate(colors):
            cells.setdefault(c, []).append(v)
        cell = min((c for c, vs in cells.items() if len(vs) > 1))
        for v in cells[cell]:
            nc = [2 * c for c in colors]
            nc[v] -= 1
            visit(nc)

    visit(init)
    cert, pars = best
    sign = 0 if len(pars) > 1 else pars.pop()
    res = (cert, sign)
    if len(_CANON_CACHE) > 2_000_000:
        _CANON_CACHE.clear()
    _CANON_CACHE[key] = res
    return res


@dataclass(frozen=True)
class CanonGraph:
    key: tuple
    parity: int = field(default=1, compare=False)

    def graph(self) -> Graph:
        return Graph([c[0] for c in self.key], [None if c[1] < 0 else (c[1], c[2]) for c in self.key])

    @property
    def kinds(self) -> list:
        return [c[0] for c in self.key]

    def count(self, letter: str) -> int:
        return sum(1 for c in self.key if c[0][0] == letter)

    def __lt__(self, other: CanonGraph) -> bool:
        return self.key < other.key


def canonicalize(g: Graph) -> CanonGraph:
    """Canonical representative; parity is the sign relating g's white order to the canonical one
    (0 when the graph has an orientation-reversing automorphism and therefore vanishes)."""
    g.validate()
    cert, sign = _canon(tuple(g.kinds), tuple(g.out))
    return CanonGraph(cert, sign)


def _canon_fast(kinds: list, out: list) -> tuple[CanonGraph, int]:
    cert, sign = _canon(tuple(kinds), tuple(out))
    return CanonGraph(cert), sign


# ---------------------------------------------------------------------------
# linear combinations


class LinComb:
    __slots__ = ("terms",)

    def __init__(self, terms: Mapping | None = None) -> None:
        self.terms: dict = {}
        if terms:
            for k, v in terms.items():
                if v:
                    self.terms[k] = Fraction(v)

    @staticmethod
    def of(g: Graph | CanonGraph, coef=1) -> LinComb:
        out = LinComb()
        out.add_graph(g, coef)
        return out

    def add_graph(self, g: Graph | CanonGraph, coef=1) -> None:
        if isinstance(g, Graph):
            cg = canonicalize(g)
            s = cg.parity
        else:
            cg, s = g, 1
        if s:
            self._add(CanonGraph(cg.key), Fraction(coef) * s)

    def add_raw(self, kinds: list, out: list, coef) -> None:
        cg, s = _canon_fast(kinds, out)
        if s:
            self._add(cg, coef * s)

    def _add(self, k: CanonGraph, c) -> None:
        v = self.terms.get(k, 0) + c
        if v:
            self.terms[k] = v
        else:
            self.terms.pop(k, None)

    def iadd(self, other: LinComb, c=1) -> LinComb:
        for k, v in other.terms.items():
            self._add(k, v * c)
        return self

    def __add__(self, other: LinComb) -> LinComb:
        return LinComb(self.terms).iadd(other)

    def __sub__(self, other: LinComb) -> LinComb:
        return LinComb(self.terms).iadd(other, -1)

    def __neg__(self) -> LinComb:
        return self.scale(-1)

    def scale(self, c) -> LinComb:
        c = Fraction(c)
        if c == 0:
            return LinComb()
        out = LinComb()
        out.terms = {k: v * c for k, v in self.terms.items()}
        return out

    __rmul__ = scale

    def __mul__(self, c) -> LinComb:
        return self.scale(c)

    def __eq__(self, other) -> bool:
        return isinstance(other, LinComb) and self.terms == other.terms

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator:
        return iter(self.items())

    def items(self) -> list[tuple[CanonGraph, Fraction]]:
        return sorted(self.terms.items(), key=lambda kv: kv[0].key)

    def is_zero(self) -> bool:
        return not self.terms

    def filter(self, pred) -> LinComb:
        out = LinComb()
        out.terms = {k: v for k, v in self.terms.items() if pred(k)}
        return out

    def coefficient(self, g: Graph | CanonGraph) -> Fraction:
        if isinstance(g, Graph):
            cg = canonicalize(g)
            return self.terms.get(CanonGraph(cg.key), Fraction(0)) * cg.parity
        return self.terms.get(g, Fraction(0))

    def to_json(self) -> list:
        return [{"coef": str(c), "graph": g.graph().to_json()} for g, c in self.items()]

    @staticmethod
    def from_json(data: Sequence) -> LinComb:
        out = LinComb()
        for t in data:
            out.add_graph(Graph.from_json(t["graph"]), Fraction(t["coef"]))
        return out

    def __repr__(self) -> str:
        if not self.terms:
            return "LinComb(0)"
        return "LinComb(" + " + ".join(f"{c}*[{g.graph().to_text()}]" for g, c in self.items()) + ")"


# ---------------------------------------------------------------------------
# constructors for common shapes


def identity_graph(label: int = 1) -> Graph:
    return Graph([("A",), ("B", label, 0)], [None, (0, 0)])


def leg_corolla(kind: Kind) -> Graph:
    """Rooted graph made of one vertex of the given kind with legs 1..arity in slot order."""
    kinds = [("A",), kind]
    out: list = [None, (0, 0)]
    i = 1
    for c, cap in slot_classes(kind):
        for _ in range(cap):
            kinds.append(("L", i))
            out.append((1, c))
            i += 1
    return Graph(kinds, out)


# ---------------------------------------------------------------------------
# grafting


def graft_terms(host: Graph, v: int, patch: Iterable[tuple[CanonGraph, Fraction]], target: LinComb, coef=1) -> None:
    """Accumulate coef * sum_t c_t * (host with v replaced by rooted graph t) into target.

    Koszul convention: if v is white at white-position i, the sign (-1)^i applies
    and the patch whites take its place; otherwise the patch whites go first."""
    hk, ho = host.kinds, host.out
    n = len(hk)
    host_inputs = host.inputs(v)
    slot_of_source = {u: i for i, (u, _) in enumerate(host_inputs, 1)}
    vk = hk[v]
    if vk[0] == "W":
        wpos = sum(1 for u in range(v) if hk[u][0] == "W")
        eps = -1 if wpos % 2 else 1
    else:
        wpos, eps = 0, 1
    host_whites = [u for u in range(n) if hk[u][0] == "W" and u != v]
    host_plain = [u for u in range(n) if hk[u][0] != "W" and u != v]
    for cg, c in patch:
        P = cg.graph()
        pk, po = P.kinds, P.out
        anchor = legs = None
        legs = {}
        for p, k in enumerate(pk):
            if k[0] == "A":
                anchor = p
            elif k[0] == "L":
                legs[k[1]] = p
        if len(legs) != len(host_inputs):
            raise ValueError("arity mismatch between vertex and patch legs")
        p_white = [p for p in range(len(pk)) if pk[p][0] == "W"]
        p_plain = [p for p in range(len(pk)) if pk[p][0] not in ("W", "A", "L")]
        order = host_plain + [("p", p) for p in p_plain] + host_whites[:wpos] + [("p", p) for p in p_white] + host_whites[wpos:]
        newidx = {}
        for i, x in enumerate(order):
            newidx[x] = i
        kinds = [pk[x[1]] if isinstance(x, tuple) else hk[x] for x in order]

        def via_v(src: int, depth: int = 0):
            if depth > n + len(pk):
                raise ValueError("degenerate identity loop in graft")
            leg = legs[slot_of_source[src]]
            t, cl = po[leg]
            if t == anchor:
                return host_target(v, depth + 1)
            return (newidx[("p", t)], cl)

        def host_target(u: int, depth: int = 0):
            t, cl = ho[u]
            if t == v:
                return via_v(u, depth)
            return (newidx[t], cl)

        out = []
        for x in order:
            if isinstance(x, tuple):
                t, cl = po[x[1]]
                out.append(host_target(v) if t == anchor else (newidx[("p", t)], cl))
            else:
                e = ho[x]
                out.append(None if e is None else host_target(x))
        target.add_raw(kinds, out, Fraction(coef) * c * eps)


def graft(host: Graph, v: int, patch: LinComb) -> LinComb:
    out = LinComb()
    graft_terms(host, v, patch.items(), out)
    return out


# ---------------------------------------------------------------------------
# anchored <-> rooted


def amputate(g: Graph, labels: Sequence[int] | None = None) -> Graph:
    """Turn the distinguished labeled leaves into legs (leg i = i-th listed label)."""
    if g.anchor() is None:
        raise MalformedGraph("missing anchor")
    if labels is None:
        labels = sorted(k[1] for k in g.kinds if k[0] == "B" and k[2] == 0 and k[1] > 0)
    pos = {lab: i for i, lab in enumerate(labels, 1)}
    found = set()
    kinds = []
    for k in g.kinds:
        if k[0] == "B" and k[2] == 0 and k[1] in pos:
            kinds.append(("L", pos[k[1]]))
            found.add(k[1])
        else:
            kinds.append(k)
    if found != set(labels):
        raise MalformedGraph("missing distinguished labels")
    return Graph(kinds, list(g.out))


def unamputate(g: Graph, labels: Sequence[int] | None = None) -> Graph:
    kinds = []
    for k in g.kinds:
        if k[0] == "L":
            kinds.append(("B", k[1] if labels is None else labels[k[1] - 1], 0))
        else:
            kinds.append(k)
    return Graph(kinds, list(g.out))


# ---------------------------------------------------------------------------
# relabeling, traces, substitution (degree-0 operator calculus)


def relabel(g: Graph, mapping: Mapping[int, int]) -> Graph:
    kinds = []
    for k in g.kinds:
        if k[0] == "B" and k[1] in mapping:
            kinds.append(("B", mapping[k[1]], k[2]))
        elif k[0] == "V" and k[2] in mapping:
            kinds.append(("V", k[1], mapping[k[2]]))
        else:
            kinds.append(k)
    return Graph(kinds, list(g.out))


def relabel_comb(x: LinComb, mapping: Mapping[int, int]) -> LinComb:
    out = LinComb()
    for g, c in x.items():
        out.add_graph(relabel(g.graph(), mapping), c)
    return out


def labels_of(g: Graph) -> list[int]:
    return sorted(k[1] for k in g.kinds if k[0] == "B" and k[1] > 0)


def find_label(g: Graph, label: int) -> int:
    for i, k in enumerate(g.kinds):
        if k[0] == "B" and k[1] == label:
            return i
    raise KeyError(f"label {label} not present")


def delete_vertices(g: Graph, dead: set) -> Graph:
    keep = [i for i in range(len(g.kinds)) if i not in dead]
    idx = {v: i for i, v in enumerate(keep)}
    kinds = [g.kinds[v] for v in keep]
    out = []
    for v in keep:
        e = g.out[v]
        out.append(None if e is None else (idx[e[0]], e[1]))
    return Graph(kinds, out)


def trace_close(g: Graph, label: int) -> tuple[Graph | None, int]:
    """Contract the output of g against the input slot occupied by leaf `label`.

    Returns (scalar graph without anchor, power of the free loop).  If the leaf
    feeds the anchor directly the result is the dimension times the rest, which
    is signalled by the second entry being 1."""
    v = find_label(g, label)
    if g.kinds[v][2] != 0:
        raise ValueError("trace requires an order-0 slot")
    a = g.anchor()
    r = g.root()
    tgt = g.out[v]
    if r == v:
        h = delete_vertices(g, {v, a})
        return h, 1
    out = list(g.out)
    out[r] = tgt
    h = Graph(list(g.kinds), out)
    return delete_vertices(h, {v, a}), 0


def attach_field(scalar: Graph, label: int) -> Graph:
    """Multiply a scalar graph by the vector field X_label."""
    n = len(scalar.kinds)
    return Graph(list(scalar.kinds) + [("A",), ("B", label, 0)], list(scalar.out) + [None, (n, 0)])


def trace_product(x: LinComb, i: int, j: int, dim: int | None = None) -> LinComb:
    """Tr_i(x) X_j at graph level; free loops contribute the manifold dimension."""
    out = LinComb()
    for g, c in x.items():
        h, loops = trace_close(g.graph(), i)
        if loops:
            if dim is None:
                raise ValueError("trace of the identity needs an explicit dimension")
            c = c * dim
        out.add_graph(attach_field(h, j), c)
    return out


def derivable(kind: Kind) -> bool:
    return kind[0] in ("B", "N")


def bump(kind: Kind) -> Kind:
    if kind[0] == "B":
        return ("B", kind[1], kind[2] + 1)
    if kind[0] == "N":
        return ("N", kind[1] + 1)
    raise ValueError("vertex cannot absorb a derivative")


def substitute(host: Graph, label: int, patch: Graph) -> LinComb:
    """Replace leaf/black vertex X_label of host by the operator graph `patch`.

    Derivatives acting on X_label are distributed over the derivable vertices of
    the patch by the Leibniz rule.  Patch labels must already be disjoint from
    the remaining host labels."""
    v = find_label(host, label)
    u = host.kinds[v][2]
    host_inputs = [s for s, _ in host.inputs(v)]
    pk, po = patch.kinds, patch.out
    pa = patch.anchor()
    cand = [p for p in range(len(pk)) if derivable(pk[p])]
    n = len(host.kinds)
    hk, ho = host.kinds, host.out
    keep_h = [w for w in range(n) if w != v]
    keep_p = [p for p in range(len(pk)) if p != pa]
    hidx = {w: i for i, w in enumerate(keep_h)}
    pidx = {p: len(keep_h) + i for i, p in enumerate(keep_p)}
    result = LinComb()
    import itertools

    for choice in itertools.product(cand, repeat=u):
        kinds = [hk[w] for w in keep_h] + [pk[p] for p in keep_p]
        add = {}
        for p in choice:
            add[p] = add.get(p, 0) + 1
        for p, m in add.items():
            k = pk[p]
            for _ in range(m):
                k = bump(k)
            kinds[pidx[p]] = k
        dest = {s: p for s, p in zip(host_inputs, choice)}
        out = []
        for w in keep_h:
            e = ho[w]
            if e is None:
                out.append(None)
            elif e[0] == v:
                out.append((pidx[dest[w]], 0))
            else:
                out.append((hidx[e[0]], e[1]))
        vt = ho[v]
        for p in keep_p:
            e = po[p]
            if e[0] == pa:
                if vt[0] == v:
                    out.append((pidx[dest[v]], 0))
                else:
                    out.append((hidx[vt[0]], vt[1]))
            else:
                out.append((pidx[e[0]], e[1]))
        result.add_raw(kinds, out, Fraction(1))
    return result


def substitute_comb(host: LinComb, label: int, patch: LinComb) -> LinComb:
    out = LinComb()
    for h, a in host.items():
        hg = h.graph()
        for p, b in patch.items():
            out.iadd(substitute(hg, label, p.graph()), a * b)
    return out


def act_perm(x: LinComb, p) -> LinComb:
    """Right action of a permutation on labels 1..n (label i becomes p(i))."""
    return relabel_comb(x, {i: p(i) for i in range(1, p.n + 1)})


def max_label(x: LinComb) -> int:
    m = 0
    for g, _ in x.items():
        for k in g.kinds:
            if k[0] == "B":
                m = max(m, k[1])
    return m


def dumps(x: LinComb) -> str:
    return json.dumps(x.to_json(), sort_keys=True)
