"""Operator layer: generator families, iterations, quasi-symmetries and deviations.

Operators are degree-0 graph combinations whose Black labels 1..n name the
vector-field arguments.  The right action O.σ of a permutation feeds slot i with
X_{σ(i)}.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .complex import Bounds, graphs_on
from .exactla import NoSolution, SparseMatrix, kernel_basis, solve_preimage
from .graphcore import (
    CanonGraph, Graph, LinComb, _canon_fast, find_label, relabel_comb, substitute_comb,
    trace_close, trace_product,
)
from .operators import K, K_sym, V, _TMP, act_group_ring, permute
from .perturb import (
    b_graph, c_order, ideal_cocycle, leading_of_graphs, vf_order, xi_graph,
)
from .permgroup import (
    GroupRingElem, LeadingTermElem, Perm, act, all_perms, in_kernel_module, is_generator,
    leading_K, leading_N,
)

STABILITY_DIM = 3


class NotGenerating:
    """Returned (not raised) when no normalization yields a generating leading term."""

    def __init__(self, reason: str) -> None:
        self.reason = reason

    def __repr__(self) -> str:
        return f"NotGenerating({self.reason!r})"

    def __bool__(self) -> bool:
        return False


# ---------------------------------------------------------------------------
# generator families


@dataclass
class GeneratorFamily:
    name: str
    leading_kind: str
    d_op: Callable[[int], LinComb]
    v_op: Callable[[int], LinComb]
    _cache: dict = field(default_factory=dict, repr=False)

    def D(self, n: int) -> LinComb:
        if n < 3:
            raise KeyError(f"D_{n} is not defined")
        key = ("D", n)
        if key not in self._cache:
            self._cache[key] = self.d_op(n)
        return self._cache[key]

    def V(self, n: int) -> LinComb:
        if n < 1:
            raise KeyError(f"V_{n} is not defined")
        key = ("V", n)
        if key not in self._cache:
            self._cache[key] = self.v_op(n)
        return self._cache[key]

    def leading(self, n: int) -> LeadingTermElem:
        return leading_K(n) if self.leading_kind == "K" else leading_N(n)


def curvature_family() -> GeneratorFamily:
    """D_n = ∇^{n-3}R and V_n = symmetrized ∇^{n-1}X_n."""
    return GeneratorFamily("curvature", "K", K, V)


def symmetrized_curvature_family() -> GeneratorFamily:
    return GeneratorFamily("symmetrized-curvature", "K", K_sym, V)


def ideal_family(leading: str = "K", equivariant: bool = True) -> GeneratorFamily:
    """D_n and V_n lifted from their leading terms by the perturbation series."""
    lead = leading_K if leading == "K" else leading_N

    def d_op(n: int) -> LinComb:
        return ideal_cocycle(n, "sigma", lead(n), equivariant).value

    def v_op(n: int) -> LinComb:
        if n == 1:
            return b_graph(0)
        return ideal_cocycle(n - 1, "nu", equivariant=equivariant).value

    return GeneratorFamily(f"ideal-{leading}", leading, d_op, v_op)


FAMILIES = {
    "curvature": curvature_family,
    "symmetrized": symmetrized_curvature_family,
    "ideal": ideal_family,
    "normal": lambda: ideal_family("N"),
}


# ---------------------------------------------------------------------------
# leading terms


def _is_corolla(g: CanonGraph, n: int) -> bool:
    gr = g.graph()
    r = gr.root()
    return (r is not None and gr.kinds[r] == ("N", n - 2) and len(gr.kinds) == n + 2
            and all(k[0] != "B" or k[2] == 0 for k in gr.kinds))


def leading_part(x: LinComb, n: int) -> LinComb:
    """Terms with one Nabla(n-2) vertex and n undifferentiated leaves (wheels allowed)."""
    def keep(g: CanonGraph) -> bool:
        ks = g.kinds
        return (sum(1 for k in ks if k[0] == "N") == 1 and ("N", n - 2) in ks
                and sum(1 for k in ks if k[0] == "B") == n and all(k[0] != "B" or k[2] == 0 for k in ks))
    return x.filter(keep)


def leading_term(x: LinComb, n: int) -> LeadingTermElem:
    """E0(n) element of the wheel-free part of the leading terms."""
    return leading_of_graphs(leading_part(x, n).filter(lambda g: _is_corolla(g, n)), n)


def to_group_ring(x: LeadingTermElem) -> GroupRingElem:
    return GroupRingElem(x.n, dict(x.coeffs))


def quasi_symmetries(leading: LeadingTermElem) -> list[GroupRingElem]:
    """Basis of {S in Q[Σn] : (Σ α_σ σ) S = 0 in E0(n)}."""
    n = leading.n
    perms = all_perms(n)
    cols = [dict(act(leading, p).coeffs) for p in perms]
    M = SparseMatrix.from_columns(perms, cols)
    return [GroupRingElem(n, v) for v in kernel_basis(M)]


def is_quasi_symmetry(leading: LeadingTermElem, S: GroupRingElem) -> bool:
    return act(leading, S).is_zero()


# ---------------------------------------------------------------------------
# deviations and the Bianchi-Ricci suite


def deviation(fam: GeneratorFamily, n: int, S: GroupRingElem) -> LinComb:
    """D_n S; it has c-order <= n-3 and vf-order 0 when S is a quasi-symmetry."""
    if not is_quasi_symmetry(fam.leading(n), S):
        raise ValueError("not a quasi-symmetry of the leading term")
    x = act_group_ring(fam.D(n), S)
    if not leading_part(x, n).is_zero() or c_order(x) > n - 3 or vf_order(x) > 0:
        raise ValueError("leading term survives the quasi-symmetry")
    return x


def v_deviation(fam: GeneratorFamily, n: int, omega: Perm) -> LinComb:
    """V_n(X_{ω(1)}, ..., X_{ω(n-1)}, X_n) - V_n(X_1, ..., X_n)."""
    w = Perm(tuple(omega.images) + (n,))
    return permute(fam.V(n), w) - fam.V(n)


def cyclic_sum(n: int, pts: Sequence[int]) -> GroupRingElem:
    c = Perm.cycle(n, *pts)
    s = GroupRingElem.one(n)
    p = c
    for _ in range(len(pts) - 1):
        s = s + GroupRingElem.of(p)
        p = p * c
    return s


def bianchi_elements(n: int) -> dict[str, GroupRingElem]:
    out = {
        "antisymmetry": GroupRingElem.one(n) + GroupRingElem.of(Perm.transposition(n, n - 2, n - 1)),
        "cyclic-last": cyclic_sum(n, (n - 2, n - 1, n)),
    }
    if n >= 4:
        out["cyclic-middle"] = cyclic_sum(n, (n - 3, n - 2, n - 1))
    if n >= 5:
        out["derivative-swap"] = GroupRingElem.of(Perm.transposition(n, 1, 2)) - GroupRingElem.one(n)
    return out


@dataclass
class DeviationReport:
    name: str
    n: int
    element: str
    vanishes: bool
    c_order: int
    terms: int
    value: LinComb = field(repr=False, default_factory=LinComb)

    def to_json(self) -> dict:
        return {"identity": self.name, "n": self.n, "element": self.element, "vanishes": self.vanishes,
                "c_order": self.c_order, "terms": self.terms, "value": self.value.to_json()}


def bianchi_suite(fam: GeneratorFamily, n: int) -> list[DeviationReport]:
    out = []
    for name, S in bianchi_elements(n).items():
        x = deviation(fam, n, S)
        out.append(DeviationReport(name, n, str(S), x.is_zero(), c_order(x), len(x), x))
    return out


def v_suite(fam: GeneratorFamily, n: int) -> list[DeviationReport]:
    """Deviations of V_n from symmetry in its first n-1 arguments, over all ω."""
    out = []
    for w in all_perms(n - 1):
        if w.is_identity():
            continue
        x = v_deviation(fam, n, w)
        out.append(DeviationReport("v-symmetry", n, str(w), x.is_zero(), c_order(x), len(x), x))
    if not out:
        out.append(DeviationReport("v-symmetry", n, "()", True, -1, 0, LinComb()))
    return out


# ---------------------------------------------------------------------------
# trace products


def tr(x: LinComb, j: int, dim: int | None = STABILITY_DIM) -> LinComb:
    """Tr_j(x) X_j."""
    return trace_product(x, j, j, dim)


def trace_commutation(x: LinComb, sigma: Perm, j: int, dim: int = STABILITY_DIM) -> Perm | None:
    """Some σ~ with (Tr_j(x) X_j) relabelled by σ equal to Tr_k(x σ~) X_k, where k = σ(j)."""
    lhs = permute(tr(x, j, dim), sigma)
    k = sigma(j)
    for t in all_perms(sigma.n):
        if (tr(permute(x, t), k, dim) - lhs).is_zero():
            return t
    return None


# ---------------------------------------------------------------------------
# leading-term normalization by permutations and traces


@dataclass
class Normalization:
    c: GroupRingElem
    cj: list
    leading: LeadingTermElem
    stability_dim: int = STABILITY_DIM

    def to_json(self) -> dict:
        return {"c": str(self.c), "c_j": [str(x) for x in self.cj], "leading": str(self.leading),
                "stability_dim": self.stability_dim}


def normalized_leading(U: LinComb, n: int, c: GroupRingElem, cj: Sequence[GroupRingElem] = (),
                       dim: int = STABILITY_DIM) -> LinComb:
    """Leading part of U c + Σ_j Tr_j(U c_j) X_j."""
    L = leading_part(U, n)
    out = act_group_ring(L, c)
    for j, e in enumerate(cj, start=1):
        if not e.is_zero():
            out.iadd(tr(act_group_ring(L, e), j, dim))
    return out


def wheel_free_leading(x: LinComb, n: int) -> LeadingTermElem | None:
    """E0 element if x is a combination of Nabla corollas only, else None."""
    if any(not _is_corolla(g, n) for g in x.terms):
        return None
    return leading_of_graphs(x, n)


def normalize_leading(U: LinComb, n: int, dim: int = STABILITY_DIM, allow_traces: bool = True):
    """Find c, c_1..c_n making the leading term a generator of the kernel module.

    Tries c_j = 0 first.  The attainable wheel-free leading terms form a right
    submodule, which contains a generator only if it is the whole kernel module."""
    L = leading_part(U, n)
    if L.is_zero():
        return NotGenerating("no leading term of the expected shape")
    perms = all_perms(n)
    unknowns = [("c", p) for p in perms]
    cols = [dict(permute(L, p).terms) for p in perms]
    stages = [(len(unknowns), "c only")]
    if allow_traces:
        for j in range(1, n + 1):
            for p in perms:
                unknowns.append((j, p))
                cols.append(dict(tr(permute(L, p), j, dim).terms))
        stages.append((len(unknowns), "with traces"))
    target = dict(xi_graph(leading_K(n)).terms)
    kdim = n * (n - 1) // 2 - 1
    for size, _ in stages:
        keys, cs = unknowns[:size], cols[:size]
        wheel_rows = {g for col in cs for g in col if not _is_corolla(g, n)}
        W = SparseMatrix.from_columns(keys, [{g: v for g, v in col.items() if g in wheel_rows} for col in cs])
        ker = kernel_basis(W)
        attain = []
        for v in ker:
            y = LinComb()
            for k, a in v.items():
                y.iadd(LinComb(cs[keys.index(k)]), a)
            attain.append(leading_of_graphs(y, n).vector())
        from .exactla import row_space_basis
        if len(row_space_basis(attain)) < kdim:
            continue
        M = SparseMatrix.from_columns(keys, cs)
        try:
            sol = solve_preimage(M, target)
        except NoSolution:
            continue
        c = GroupRingElem(n, {p: a for (t, p), a in sol.items() if t == "c"})
        cj = [GroupRingElem(n, {p: a for (t, p), a in sol.items() if t == j}) for j in range(1, n + 1)]
        lead = wheel_free_leading(normalized_leading(U, n, c, cj, dim), n)
        if lead is None or not in_kernel_module(lead) or not is_generator(lead):
            continue
        return Normalization(c, cj, lead, STABILITY_DIM)
    return NotGenerating("attainable leading terms do not span the kernel module")


# ---------------------------------------------------------------------------
# contraction schemes


@dataclass(frozen=True)
class ContractionScheme:
    """Graph with vertices ('A',), ('D', n) for d_n and ('V', n, label) for v_n; inputs ordered."""

    graph: Graph

    def __post_init__(self) -> None:
        self.graph.validate()
        for k in self.graph.kinds:
            if k[0] not in ("A", "D", "V"):
                raise ValueError(f"unexpected vertex {k!r} in a contraction scheme")

    @property
    def key(self) -> CanonGraph:
        cg, _ = _canon_fast(list(self.graph.kinds), list(self.graph.out))
        return cg

    def vf_order(self) -> int:
        return sum(k[1] for k in self.graph.kinds if k[0] == "V")

    def v_arities(self) -> list[int]:
        """Arities q of the operators V_q used (v_n stands for V_{n+1})."""
        return [k[1] + 1 for k in self.graph.kinds if k[0] == "V"]

    def labels(self) -> list[int]:
        return sorted(k[2] for k in self.graph.kinds if k[0] == "V")

    def to_json(self) -> dict:
        return self.graph.to_json()

    @staticmethod
    def from_json(data) -> ContractionScheme:
        return ContractionScheme(Graph.from_json(data))

    def __hash__(self) -> int:
        return hash(self.key)

    def __eq__(self, other) -> bool:
        return isinstance(other, ContractionScheme) and self.key == other.key


def _scheme_inputs(g: Graph, v: int) -> list[int]:
    return [s for s, _ in g.inputs(v)]


def pi_map(c: ContractionScheme, leading: Callable[[int], LeadingTermElem] = leading_K) -> LinComb:
    """Replace each d_n by ξ_n and each v_n by b_n."""
    g = c.graph
    dverts = [v for v, k in enumerate(g.kinds) if k[0] == "D"]
    choices = []
    for v in dverts:
        choices.append(list(leading(g.kinds[v][1]).coeffs.items()))
    out = LinComb()
    for pick in itertools.product(*choices):
        kinds = list(g.kinds)
        new_out = list(g.out)
        coef = Fraction(1)
        for v, (p, a) in zip(dverts, pick):
            n = g.kinds[v][1]
            kinds[v] = ("N", n - 2)
            srcs = _scheme_inputs(g, v)
            # slot i of the corolla is fed by leaf p(i), i.e. by source p(i)
            for i in range(n):
                s = srcs[p(i + 1) - 1]
                new_out[s] = (v, 0 if i < n - 2 else 1)
            coef *= a
        for v, k in enumerate(kinds):
            if k[0] == "V":
                kinds[v] = ("B", k[2], k[1])
        for s, e in enumerate(g.out):
            if e is not None and g.kinds[e[0]][0] == "V":
                new_out[s] = (e[0], 0)
        cg, sgn = _canon_fast(kinds, new_out)
        if sgn:
            out._add(cg, coef * sgn)
    return out


def psi_map(c: ContractionScheme, fam: GeneratorFamily) -> LinComb:
    """Vertexwise substitution of the family's cocycles; scalar wheels are traced."""
    g = c.graph
    counter = itertools.count(_TMP + 100)

    def value(v: int, cut: dict) -> LinComb:
        k = g.kinds[v]
        srcs = _scheme_inputs(g, v)
        if k[0] == "D":
            base, slots = fam.D(k[1]), list(range(1, k[1] + 1))
        else:
            base, slots = fam.V(k[1] + 1), list(range(1, k[1] + 1))
        tmp = {i: next(counter) for i in slots}
        if k[0] == "V":
            tmp[k[1] + 1] = k[2]
        x = relabel_comb(base, tmp)
        for i, s in zip(slots, srcs):
            inner = cut[s] if s in cut else value(s, cut)
            x = substitute_comb(x, tmp[i], inner)
        return x

    anchor = g.anchor()
    root = g.root()
    result = value(root, {})
    # remaining vertices lie on scalar components, each a cycle with trees
    done = set(_reach(g, root))
    for v in range(len(g.kinds)):
        if v == anchor or v in done:
            continue
        cyc = _cycle_from(g, v)
        comp = set()
        for u in range(len(g.kinds)):
            if u != anchor and _cycle_from(g, u) == cyc:
                comp.add(u)
        done |= comp
        last = cyc[-1]
        t = next(counter)
        leaf = LinComb.of(Graph([("A",), ("B", t, 0)], [None, (0, 0)]))
        # cut the cycle edge leaving `last`; the component becomes a tree rooted at `last`
        op = value(last, {last: leaf})
        scal = LinComb()
        for h, coef in op.items():
            sh, loops = trace_close(h.graph(), t)
            if loops:
                raise ValueError("free loop in a contraction scheme")
            scal.add_graph(sh, coef)
        result = _product(result, scal)
    return result


def _reach(g: Graph, root: int) -> list[int]:
    out = [root]
    i = 0
    while i < len(out):
        out.extend(s for s, _ in g.inputs(out[i]))
        i += 1
    return out


def _cycle_from(g: Graph, v: int) -> tuple:
    seen: list = []
    while v not in seen:
        seen.append(v)
        if g.out[v] is None:
            return ()
        v = g.out[v][0]
    cyc = seen[seen.index(v):]
    m = cyc.index(min(cyc))
    return tuple(cyc[m:] + cyc[:m])


def _product(x: LinComb, y: LinComb) -> LinComb:
    """Disjoint union (product of an operator with a scalar)."""
    out = LinComb()
    for g1, a in x.items():
        h1 = g1.graph()
        for g2, b in y.items():
            h2 = g2.graph()
            off = len(h1.kinds)
            kinds = list(h1.kinds) + list(h2.kinds)
            outs = list(h1.out) + [None if e is None else (e[0] + off, e[1]) for e in h2.out]
            out.add_raw(kinds, outs, a * b)
    return out


def enumerate_schemes(d: int, bounds: Bounds = Bounds()) -> list[ContractionScheme]:
    """Isomorphism classes of schemes with labels 1..d: Σ n(v) + Σ (n(d)-1) = d-1."""
    seen: dict = {}
    budget = d - 1
    for us in itertools.product(range(budget + 1), repeat=d):
        rest = budget - sum(us)
        if rest < 0 or any(u > bounds.max_arity for u in us):
            continue
        for ds in _parts_at_least(rest, 2):
            if len(ds) + d + 1 > bounds.max_vertices or any(m + 1 > bounds.max_arity for m in ds):
                continue
            kinds = [("A",)] + [("V", u, i) for i, u in enumerate(us, start=1)] + [("D", m + 1) for m in ds]
            for g in graphs_on(kinds):
                if not _wellfounded(g):
                    continue
                cg, _ = _canon_fast(list(g.kinds), list(g.out))
                seen.setdefault(cg, g)
    return [ContractionScheme(seen[k]) for k in sorted(seen)]


def _parts_at_least(total: int, lo: int) -> Iterable[tuple[int, ...]]:
    if total == 0:
        yield ()
        return

    def rec(rem: int, mn: int):
        if rem == 0:
            yield ()
            return
        for p in range(mn, rem + 1):
            for rest in rec(rem - p, p):
                yield (p,) + rest
    yield from rec(total, lo)


def _wellfounded(g: Graph) -> bool:
    """Anchor component is a tree; other components may contain one cycle each (traces)."""
    return g.root() is not None


def section_s(x: LinComb, schemes: Sequence[ContractionScheme],
              leading: Callable[[int], LeadingTermElem] = leading_K) -> dict:
    """Scheme combination {scheme: coef} with π of it equal to x."""
    images = [dict(pi_map(s, leading).terms) for s in schemes]
    M = SparseMatrix.from_columns(list(range(len(schemes))), images)
    sol = solve_preimage(M, dict(x.terms))
    return {schemes[i]: a for i, a in sorted(sol.items())}


def pi_of(comb: dict, leading: Callable[[int], LeadingTermElem] = leading_K) -> LinComb:
    out = LinComb()
    for s, a in comb.items():
        out.iadd(pi_map(s, leading), a)
    return out


def psi_of(comb: dict, fam: GeneratorFamily) -> LinComb:
    out = LinComb()
    for s, a in comb.items():
        out.iadd(psi_map(s, fam), a)
    return out


# ---------------------------------------------------------------------------
# operator expressions
#
# Grammar (whitespace insignificant):
#   expr   := term (('+' | '-') term)*
#   term   := [rational '*'] factor
#   factor := GEN | 'o' INT '(' expr ',' expr ')' | 'Tr' INT '(' expr ')'
#           | 'perm' '[' cycles ']' '(' expr ')' | '(' expr ')'
#   GEN    := 'D' INT (INT >= 3) | 'V' INT (INT >= 1) | 'Id'
#   cycles := ('(' INT+ ')')*          e.g. perm[(1 2)(3 4 5)](D5)
# Leaves are implicit: an expression of arity d takes X_1..X_d in order.


class ExprError(ValueError):
    pass


@dataclass(frozen=True)
class Gen:
    kind: str
    n: int


@dataclass(frozen=True)
class Act:
    perm: Perm
    child: object


@dataclass(frozen=True)
class Lin:
    terms: tuple  # ((Fraction, expr), ...)


@dataclass(frozen=True)
class Comp:
    i: int
    outer: object
    inner: object


@dataclass(frozen=True)
class Trace:
    j: int
    child: object


_TOKEN = re.compile(r"\s*(?:(\d+/\d+|\d+)|(perm|Tr|Id|[DVo])|([()\[\],*+-]))")


def _tokenize(text: str) -> list:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExprError(f"unexpected input at {pos}: {text[pos:pos + 10]!r}")
        out.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, want=None):
        t = self.peek()
        if t is None or (want is not None and t != want):
            raise ExprError(f"expected {want!r}, got {t!r}")
        self.i += 1
        return t

    def integer(self) -> int:
        t = self.take()
        if not t.isdigit():
            raise ExprError(f"expected an integer, got {t!r}")
        return int(t)

    def expr(self):
        terms = [self.term(1)]
        while self.peek() in ("+", "-"):
            s = 1 if self.take() == "+" else -1
            terms.append(self.term(s))
        return terms[0][1] if len(terms) == 1 and terms[0][0] == 1 else Lin(tuple(terms))

    def term(self, sign: int):
        t = self.peek()
        if t is not None and t[0].isdigit():
            c = Fraction(self.take())
            self.take("*")
            return (sign * c, self.factor())
        return (Fraction(sign), self.factor())

    def factor(self):
        t = self.take()
        if t == "(":
            e = self.expr()
            self.take(")")
            return e
        if t in ("D", "V"):
            n = self.integer()
            if (t == "D" and n < 3) or (t == "V" and n < 1):
                raise ExprError(f"no generator {t}{n}")
            return Gen(t, n)
        if t == "Id":
            return Gen("V", 1)
        if t == "o":
            i = self.integer()
            self.take("(")
            a = self.expr()
            self.take(",")
            b = self.expr()
            self.take(")")
            return Comp(i, a, b)
        if t == "Tr":
            j = self.integer()
            self.take("(")
            a = self.expr()
            self.take(")")
            return Trace(j, a)
        if t == "perm":
            self.take("[")
            cycles = []
            while self.peek() == "(":
                self.take("(")
                cyc = []
                while self.peek() != ")":
                    cyc.append(self.integer())
                self.take(")")
                cycles.append(cyc)
            self.take("]")
            self.take("(")
            a = self.expr()
            self.take(")")
            n = expr_arity(a)
            p = Perm.identity(n)
            for cyc in cycles:
                if any(not 1 <= x <= n for x in cyc):
                    raise ExprError("permutation point out of range")
                if len(cyc) > 1:
                    p = p * Perm.cycle(n, *cyc)
            return Act(p, a)
        raise ExprError(f"unexpected token {t!r}")


def parse(text: str):
    p = _Parser(text)
    e = p.expr()
    if p.peek() is not None:
        raise ExprError(f"trailing input {p.peek()!r}")
    expr_arity(e)
    return e


def expr_arity(e) -> int:
    if isinstance(e, Gen):
        return e.n
    if isinstance(e, Act):
        n = expr_arity(e.child)
        if e.perm.n != n:
            raise ExprError("permutation arity mismatch")
        return n
    if isinstance(e, Lin):
        ar = {expr_arity(t) for _, t in e.terms}
        if len(ar) > 1:
            raise ExprError("summands of different arity")
        return ar.pop() if ar else 0
    if isinstance(e, Comp):
        a, b = expr_arity(e.outer), expr_arity(e.inner)
        if not 1 <= e.i <= a:
            raise ExprError("composition slot out of range")
        return a + b - 1
    if isinstance(e, Trace):
        n = expr_arity(e.child)
        if not 1 <= e.j <= n:
            raise ExprError("trace slot out of range")
        return n
    raise ExprError(f"not an expression: {e!r}")


def _cycle_text(p: Perm) -> str:
    cyc = [c for c in p.cycles() if len(c) > 1]
    return "".join("(" + " ".join(map(str, c)) + ")" for c in cyc)


def to_text(e) -> str:
    if isinstance(e, Gen):
        return "Id" if (e.kind, e.n) == ("V", 1) else f"{e.kind}{e.n}"
    if isinstance(e, Act):
        return f"perm[{_cycle_text(e.perm)}]({to_text(e.child)})"
    if isinstance(e, Comp):
        return f"o{e.i}({to_text(e.outer)}, {to_text(e.inner)})"
    if isinstance(e, Trace):
        return f"Tr{e.j}({to_text(e.child)})"
    parts = []
    for k, (c, t) in enumerate(e.terms):
        s = "-" if c < 0 else "+"
        a = abs(c)
        body = to_text(t) if a == 1 else f"{a}*{_wrap_text(t)}"
        if isinstance(t, Lin) and a == 1:
            body = f"({body})"
        parts.append((s if k or c < 0 else "") + (" " if k else "") + body if k else ("-" if c < 0 else "") + body)
    return " ".join(parts) if parts else "0*Id"


def _wrap_text(t) -> str:
    return f"({to_text(t)})" if isinstance(t, Lin) else to_text(t)


def to_latex(e) -> str:
    if isinstance(e, Gen):
        return "X" if (e.kind, e.n) == ("V", 1) else f"{e.kind}_{{{e.n}}}"
    if isinstance(e, Act):
        return f"{_latex_wrap(e.child)}\\,{_cycle_text(e.perm) or 'id'}"
    if isinstance(e, Comp):
        return f"{_latex_wrap(e.outer)} \\circ_{{{e.i}}} {_latex_wrap(e.inner)}"
    if isinstance(e, Trace):
        return f"\\mathrm{{Tr}}_{{{e.j}}}\\left({to_latex(e.child)}\\right) X_{{{e.j}}}"
    parts = []
    for k, (c, t) in enumerate(e.terms):
        sign = "-" if c < 0 else ("+" if k else "")
        a = abs(c)
        coef = "" if a == 1 else (f"\\tfrac{{{a.numerator}}}{{{a.denominator}}}" if a.denominator != 1 else str(a))
        parts.append(f"{sign} {coef}{_latex_wrap(t)}".strip())
    return " ".join(parts) if parts else "0"


def _latex_wrap(t) -> str:
    return f"\\left({to_latex(t)}\\right)" if isinstance(t, Lin) else to_latex(t)


def _lin_items(e) -> list:
    return list(e.terms) if isinstance(e, Lin) else [(Fraction(1), e)]


def _collect(items: Iterable) -> object:
    acc: dict = {}
    for c, t in items:
        acc[t] = acc.get(t, 0) + c
    terms = tuple(sorted(((c, t) for t, c in acc.items() if c), key=lambda ct: to_text(ct[1])))
    if len(terms) == 1 and terms[0][0] == 1:
        return terms[0][1]
    return Lin(terms)


def normal_form(e):
    """Multilinearity pushed outward, permutation actions merged and dropped when trivial."""
    if isinstance(e, Gen):
        return e
    if isinstance(e, Lin):
        items = []
        for c, t in e.terms:
            for c2, t2 in _lin_items(normal_form(t)):
                items.append((c * c2, t2))
        return _collect(items)
    if isinstance(e, Act):
        items = []
        for c, t in _lin_items(normal_form(e.child)):
            if isinstance(t, Act):
                p, t = t.perm * e.perm, t.child
            else:
                p = e.perm
            items.append((c, t if p.is_identity() else Act(p, t)))
        return _collect(items)
    if isinstance(e, Comp):
        items = []
        for c1, a in _lin_items(normal_form(e.outer)):
            for c2, b in _lin_items(normal_form(e.inner)):
                items.append((c1 * c2, Comp(e.i, a, b)))
        return _collect(items)
    if isinstance(e, Trace):
        return _collect((c, Trace(e.j, t)) for c, t in _lin_items(normal_form(e.child)))
    raise ExprError(f"not an expression: {e!r}")


def _undifferentiated(x: LinComb, label: int) -> bool:
    for g in x.terms:
        gr = g.graph()
        if gr.kinds[find_label(gr, label)][2] != 0:
            return False
    return True


def evaluate_expr(e, fam: GeneratorFamily, dim: int | None = STABILITY_DIM) -> LinComb:
    """Graph combination of an expression, arguments labelled 1..arity."""
    if isinstance(e, Gen):
        return fam.D(e.n) if e.kind == "D" else fam.V(e.n)
    if isinstance(e, Act):
        return permute(evaluate_expr(e.child, fam, dim), e.perm)
    if isinstance(e, Lin):
        out = LinComb()
        for c, t in e.terms:
            out.iadd(evaluate_expr(t, fam, dim), c)
        return out
    if isinstance(e, Comp):
        a = evaluate_expr(e.outer, fam, dim)
        b = evaluate_expr(e.inner, fam, dim)
        na, nb = expr_arity(e.outer), expr_arity(e.inner)
        if not a.is_zero() and not _undifferentiated(a, e.i):
            raise ExprError(f"slot {e.i} is differentiated; substitution needs an order-0 slot")
        tmp = _TMP + 7
        a = relabel_comb(a, {j: (tmp if j == e.i else j + nb - 1 if j > e.i else j) for j in range(1, na + 1)})
        b = relabel_comb(b, {j: j + e.i - 1 for j in range(1, nb + 1)})
        return substitute_comb(a, tmp, b)
    if isinstance(e, Trace):
        x = evaluate_expr(e.child, fam, dim)
        if not x.is_zero() and not _undifferentiated(x, e.j):
            raise ExprError(f"slot {e.j} is differentiated; the trace needs an order-0 slot")
        return tr(x, e.j, dim)
    raise ExprError(f"not an expression: {e!r}")
