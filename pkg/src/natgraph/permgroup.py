"""Symmetric groups, group rings, unshuffle-induced modules and Young symmetrizers.

Conventions: a permutation acts on labels, and the product ``p * q`` means
"apply p, then q", i.e. ``(p * q)(i) = q(p(i))``.  With this product the
relabeling action on operators/graphs (label i becomes p(i)) is a right action.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping


@dataclass(frozen=True, order=True)
class Perm:
    images: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValueError(f"not a permutation: {self.images}")

    @staticmethod
    def identity(n: int) -> Perm:
        return Perm(tuple(range(1, n + 1)))

    @staticmethod
    def transposition(n: int, a: int, b: int) -> Perm:
        im = list(range(1, n + 1))
        im[a - 1], im[b - 1] = b, a
        return Perm(tuple(im))

    @staticmethod
    def cycle(n: int, *pts: int) -> Perm:
        im = list(range(1, n + 1))
        for a, b in zip(pts, pts[1:] + pts[:1]):
            im[a - 1] = b
        return Perm(tuple(im))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: Perm) -> Perm:
        return Perm(tuple(other.images[i - 1] for i in self.images))

    def inverse(self) -> Perm:
        inv = [0] * self.n
        for i, j in enumerate(self.images, 1):
            inv[j - 1] = i
        return Perm(tuple(inv))

    def sign(self) -> int:
        s = 1
        seen = [False] * self.n
        for i in range(self.n):
            if seen[i]:
                continue
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = self.images[j] - 1
                length += 1
            if length % 2 == 0:
                s = -s
        return s

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images, 1))

    def cycles(self) -> list[tuple[int, ...]]:
        out, seen = [], set()
        for i in range(1, self.n + 1):
            if i in seen or self(i) == i:
                continue
            c, j = [], i
            while j not in seen:
                seen.add(j)
                c.append(j)
                j = self(j)
            out.append(tuple(c))
        return out

    def __str__(self) -> str:
        cs = self.cycles()
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cs) or "id"


def act_tuple(x: tuple, p: Perm) -> tuple:
    """Right action on tuples: the entry at position i moves to position p(i)."""
    y = [None] * len(x)
    for i, v in enumerate(x, 1):
        y[p(i) - 1] = v
    return tuple(y)


def all_perms(n: int) -> list[Perm]:
    return [Perm(t) for t in itertools.permutations(range(1, n + 1))]


def unshuffles(p: int, q: int) -> list[Perm]:
    """(p,q)-unshuffles: increasing on 1..p and on p+1..p+q, lexicographic order."""
    n = p + q
    out = []
    for tail in itertools.combinations(range(1, n + 1), q):
        head = [i for i in range(1, n + 1) if i not in tail]
        out.append(Perm(tuple(head) + tuple(tail)))
    return sorted(out)


def _frac(c) -> Fraction:
    return c if isinstance(c, Fraction) else Fraction(c)


@dataclass(frozen=True)
class GroupRingElem:
    n: int
    terms: Mapping[Perm, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        clean = {p: _frac(c) for p, c in self.terms.items() if c != 0}
        for p in clean:
            if p.n != self.n:
                raise ValueError("degree mismatch")
        object.__setattr__(self, "terms", clean)

    @staticmethod
    def of(p: Perm, c=1) -> GroupRingElem:
        return GroupRingElem(p.n, {p: _frac(c)})

    @staticmethod
    def one(n: int) -> GroupRingElem:
        return GroupRingElem.of(Perm.identity(n))

    @staticmethod
    def zero(n: int) -> GroupRingElem:
        return GroupRingElem(n, {})

    @staticmethod
    def total(n: int) -> GroupRingElem:
        return GroupRingElem(n, {p: Fraction(1) for p in all_perms(n)})

    def __add__(self, other: GroupRingElem) -> GroupRingElem:
        t = dict(self.terms)
        for p, c in other.terms.items():
            t[p] = t.get(p, 0) + c
        return GroupRingElem(self.n, t)

    def __neg__(self) -> GroupRingElem:
        return GroupRingElem(self.n, {p: -c for p, c in self.terms.items()})

    def __sub__(self, other: GroupRingElem) -> GroupRingElem:
        return self + (-other)

    def scale(self, c) -> GroupRingElem:
        return GroupRingElem(self.n, {p: v * c for p, v in self.terms.items()})

    def __mul__(self, other) -> GroupRingElem:
        if not isinstance(other, GroupRingElem):
            return self.scale(other)
        t: dict[Perm, Fraction] = {}
        for p, a in self.terms.items():
            for q, b in other.terms.items():
                r = p * q
                t[r] = t.get(r, 0) + a * b
        return GroupRingElem(self.n, t)

    __rmul__ = scale

    def __eq__(self, other) -> bool:
        return isinstance(other, GroupRingElem) and self.n == other.n and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def act_tuple_sum(self, x: tuple) -> dict[tuple, Fraction]:
        out: dict[tuple, Fraction] = {}
        for p, c in self.terms.items():
            y = act_tuple(x, p)
            out[y] = out.get(y, 0) + c
        return {k: v for k, v in out.items() if v}

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*{p}" for p, c in sorted(self.terms.items()))


# ---------------------------------------------------------------------------
# E0(n) = induced module on (n-2,2)-unshuffle cosets

@lru_cache(maxsize=None)
def _ush_basis(n: int) -> tuple[Perm, ...]:
    return tuple(unshuffles(n - 2, 2))


def coset_rep(sigma: Perm) -> Perm:
    """Unshuffle representative of the coset containing sigma (blocks sorted)."""
    n = sigma.n
    im = sigma.images
    return Perm(tuple(sorted(im[: n - 2])) + tuple(sorted(im[n - 2:])))


@dataclass(frozen=True)
class LeadingTermElem:
    n: int
    coeffs: Mapping[Perm, Fraction] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("arity must be at least 2")
        clean = {}
        for p, c in self.coeffs.items():
            if c == 0:
                continue
            if p.n != self.n or coset_rep(p) != p:
                raise ValueError(f"not an unshuffle: {p}")
            clean[p] = _frac(c)
        object.__setattr__(self, "coeffs", clean)

    @staticmethod
    def from_perms(n: int, terms: Mapping[Perm, Fraction]) -> LeadingTermElem:
        t: dict[Perm, Fraction] = {}
        for p, c in terms.items():
            r = coset_rep(p)
            t[r] = t.get(r, 0) + _frac(c)
        return LeadingTermElem(n, t)

    @staticmethod
    def generator(n: int) -> LeadingTermElem:
        return LeadingTermElem(n, {Perm.identity(n): Fraction(1)})

    def vector(self) -> list[Fraction]:
        return [self.coeffs.get(p, Fraction(0)) for p in _ush_basis(self.n)]

    @staticmethod
    def from_vector(n: int, vec: Iterable) -> LeadingTermElem:
        return LeadingTermElem(n, dict(zip(_ush_basis(n), map(_frac, vec))))

    def __add__(self, other: LeadingTermElem) -> LeadingTermElem:
        t = dict(self.coeffs)
        for p, c in other.coeffs.items():
            t[p] = t.get(p, 0) + c
        return LeadingTermElem(self.n, t)

    def __neg__(self) -> LeadingTermElem:
        return self.scale(-1)

    def __sub__(self, other: LeadingTermElem) -> LeadingTermElem:
        return self + (-other)

    def scale(self, c) -> LeadingTermElem:
        return LeadingTermElem(self.n, {p: v * c for p, v in self.coeffs.items()})

    def is_zero(self) -> bool:
        return not self.coeffs

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        return " + ".join(f"{c}*{list(p.images)}" for p, c in sorted(self.coeffs.items()))


def unshuffle_basis(n: int) -> tuple[Perm, ...]:
    return _ush_basis(n)


def theta_E(x: LeadingTermElem) -> Fraction:
    return -sum(x.coeffs.values(), Fraction(0))


def in_kernel_module(x: LeadingTermElem) -> bool:
    return theta_E(x) == 0


def act(x: LeadingTermElem, g) -> LeadingTermElem:
    """Right action of a permutation or group-ring element on E0(n)."""
    if isinstance(g, GroupRingElem):
        if g.n != x.n:
            raise ValueError("arity mismatch")
        t: dict[Perm, Fraction] = {}
        for h, c in g.terms.items():
            for p, a in act(x, h).coeffs.items():
                t[p] = t.get(p, 0) + a * c
        return LeadingTermElem(x.n, t)
    if g.n != x.n:
        raise ValueError("arity mismatch")
    t = {}
    for p, c in x.coeffs.items():
        r = coset_rep(p * g)
        t[r] = t.get(r, 0) + c
    return LeadingTermElem(x.n, t)


def leading_K(n: int) -> LeadingTermElem:
    """Curvature-type leading term: -(identity) + (swap of positions n-2, n-1)."""
    tau = Perm.transposition(n, n - 2, n - 1)
    return LeadingTermElem.from_perms(n, {Perm.identity(n): -1, tau: 1})


def leading_N(n: int) -> LeadingTermElem:
    """Normal-tensor-type leading term: symmetric average minus the generator."""
    basis = _ush_basis(n)
    w = Fraction(1, len(basis))
    t = {p: w for p in basis}
    t[Perm.identity(n)] -= 1
    return LeadingTermElem(n, t)


# ---------------------------------------------------------------------------
# Young diagrams

@dataclass(frozen=True)
class YoungDiagram:
    rows: tuple[int, ...]

    def __post_init__(self) -> None:
        r = tuple(self.rows)
        if any(a < b for a, b in zip(r, r[1:])) or any(a <= 0 for a in r):
            raise ValueError(f"not a partition: {r}")
        object.__setattr__(self, "rows", r)

    @property
    def n(self) -> int:
        return sum(self.rows)

    def conjugate(self) -> tuple[int, ...]:
        return tuple(sum(1 for r in self.rows if r > j) for j in range(self.rows[0])) if self.rows else ()

    def hook_dimension(self) -> int:
        cols = self.conjugate()
        prod = 1
        for i, r in enumerate(self.rows):
            for j in range(r):
                prod *= (r - j - 1) + (cols[j] - i - 1) + 1
        return math.factorial(self.n) // prod

    def standard_tableau(self) -> list[list[int]]:
        out, k = [], 1
        for r in self.rows:
            out.append(list(range(k, k + r)))
            k += r
        return out


def two_column_decomposition(n: int) -> list[tuple[YoungDiagram, int]]:
    """Irreducible constituents of the kernel module: second row of length 1 or 2."""
    if n < 3:
        raise ValueError("n >= 3 required")
    out = []
    for l2 in (2, 1):
        l1 = n - l2
        if l1 >= l2:
            lam = YoungDiagram((l1, l2))
            out.append((lam, lam.hook_dimension()))
    return sorted(out, key=lambda t: t[0].rows)


def _subgroup(n: int, blocks: list[list[int]]) -> list[Perm]:
    out = []
    for choice in itertools.product(*[itertools.permutations(b) for b in blocks]):
        im = list(range(1, n + 1))
        for b, c in zip(blocks, choice):
            for src, dst in zip(b, c):
                im[src - 1] = dst
        out.append(Perm(tuple(im)))
    return out


@lru_cache(maxsize=None)
def young_symmetrizer(rows: tuple[int, ...]) -> GroupRingElem:
    """Row symmetrizer followed by column antisymmetrizer on the row-reading tableau."""
    lam = YoungDiagram(rows)
    n = lam.n
    tab = lam.standard_tableau()
    cols = [[tab[i][j] for i in range(len(tab)) if j < len(tab[i])] for j in range(len(tab[0]))]
    a = GroupRingElem(n, {p: Fraction(1) for p in _subgroup(n, tab)})
    b = GroupRingElem(n, {p: Fraction(p.sign()) for p in _subgroup(n, cols)})
    return a * b


def _orbit_span(x: LeadingTermElem) -> list[list[Fraction]]:
    from .exactla import row_space_basis

    n = x.n
    gens = [Perm.transposition(n, i, i + 1) for i in range(1, n)]
    basis = row_space_basis([x.vector()])
    frontier = [x]
    while frontier:
        nxt = []
        for y in frontier:
            for g in gens:
                z = act(y, g)
                new = row_space_basis(basis + [z.vector()])
                if len(new) > len(basis):
                    basis = new
                    nxt.append(z)
        frontier = nxt
    return basis


def young_projection_nonzero(x: LeadingTermElem, rows: tuple[int, ...]) -> bool:
    e = young_symmetrizer(rows)
    for v in _orbit_span(x):
        if not act(LeadingTermElem.from_vector(x.n, v), e).is_zero():
            return True
    return False


def is_generator(x: LeadingTermElem) -> bool:
    if not in_kernel_module(x):
        raise ValueError("element is not in the kernel module")
    if x.is_zero():
        return False
    return all(young_projection_nonzero(x, lam.rows) for lam, _ in two_column_decomposition(x.n))
