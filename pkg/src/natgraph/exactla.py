"""Exact sparse linear algebra over the rationals.

Vectors are dicts mapping hashable basis keys to Fractions; a matrix is a list of
columns (images of domain basis vectors) with declared row/column key orders.
Elimination runs fraction-free on integer rows with content normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

Vec = dict


class NoSolution(Exception):
    pass


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def _to_int_row(row: dict) -> dict:
    den = 1
    for v in row.values():
        den = _lcm(den, Fraction(v).denominator)
    out = {k: int(Fraction(v) * den) for k, v in row.items() if v}
    return _normalize(out)


def _normalize(row: dict) -> dict:
    g = 0
    for v in row.values():
        g = math.gcd(g, v)
        if g == 1:
            break
    if g > 1:
        row = {k: v // g for k, v in row.items()}
    return row


def vec_add(a: Vec, b: Vec, c=1) -> Vec:
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, 0) + c * v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def vec_scale(a: Vec, c) -> Vec:
    if c == 0:
        return {}
    return {k: v * c for k, v in a.items()}


@dataclass
class Echelon:
    """Reduced row echelon form of a set of sparse rows over an ordered index set."""

    order: dict  # key -> position
    rows: list = field(default_factory=list)  # list of (pivot key, dict key->Fraction), pivot entry 1
    pivots: dict = field(default_factory=dict)  # pivot key -> index into rows

    @staticmethod
    def build(rows: Iterable[dict], order: dict, reduced: bool = True) -> Echelon:
        ech = Echelon(order)
        int_rows = []
        for r in rows:
            ir = _to_int_row(r)
            if ir:
                int_rows.append(ir)
        piv_rows: dict = {}  # pivot key -> int row
        for r in int_rows:
            r = ech._reduce_int(r, piv_rows)
            if not r:
                continue
            p = min(r, key=order.__getitem__)
            # eliminate p from existing pivot rows lazily in the final reduction
            piv_rows[p] = r
        keys = sorted(piv_rows, key=order.__getitem__)
        frac_rows = {}
        for p in keys:
            r = piv_rows[p]
            a = r[p]
            frac_rows[p] = {k: Fraction(v, a) for k, v in r.items()}
        if reduced:
            for p in reversed(keys):
                row = frac_rows[p]
                for q in keys:
                    if q == p:
                        continue
                    c = frac_rows[q].get(p)
                    if c:
                        frac_rows[q] = vec_add(frac_rows[q], row, -c)
        for p in keys:
            ech.pivots[p] = len(ech.rows)
            ech.rows.append((p, frac_rows[p]))
        return ech

    def _reduce_int(self, r: dict, piv_rows: dict) -> dict:
        order = self.order
        while r:
            hits = [k for k in r if k in piv_rows]
            if not hits:
                return r
            p = min(hits, key=order.__getitem__)
            pr = piv_rows[p]
            a, b = pr[p], r[p]
            g = math.gcd(a, b)
            ma, mb = a // g, b // g
            new = {k: v * ma for k, v in r.items()}
            for k, v in pr.items():
                w = new.get(k, 0) - mb * v
                if w:
                    new[k] = w
                else:
                    new.pop(k, None)
            r = _normalize(new)
        return r

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, v: Vec) -> Vec:
        """Remainder of v after subtracting pivot rows (requires reduced form)."""
        out = dict(v)
        for p, row in self.rows:
            c = out.get(p)
            if c:
                out = vec_add(out, row, -c)
        return out


@dataclass
class SparseMatrix:
    """Columns are images of domain basis keys, as sparse vectors over row keys."""

    row_keys: list
    col_keys: list
    columns: list  # list of dict row_key -> Fraction

    @staticmethod
    def from_columns(col_keys: Sequence, columns: Sequence[dict], row_keys: Sequence | None = None) -> SparseMatrix:
        if row_keys is None:
            seen: dict = {}
            for c in columns:
                for k in c:
                    seen.setdefault(k, None)
            row_keys = list(seen)
        return SparseMatrix(list(row_keys), list(col_keys), [dict(c) for c in columns])

    def rows(self) -> list[dict]:
        idx = {k: i for i, k in enumerate(self.row_keys)}
        out = [dict() for _ in self.row_keys]
        for j, col in enumerate(self.columns):
            ck = self.col_keys[j]
            for rk, v in col.items():
                if v:
                    out[idx[rk]][ck] = Fraction(v)
        return out

    def apply(self, u: Vec) -> Vec:
        out: dict = {}
        idx = {k: j for j, k in enumerate(self.col_keys)}
        for k, c in u.items():
            out = vec_add(out, self.columns[idx[k]], c)
        return out


def rank(M: SparseMatrix) -> int:
    order = {k: i for i, k in enumerate(M.col_keys)}
    return Echelon.build(M.rows(), order, reduced=False).rank


def kernel_basis(M: SparseMatrix) -> list[Vec]:
    order = {k: i for i, k in enumerate(M.col_keys)}
    ech = Echelon.build(M.rows(), order)
    free = [k for k in M.col_keys if k not in ech.pivots]
    out = []
    for f in free:
        v = {f: Fraction(1)}
        for p, row in ech.rows:
            c = row.get(f)
            if c:
                v[p] = -c
        out.append(v)
    return out


def solve_preimage(M: SparseMatrix, v: Vec) -> Vec:
    """Some u with M u = v; raises NoSolution when v is not in the image."""
    if not v:
        return {}
    extra = object()
    row_keys = list(M.row_keys)
    known = set(row_keys)
    for k in v:
        if k not in known:
            row_keys.append(k)
            known.add(k)
    aug = SparseMatrix(row_keys, list(M.col_keys) + [extra], list(M.columns) + [{k: -c for k, c in v.items()}])
    order = {k: i for i, k in enumerate(aug.col_keys)}
    ech = Echelon.build(aug.rows(), order)
    if extra in ech.pivots:
        raise NoSolution("vector not in the image")
    u = {}
    for p, row in ech.rows:
        c = row.get(extra)
        if c:
            u[p] = -c
    return u


def row_space_basis(vectors: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    """Reduced basis of the span of dense vectors (used for small module computations)."""
    if not vectors:
        return []
    n = len(vectors[0])
    rows = [{i: Fraction(x) for i, x in enumerate(v) if x} for v in vectors]
    ech = Echelon.build(rows, {i: i for i in range(n)})
    return [[row.get(i, Fraction(0)) for i in range(n)] for _, row in ech.rows]


@dataclass
class Subspace:
    vectors: list  # sparse vectors
    order: dict  # ambient key -> position
    echelon: Echelon = None

    def __post_init__(self) -> None:
        if self.echelon is None:
            self.echelon = Echelon.build(self.vectors, self.order)
        if self.echelon.rank != len(self.vectors):
            self.vectors = [row for _, row in self.echelon.rows]

    @property
    def dim(self) -> int:
        return self.echelon.rank

    def contains(self, v: Vec) -> bool:
        return not self.echelon.reduce(v)


def complement(Z: Subspace, ambient: Sequence) -> list[Vec]:
    """Unit vectors on non-pivot coordinates; together with Z they span the ambient space."""
    return [{k: Fraction(1)} for k in ambient if k not in Z.echelon.pivots]


def echelon_projection(Z: Subspace) -> Callable[[Vec], Vec]:
    """Projection onto the echelon complement along Z."""
    return Z.echelon.reduce


def equivariant_projection(
    p: Callable[[Vec], Vec],
    group: Sequence[tuple[Callable[[Vec], Vec], Callable[[Vec], Vec]]],
) -> Callable[[Vec], Vec]:
    """Average of g^{-1} p g over a finite group given as (g, g^{-1}) pairs."""
    size = len(group)

    def proj(v: Vec) -> Vec:
        out: dict = {}
        for g, ginv in group:
            out = vec_add(out, ginv(p(g(v))))
        return vec_scale(out, Fraction(1, size))

    return proj
