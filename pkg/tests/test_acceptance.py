"""Acceptance suite: one PASS/FAIL line per criterion (shown with -s and in the terminal summary)."""
from __future__ import annotations

import random
import sys
import time
from fractions import Fraction

import pytest

from natgraph.complex import degree0_cocycles, delta, delta_h, delta_v, enumerate_basis, grades, coordinates
from natgraph.exactla import SparseMatrix, kernel_basis, rank
from natgraph.graphcore import LinComb, trace_product
from natgraph.jetlab import JetContext, Poly, coord_curvature, coord_lie, coord_nabla, evaluate, required_order
from natgraph.opalg import (
    NotGenerating, bianchi_suite, curvature_family, normalize_leading, normalized_leading, quasi_symmetries,
    v_suite, wheel_free_leading,
)
from natgraph.operators import K_sym, act_group_ring, curvature, lie_bracket, nabla
from natgraph.permgroup import (
    GroupRingElem, LeadingTermElem, Perm, act, in_kernel_module, is_generator, leading_K, leading_N,
    two_column_decomposition, unshuffle_basis, young_symmetrizer,
)
from natgraph.perturb import PerturbationState, beta, ideal_cocycle, vf_order, zh_basis

from _fixtures import P5_TABLE, R, p5, u_first, u_wheels

RESULTS: list[str] = []


def report(k, ok: bool, detail: str, t0: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail} ({time.perf_counter() - t0:.1f}s)"
    RESULTS.append(line)
    print(line)


def span_rank(xs) -> int:
    keys = sorted({g for x in xs for g in x.terms})
    M = SparseMatrix.from_columns(list(range(len(xs))), [coordinates(x) for x in xs], keys)
    return rank(M)


def test_criterion_01_dimension_table():
    t0 = time.perf_counter()
    d1, d2 = len(degree0_cocycles(1)), degree0_cocycles(2)
    named = [nabla(1, 2), nabla(2, 1), trace_product(nabla(50, 2), 50, 1), trace_product(nabla(50, 1), 50, 2)]
    spans = span_rank(named) == 4 and span_rank(d2 + named) == 4
    ok = d1 == 1 and len(d2) == 4 and spans
    report(1, ok, f"dim 1 = {d1}, dim 2 = {len(d2)}, named basis spans: {spans}", t0)
    assert ok


def test_criterion_02_kernel_module_dimensions():
    t0 = time.perf_counter()
    rows = []
    for n in range(3, 8):
        basis = unshuffle_basis(n)
        # kernel of the augmentation computed by linear algebra on the induced module
        M = SparseMatrix.from_columns(list(basis), [{0: Fraction(-1)} for _ in basis], [0])
        rows.append((n, len(kernel_basis(M)), sum(d for _, d in two_column_decomposition(n)), n * (n - 1) // 2 - 1))
    ok = all(a == b == c for _, a, b, c in rows)
    report(2, ok, "dim K(n) for n=3..7: " + ", ".join(str(a) for _, a, _, _ in rows), t0)
    assert ok


def test_criterion_03_differential_soundness():
    t0 = time.perf_counter()
    count = 0
    ok = True
    for d in (1, 2, 3):
        for gr in grades(d):
            for g in enumerate_basis(d, gr):
                x = LinComb({g: 1})
                h, v = delta_h(x), delta_v(x)
                ok &= delta_h(h).is_zero() and delta_v(v).is_zero() and (delta_h(v) + delta_v(h)).is_zero()
                count += 1
    report(3, ok, f"all three identities on {count} basis graphs, d <= 3", t0)
    assert ok


def test_criterion_04_cocycle_fixtures():
    t0 = time.perf_counter()
    ok = all(delta(x).is_zero() for x in (lie_bracket(), nabla(), curvature()))
    report(4, ok, "bracket, covariant derivative, curvature are closed", t0)
    assert ok


def test_criterion_05_coordinate_agreement():
    t0 = time.perf_counter()
    n = 0
    ok = True
    for dim in (2, 3, 4):
        for seed in range(7):
            ctx = JetContext.random(dim, 3, [1, 2, 3], seed=100 * dim + seed)
            ok &= evaluate(lie_bracket(), ctx) == coord_lie(ctx)
            ok &= evaluate(nabla(), ctx) == coord_nabla(ctx)
            ok &= evaluate(curvature(), ctx) == coord_curvature(ctx)
            n += 1
    report(5, ok, f"{n} random exact jet contexts in dims 2..4", t0)
    assert ok


def test_criterion_06_perturbation():
    t0 = time.perf_counter()
    ok = True
    count = 0
    for d in (1, 2, 3):
        state = PerturbationState()
        for n in range(d):
            for z in zh_basis(d, n):
                b = beta(z, state)
                rest = b.lower_order_terms
                top = max(g.count("N") for g in z.terms)
                ok &= delta(b.value).is_zero()
                ok &= all(g.count("N") > top for g in rest.terms)
                ok &= vf_order(b.value) == vf_order(z)
                count += 1
    report(6, ok, f"{count} horizontal cocycles lifted, d <= 3", t0)
    assert ok


def annihilated(x: LinComb, n: int) -> tuple[int, int]:
    qs = quasi_symmetries(leading_K(n))
    bad = sum(1 for S in qs if not act_group_ring(x, S).is_zero())
    return len(qs), bad


def test_criterion_07_ideal_basis():
    t0 = time.perf_counter()
    p3 = ideal_cocycle(3, "sigma", leading_K(3)).value - K_sym(3)
    p4 = ideal_cocycle(4, "sigma", leading_K(4)).value - K_sym(4)
    j5 = ideal_cocycle(5, "sigma", leading_K(5)).value
    total, bad = annihilated(j5, 5)
    ok = p3.is_zero() and p4.is_zero() and delta(j5).is_zero() and bad == 0
    report(7, ok, f"P3 = 0: {p3.is_zero()}, P4 = 0: {p4.is_zero()}, "
                  f"J5 killed by {total - bad}/{total} quasi-symmetries", t0)
    assert ok


def test_criterion_08_explicit_correction():
    t0 = time.perf_counter()
    x = K_sym(5) + p5()
    closed = delta(x).is_zero()
    total, bad = annihilated(x, 5)
    ok = closed and bad == 0
    report(8, ok, f"{len(P5_TABLE)}-term correction: closed {closed}, killed by {total - bad}/{total}", t0)
    assert ok


def test_criterion_09_bianchi_ricci():
    t0 = time.perf_counter()
    fam = curvature_family()
    reps = {n: {r.name: r for r in bianchi_suite(fam, n)} for n in (3, 4, 5)}
    ok = all(reps[n]["antisymmetry"].vanishes and reps[n]["cyclic-last"].vanishes for n in (3, 4, 5))
    ok &= all(reps[n]["cyclic-middle"].vanishes for n in (4, 5))
    swap = reps[5]["derivative-swap"]
    ok &= not swap.vanishes
    ok &= all(r.vanishes for n in (2, 3) for r in v_suite(fam, n))
    report(9, ok, f"first three deviations vanish, derivative swap at n=5 nonzero "
                  f"(c-order {swap.c_order}, {swap.terms} terms), V deviations vanish", t0)
    assert ok


def depends_on_top_order(x: LinComb, dim: int, seeds=range(3)) -> bool:
    """Whether the value changes when only the first derivatives of the connection are perturbed."""
    order = required_order(x) + 1
    for s in seeds:
        ctx = JetContext.random(dim, order, [1, 2, 3], seed=s)
        rng = random.Random(1000 + s)
        gamma = {}
        for key, p in ctx.gamma.items():
            c = dict(p.c)
            for i in range(dim):
                e = tuple(1 if j == i else 0 for j in range(dim))
                c[e] = c.get(e, 0) + rng.randint(1, 3)
            gamma[key] = Poly(dim, c)
        moved = JetContext(dim, ctx.order, gamma, ctx.fields)
        if evaluate(x, ctx) != evaluate(x, moved):
            return True
    return False


def c_is_valid(c: GroupRingElem) -> bool:
    lead = wheel_free_leading(normalized_leading(u_first(), 3, c), 3)
    return lead is not None and in_kernel_module(lead) and is_generator(lead)


@pytest.mark.xfail(strict=True, reason="literal values do not hold; see the decisions ledger")
def test_criterion_10_normalization_literal():
    t0 = time.perf_counter()
    half_swap = GroupRingElem.of(Perm.transposition(3, 1, 2), Fraction(1, 2))
    literal_c = c_is_valid(half_swap)
    diff = u_wheels() - R(1, 2, 3)
    lower2 = not depends_on_top_order(diff, 2)
    top3 = depends_on_top_order(diff, 3)
    ok = literal_c and lower2 and top3
    report(10, ok, f"c = 1/2 (1 2) normalizes: {literal_c}; wheel operator minus R lower order "
                   f"in dim 2: {lower2}, in dim 3 not: {top3}", t0)
    assert ok


def test_criterion_10_normalization_corrected():
    t0 = time.perf_counter()
    res = normalize_leading(u_first(), 3)
    one = GroupRingElem.one(3)
    half_diff = (one - GroupRingElem.of(Perm.transposition(3, 1, 2))).scale(Fraction(1, 2))
    found = not isinstance(res, NotGenerating) and is_generator(res.leading) and all(e.is_zero() for e in res.cj)
    wheels = normalize_leading(u_wheels(), 3)
    not_gen = isinstance(wheels, NotGenerating)
    plus = u_wheels() + R(1, 2, 3)
    lower2 = not depends_on_top_order(plus, 2)
    top3 = depends_on_top_order(plus, 3)
    ok = found and c_is_valid(half_diff) and not_gen and lower2 and top3
    report("10 (corrected)", ok, f"c = {res.c if found else None} with c_j = 0, c = 1/2(id - (1 2)) valid, "
                                 f"wheel operator NotGenerating: {not_gen}; wheel operator plus R lower order in "
                                 f"dim 2: {lower2}, not in dim 3: {top3}", t0)
    assert ok


def test_criterion_11_generators():
    t0 = time.perf_counter()
    ok = all(is_generator(leading_K(n)) and is_generator(leading_N(n)) for n in (3, 4, 5))
    rng = random.Random(11)
    rejected = 0
    for n in (4, 5):
        basis = unshuffle_basis(n)
        vec = [Fraction(rng.randint(-3, 3)) for _ in basis]
        vec[0] -= sum(vec)
        x = LeadingTermElem.from_vector(n, vec)
        for lam, _ in two_column_decomposition(n):
            # keep only the lam-isotypic part: the other projection is zero
            y = act(x, young_symmetrizer(lam.rows))
            if not y.is_zero() and not is_generator(y):
                rejected += 1
    ok &= rejected == 4
    report(11, ok, f"(K), (N) generate for n = 3..5; {rejected}/4 single-component elements rejected", t0)
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
