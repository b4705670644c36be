"""Command-line interface: each subcommand prints a report and exits 0 (verified), 1 (failed), 2 (bad input)."""
from __future__ import annotations

import argparse
from dataclasses import asdict
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import __version__
from .complex import Bounds, degree0_cocycles, delta
from .exactla import SparseMatrix, rank
from .graphcore import LinComb, trace_product
from .jetlab import naturality_check
from .operators import K, K_sym, V, curvature, identity, lie_bracket, nabla
from .permgroup import (
    Perm, in_kernel_module, is_generator, leading_K, leading_N, two_column_decomposition,
    unshuffle_basis,
)

BOUNDS_ENV = "NATGRAPH_BOUNDS"
EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def bounds_from_env() -> Bounds:
    raw = os.environ.get(BOUNDS_ENV)
    if not raw:
        return Bounds()
    try:
        v, a = (int(x) for x in raw.split(","))
    except ValueError as exc:
        raise InputError(f"{BOUNDS_ENV} must look like 'max_vertices,max_arity'") from exc
    return Bounds(max_vertices=v, max_arity=a)


def named_operator(name: str) -> LinComb:
    """Built-in operators usable wherever a combination file is expected."""
    t = 50
    table = {
        "identity": lambda: identity(1),
        "lie": lambda: lie_bracket(1, 2),
        "nabla": lambda: nabla(1, 2),
        "curvature": curvature,
        "trace-nabla-x": lambda: trace_product(nabla(t, 2), t, 1),
        "trace-nabla-y": lambda: trace_product(nabla(t, 1), t, 2),
        "christoffel": lambda: nabla(1, 2).filter(lambda g: g.count("N") > 0),
    }
    for n in range(3, 8):
        table[f"K{n}"] = lambda n=n: K(n)
        table[f"Ksym{n}"] = lambda n=n: K_sym(n)
    for n in range(1, 6):
        table[f"V{n}"] = lambda n=n: V(n)
    if name not in table:
        raise InputError(f"unknown operator {name!r}; known: {', '.join(sorted(table))}")
    return table[name]()


def load_combination(source: str) -> LinComb:
    """A JSON file holding a combination (list of {coef, graph}) or {"combination": [...]}, or a built-in name."""
    p = Path(source)
    if not p.exists():
        return named_operator(source)
    try:
        data = json.loads(p.read_text())
        if isinstance(data, dict):
            data = data["combination"]
        return LinComb.from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read a graph combination from {source}: {exc}") from exc


def _frac(x: Fraction) -> str:
    return str(Fraction(x))


# ---------------------------------------------------------------------------
# subcommands; each returns (ok, report)


def cmd_dim(args) -> tuple[bool, dict]:
    b = bounds_from_env()
    basis = degree0_cocycles(args.d, b)
    rep = {"d": args.d, "dimension": len(basis), "basis": [x.to_json() for x in basis]}
    ok = True
    if args.d == 2:
        named = {"nabla_X Y": nabla(1, 2), "nabla_Y X": nabla(2, 1),
                 "X Tr(nabla_- Y)": named_operator("trace-nabla-x"),
                 "Y Tr(nabla_- X)": named_operator("trace-nabla-y")}
        cols = [dict(x.terms) for x in named.values()]
        r_named = rank(SparseMatrix.from_columns(list(range(4)), cols))
        r_all = rank(SparseMatrix.from_columns(list(range(4 + len(basis))), cols + [dict(x.terms) for x in basis]))
        cocycles = all(delta(x).is_zero() for x in named.values())
        spans = r_named == len(basis) == r_all and cocycles
        rep["named_basis"] = list(named)
        rep["named_basis_spans"] = spans
        ok = spans
    return ok, rep


def cmd_check_cocycle(args) -> tuple[bool, dict]:
    x = load_combination(args.file)
    dx = delta(x)
    return dx.is_zero(), {"terms": len(x), "cocycle": dx.is_zero(), "delta_terms": len(dx),
                          "combination": x.to_json()}


def _leading(choice: str, n: int):
    if choice == "K":
        return leading_K(n)
    if choice == "N":
        return leading_N(n)
    p = Path(choice)
    if not p.exists():
        raise InputError("leading term must be K, N or a JSON file")
    from .permgroup import LeadingTermElem
    data = json.loads(p.read_text())
    try:
        terms = {Perm(tuple(t["perm"])): Fraction(t["coef"]) for t in data["terms"]}
        return LeadingTermElem.from_perms(int(data.get("n", n)), terms)
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad leading-term file: {exc}") from exc


def cmd_ideal_basis(args) -> tuple[bool, dict]:
    from .opalg import quasi_symmetries
    from .operators import act_group_ring
    from .perturb import c_order, ideal_cocycle, vf_order

    lead = _leading(args.leading, args.n)
    if not in_kernel_module(lead):
        raise InputError("leading term is not in the kernel module")
    coc = ideal_cocycle(args.n, "sigma", lead, args.mode == "equivariant")
    x = coc.value
    is_coc = delta(x).is_zero()
    qs = quasi_symmetries(lead)
    killed = sum(1 for S in qs if act_group_ring(x, S).is_zero())
    rep = {"n": args.n, "leading": str(lead), "mode": args.mode, "terms": len(x), "cocycle": is_coc,
           "vf_order": vf_order(x), "c_order": c_order(x), "quasi_symmetries": len(qs),
           "annihilated_by": killed, "combination": x.to_json()}
    ok = is_coc and (args.mode == "plain" or killed == len(qs))
    return ok, rep


def cmd_correction(args) -> tuple[bool, dict]:
    from .perturb import c_order, correction, ideal_cocycle

    coc = ideal_cocycle(args.n, "sigma", leading_K(args.n), True)
    P = correction(coc, K_sym(args.n))
    rep = {"n": args.n, "zero": P.is_zero(), "terms": len(P), "c_order": c_order(P),
           "cocycle": delta(P).is_zero(), "combination": P.to_json()}
    ok = delta(P).is_zero() and c_order(P) <= args.n - 3
    return ok, rep


def _suite_job(family: str, n: int) -> list[dict]:
    from .opalg import FAMILIES, bianchi_suite, v_suite

    fam = FAMILIES[family]()
    out = [r.to_json() for r in bianchi_suite(fam, n)] if n >= 3 else []
    if n >= 2:
        out += [r.to_json() for r in v_suite(fam, n)]
    return out


def cmd_bianchi(args) -> tuple[bool, dict]:
    from .opalg import FAMILIES

    if args.family not in FAMILIES:
        raise InputError(f"unknown family {args.family!r}")
    ns = args.n
    if args.jobs > 1 and len(ns) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_suite_job, [args.family] * len(ns), ns))
    else:
        results = [_suite_job(args.family, n) for n in ns]
    rows = [r for res in results for r in res]
    if not args.full:
        for r in rows:
            r.pop("value", None)
    return True, {"family": args.family, "n": ns, "deviations": rows}


def cmd_quasisym(args) -> tuple[bool, dict]:
    from .opalg import quasi_symmetries

    lead = _leading(args.leading, args.n)
    qs = quasi_symmetries(lead)
    return True, {"n": args.n, "leading": str(lead), "dimension": len(qs), "basis": [str(s) for s in qs]}


def cmd_naturality(args) -> tuple[bool, dict]:
    x = load_combination(args.file)
    ok, witness = naturality_check(x, args.dim, args.trials, args.seed)
    return ok, {"dim": args.dim, "trials": args.trials, "seed": args.seed, "natural": ok, "witness": witness}


def cmd_kernel_module(args) -> tuple[bool, dict]:
    n = args.n
    dim = len(unshuffle_basis(n)) - 1
    parts = [{"shape": list(y.rows), "dimension": m} for y, m in two_column_decomposition(n)]
    hook = sum(p["dimension"] for p in parts)
    gens = {"K": is_generator(leading_K(n)), "N": is_generator(leading_N(n))}
    ok = dim == n * (n - 1) // 2 - 1 == hook and all(gens.values())
    return ok, {"n": n, "dimension": dim, "expected": n * (n - 1) // 2 - 1, "irreducibles": parts,
                "hook_sum": hook, "generators": gens}


def cmd_normalize_leading(args) -> tuple[bool, dict]:
    from .opalg import Normalization, normalize_leading

    x = load_combination(args.file)
    res = normalize_leading(x, args.n, args.dim)
    if isinstance(res, Normalization):
        return True, {"n": args.n, "generating": True, **res.to_json()}
    return False, {"n": args.n, "generating": False, "reason": res.reason, "stability_dim": args.dim}


def cmd_export(args) -> tuple[bool, dict]:
    x = named_operator(args.name)
    return True, {"name": args.name, "combination": x.to_json()}


# ---------------------------------------------------------------------------


def _positive(v: str) -> int:
    i = int(v)
    if i < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return i


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", metavar="PATH", help="also write the JSON report to PATH")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--jobs", type=_positive, default=1, help="worker processes for parallel suites")
    p = argparse.ArgumentParser(prog="natgraph", description="Natural operators on connections and vector fields via graph complexes.")
    sub = p.add_subparsers(dest="command", required=True)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    s = sub.add_parser("dim", help="dimension of invariant operators with d vector-field arguments")
    s.add_argument("d", type=_positive)
    s.set_defaults(func=cmd_dim)

    s = sub.add_parser("check-cocycle", help="check that a graph combination is closed")
    s.add_argument("file")
    s.set_defaults(func=cmd_check_cocycle)

    s = sub.add_parser("ideal-basis", help="lift a leading term to an ideal generator")
    s.add_argument("n", type=int)
    s.add_argument("--leading", default="K")
    s.add_argument("--mode", choices=("plain", "equivariant"), default="equivariant")
    s.set_defaults(func=cmd_ideal_basis)

    s = sub.add_parser("correction", help="difference between the ideal generator and the symmetrized ∇^{n-3}R")
    s.add_argument("n", type=int)
    s.set_defaults(func=cmd_correction)

    s = sub.add_parser("bianchi", help="deviation identities of a generator family")
    s.add_argument("family")
    s.add_argument("n", type=int, nargs="+")
    s.add_argument("--full", action="store_true", help="embed deviation graphs in the report")
    s.set_defaults(func=cmd_bianchi)

    s = sub.add_parser("quasisym", help="quasi-symmetries of a leading term")
    s.add_argument("n", type=int)
    s.add_argument("--leading", default="K")
    s.set_defaults(func=cmd_quasisym)

    s = sub.add_parser("naturality", help="coordinate-independence test on random jets")
    s.add_argument("file")
    s.add_argument("--dim", type=int, default=3)
    s.add_argument("--trials", type=_positive, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_naturality)

    s = sub.add_parser("kernel-module", help="dimension and decomposition of the kernel module")
    s.add_argument("n", type=int)
    s.set_defaults(func=cmd_kernel_module)

    s = sub.add_parser("normalize-leading", help="normalize an operator's leading term to a generator")
    s.add_argument("file")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--dim", type=int, default=3)
    s.set_defaults(func=cmd_normalize_leading)

    s = sub.add_parser("export", help="write a built-in operator as a graph combination")
    s.add_argument("name")
    s.set_defaults(func=cmd_export)
    return p


def _validate(args) -> None:
    n = getattr(args, "n", None)
    if args.command in ("ideal-basis", "correction", "quasisym", "kernel-module", "normalize-leading") and n < 3:
        raise InputError("n must be at least 3")
    if args.command == "bianchi" and any(k < 2 for k in n):
        raise InputError("n must be at least 2")
    if args.command == "naturality" and args.dim < 2:
        raise InputError("dim must be at least 2")


def _text(report: dict) -> str:
    lines = []
    for k, v in report.items():
        if k in ("combination", "basis") and isinstance(v, list) and v and isinstance(v[0], (dict, list)):
            lines.append(f"{k}: <{len(v)} entries; see JSON report>")
        elif k == "deviations":
            for r in v:
                state = "vanishes" if r["vanishes"] else f"nonzero, c-order {r['c_order']}, {r['terms']} terms"
                lines.append(f"n={r['n']} {r['identity']:<16} {r['element']}: {state}")
        else:
            lines.append(f"{k}: {v}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        _validate(args)
        ok, body = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = {"command": args.command, "version": __version__, "bounds": asdict(bounds_from_env()),
              "status": "verified" if ok else "failed", **body}
    blob = json.dumps(report, sort_keys=True, indent=1, default=str)
    if args.json:
        Path(args.json).write_text(blob + "\n")
    print(blob if args.format == "json" else _text(report))
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
