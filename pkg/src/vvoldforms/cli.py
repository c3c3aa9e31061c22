"""Command-line front end.

Every subcommand writes one JSON document to stdout (or ``--out``) and a short
summary to stderr.  Exit codes: 0 success, 1 a check failed, 2 invalid input,
3 I/O error, 4 size bound exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import __version__
from .errors import CertificateError, FQMError, SizeBoundError
from .fqm import (
    FiniteQuadraticModule,
    JordanSymbol,
    from_jordan,
    isotropic_subgroups,
    load_lattice_json,
    subgroup,
)
from .lifts import (
    build_lift_system,
    check_homomorphism,
    check_hypotheses,
    size_gate,
    kernel_down,
    rank_up,
    surjectivity_certificate,
)
from .oldnew import CoeffTable, is_oldform, split
from .weil import verify_gamma_trivial, verify_relations

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_SIZE = 4

DEFAULT_GUARD = 10**5


class InputError(FQMError):
    pass


# ---------------------------------------------------------------------------
# input helpers


def _module(args) -> FiniteQuadraticModule:
    if bool(args.jordan is not None) == bool(getattr(args, "lattice", None)):
        raise InputError("give exactly one of --jordan and --lattice")
    if args.jordan is not None:
        return from_jordan(args.jordan)
    return load_lattice_json(args.lattice)


def _guard(D: FiniteQuadraticModule, args) -> None:
    bound = args.size_bound
    if D.size > bound:
        raise SizeBoundError(f"|D| = {D.size} exceeds the size bound {bound}; raise it with --size-bound")


def _read_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from exc


def _subgroups(D: FiniteQuadraticModule, args) -> list:
    choice = args.subgroups
    if choice == "all":
        return isotropic_subgroups(D, include_trivial=args.include_trivial, size_bound=args.size_bound)
    if choice.startswith("max-order="):
        try:
            k = int(choice.split("=", 1)[1])
        except ValueError as exc:
            raise InputError(f"bad --subgroups value {choice!r}") from exc
        return isotropic_subgroups(D, include_trivial=args.include_trivial, max_order=k, size_bound=args.size_bound)
    data = _read_json(choice)
    if isinstance(data, dict):
        data = data.get("subgroups")
    if not isinstance(data, list):
        raise InputError("subgroup file must hold a list of generator lists")
    out = []
    for gens in data:
        if isinstance(gens, dict):
            gens = gens.get("generators")
        if not isinstance(gens, list):
            raise InputError("each subgroup must be a list of generators")
        out.append(subgroup(D, [tuple(int(c) for c in g) for g in gens]))
    return out


def _subgroup_json(H) -> dict:
    return {"order": H.order, "generators": [list(g) for g in H.generators]}


# ---------------------------------------------------------------------------
# subcommands; each returns (payload, summary, ok)


def cmd_fqm_info(args):
    D = _module(args)
    payload = {
        "order": D.size,
        "level": D.level,
        "signature": D.signature,
        "rank": D.rank,
        "module": D.to_dict(),
    }
    if args.jordan is not None:
        payload["jordan"] = str(JordanSymbol.parse(args.jordan))
    return payload, f"|D| = {D.size}, level {D.level}, signature {D.signature} mod 8", True


def cmd_isotropic(args):
    D = _module(args)
    _guard(D, args)
    max_order = args.max_order
    Hs = isotropic_subgroups(D, include_trivial=args.include_trivial, max_order=max_order, size_bound=args.size_bound)
    payload = {
        "order": D.size,
        "count": len(Hs),
        "subgroups": [dict(_subgroup_json(H), elements=[list(D.element(i)) for i in H.elements]) for H in Hs],
    }
    return payload, f"{len(Hs)} isotropic subgroups", True


def cmd_weil_verify(args):
    D = _module(args)
    _guard(D, args)
    relations = verify_relations(D)
    gamma = verify_gamma_trivial(D, samples=args.samples, seed=args.seed)
    ok = all(r["status"] == "pass" for r in relations + gamma)
    payload = {"order": D.size, "level": D.level, "signature": D.signature, "relations": relations, "gamma_n": gamma, "ok": ok}
    passed = sum(r["status"] == "pass" for r in relations + gamma)
    return payload, f"{passed}/{len(relations) + len(gamma)} checks passed", ok


def cmd_lifts_check(args):
    D = _module(args)
    _guard(D, args)
    Hs = _subgroups(D, args)
    homs = []
    ok = True
    for H in Hs:
        if H.order == 1:
            continue
        reports = check_homomorphism(D, H)
        ok &= all(r["status"] == "pass" for r in reports)
        homs.append({"subgroup": _subgroup_json(H), "checks": reports})
    system = build_lift_system(D, Hs, include_trivial=args.include_trivial)
    kdim = len(kernel_down(system))
    rk = rank_up(system)
    up = system.up_matrix()
    transpose_ok = bool((up == system.down_matrix().T).all())
    duality_ok = rk + kdim == D.size
    ok &= transpose_ok and duality_ok
    payload = {
        "order": D.size,
        "subgroups": [_subgroup_json(H) for H in Hs],
        "homomorphism": homs,
        "rows": system.n_rows,
        "rank_up": rk,
        "kernel_dim": kdim,
        "up_is_transpose": transpose_ok,
        "duality": duality_ok,
        "up_surjective": kdim == 0,
        "ok": ok,
    }
    return payload, f"{len(Hs)} subgroups, rank(up) = {rk}, dim ker(down) = {kdim}", ok


def _table_and_subgroups(args):
    if not args.table:
        raise InputError("--table is required")
    table = CoeffTable.from_json(_read_json(args.table))
    _guard(table.module, args)
    Hs = _subgroups(table.module, args)
    return table, Hs


def cmd_oldnew_split(args):
    table, Hs = _table_and_subgroups(args)
    payload = split(table, Hs, include_trivial=args.include_trivial)
    summary = (
        f"old dim {len(payload['old_basis'])}, new dim {len(payload['new_basis'])} "
        f"of {table.m}, up to n = {table.sturm}"
    )
    return payload, summary, True


def cmd_detect(args):
    table, Hs = _table_and_subgroups(args)
    if args.coeffs is not None:
        try:
            lam = [Fraction(x) for x in args.coeffs.split(",")]
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"bad --coeffs value {args.coeffs!r}") from exc
        if len(lam) != table.m:
            raise InputError(f"--coeffs needs {table.m} entries")
        combos = [("combination", lam)]
    else:
        combos = [(i, [int(i == j) for j in range(table.m)]) for i in range(table.m)]
    results = [{"form": label, "old": is_oldform(table, lam, Hs, args.include_trivial)} for label, lam in combos]
    payload = {"results": results, "truncated_at": table.sturm}
    if table.float_mode:
        payload["float_mode"] = True
    n_old = sum(r["old"] for r in results)
    return payload, f"{n_old}/{len(results)} old up to n = {table.sturm}", True


def cmd_certify(args):
    if args.jordan is None:
        raise InputError("certify needs --jordan; the rank conditions are read from the Jordan symbol")
    D = from_jordan(args.jordan)
    _guard(D, args)
    cert = surjectivity_certificate(args.jordan, jobs=args.threads, check_kernel=not args.no_kernel_check)
    payload = cert.to_dict()
    ok = cert.kernel_down_zero is not False
    return payload, f"{len(cert.entries)} preimages verified, ker(down) = 0: {cert.kernel_down_zero}", ok


def cmd_theorem_check(args):
    if args.jordan is None:
        raise InputError("theorem-check needs --jordan")
    hyp = check_hypotheses(args.jordan)
    gate = size_gate(args.jordan)
    payload = {"hypothesis": hyp.to_dict(), "size_gate": gate}
    if hyp.ok:
        summary = f"hypothesis {hyp.case} holds at p = {hyp.p}, j = {hyp.j} with {hyp.count} blocks"
    else:
        summary = "no rank hypothesis holds"
    if gate["size_meets_bound"]:
        summary += f"; |D| >= N^9 with multiplicity {gate['max_multiplicity']}"
        if gate["multiplicity_at_least_9"]:
            summary += " (multiplicity >= 9)"
    return payload, summary, hyp.ok


COMMANDS = {
    "fqm-info": cmd_fqm_info,
    "isotropic": cmd_isotropic,
    "weil-verify": cmd_weil_verify,
    "lifts-check": cmd_lifts_check,
    "oldnew-split": cmd_oldnew_split,
    "detect": cmd_detect,
    "certify": cmd_certify,
    "theorem-check": cmd_theorem_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vvoldforms", description="Discriminant forms, Weil representations and oldforms.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help, lattice=True, subgroups=False, table=False):
        p = sub.add_parser(name, help=help)
        p.add_argument("--jordan", help="Jordan symbol, e.g. '2^1:A+3^1:a=1'")
        if lattice:
            p.add_argument("--lattice", help="JSON file with the Gram matrix of an even lattice")
        if subgroups:
            p.add_argument("--subgroups", default="all", help="all | max-order=k | path to a JSON list of generator lists")
        if table:
            p.add_argument("--table", help="coefficient table JSON")
        p.add_argument("--include-trivial", action="store_true", help="also use H = {0}")
        p.add_argument("--size-bound", type=int, default=DEFAULT_GUARD, help="refuse |D| above this (default 100000)")
        p.add_argument("--out", help="write JSON here instead of stdout")
        return p

    add("fqm-info", "order, level, signature and structure of D")
    p = add("isotropic", "enumerate isotropic subgroups")
    p.add_argument("--max-order", type=int)
    p = add("weil-verify", "exact checks of the Weil representation")
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    add("lifts-check", "intertwining and duality checks for up/down", subgroups=True)
    add("oldnew-split", "old and new solution spaces of a table", lattice=False, subgroups=True, table=True)
    p = add("detect", "oldform test for each basis form or a combination", lattice=False, subgroups=True, table=True)
    p.add_argument("--coeffs", help="comma separated rationals; default tests each basis form")
    p = add("certify", "preimages of every basis vector under up", lattice=False)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-kernel-check", action="store_true")
    add("theorem-check", "which rank hypothesis holds, and the size gate", lattice=False)
    return parser


def _emit(payload, path):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching EXIT_INPUT
        return int(exc.code or 0)
    if getattr(args, "lattice", None) is None:
        args.lattice = None
    try:
        payload, summary, ok = COMMANDS[args.command](args)
        payload = {"schema": SCHEMA_VERSION, "command": args.command, **payload}
        _emit(payload, args.out)
    except SizeBoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except CertificateError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (FQMError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(summary, file=sys.stderr)
    return EXIT_OK if ok else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
