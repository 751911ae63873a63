"""Command-line front end.

Exit codes: 0 success or positive verdict, 1 negative verdict, 2 usage or
parse error, 3 internal invariant breach.  ``NNORMAL_VERBOSITY`` (0, 1 or 2;
default 1) controls how much detail reports carry.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .canonical import (InvariantBreach, are_similar, canonicalize, decompose_by_multiplicity,
                        k0_invariant, signature)
from .commutant import (NotCommuting, NotInCommutant, NotMaximal, extract_skeleton,
                        intertwiner_basis, normalize_idempotent, slots, standardize_family,
                        trace_r)
from .io import (ModelFileError, dumps_elements, dumps_model, load_model, loads_family,
                 loads_idempotent, save_model)
from .linalg import LinalgError, Matrix
from .measure import PartitionError
from .model import (ModelError, MultiplicityInput, OperatorModel, StructureError, validate)
from .oracle import oracle_similar
from .scalars import format_scalar

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_BUG = 0, 1, 2, 3


def verbosity() -> int:
    raw = os.environ.get("NNORMAL_VERBOSITY", "1")
    try:
        return max(0, min(2, int(raw)))
    except ValueError:
        return 1


def _rows(m: Matrix) -> str:
    if m.rows == 0:
        return "[]"
    return "[" + "; ".join(", ".join(format_scalar(x) for x in m.row(i)) for i in range(m.rows)) + "]"


def _valid_model(path: str) -> OperatorModel:
    """Load a model and bring it to a valid operator model (canonicalizing if needed)."""
    a = load_model(path)
    if isinstance(a, MultiplicityInput) or validate(a):
        a = canonicalize(a).model
    return a


def _owner(path: str) -> OperatorModel:
    a = load_model(path)
    if isinstance(a, MultiplicityInput):
        raise ModelFileError(f"{path}: expected an operator model")
    problems = validate(a)
    if problems:
        raise ModelError(problems)
    return a


def _slot_summary(a: OperatorModel, p) -> str:
    parts = []
    for c in a.partition:
        on = [f"({s.block},{s.copy})" for s in slots(a, c.id) if p[c.id][s.offset, s.offset]]
        parts.append(f"{c.id}: {{{', '.join(on)}}}")
    return "; ".join(parts)


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    a = load_model(args.file)
    if isinstance(a, MultiplicityInput):
        print(f"multiplicity input, {len(a.partition)} cells, block size {a.block.size}: ok")
        return EXIT_OK
    problems = validate(a)
    for v in problems:
        print(v)
    print("ok" if not problems else f"{len(problems)} violation(s)")
    return EXIT_OK if not problems else EXIT_NO


def cmd_canonicalize(args) -> int:
    result = canonicalize(load_model(args.file))
    lines = [f"canonical model: {len(result.model.blocks)} block(s)"]
    for c in result.source.partition:
        s = result.conjugators[c.id]
        tag = "identity" if s.is_identity() else _rows(s) if verbosity() >= 2 else f"{s.rows}x{s.cols}"
        lines.append(f"  conjugator {c.id}: {tag}")
    if args.output:
        save_model(result.model, args.output)
        print("\n".join(lines))
    else:
        sys.stdout.write(dumps_model(result.model))
        if verbosity() >= 1:
            print("\n".join(lines), file=sys.stderr)
    return EXIT_OK


def cmd_signature(args) -> int:
    a = _valid_model(args.file)
    print(signature(a).render())
    return EXIT_OK


def cmd_k0(args) -> int:
    a = _valid_model(args.file)
    print(k0_invariant(a).render())
    return EXIT_OK


def cmd_similar(args) -> int:
    report = are_similar(load_model(args.file_a), load_model(args.file_b), args.witness)
    if verbosity() == 0:
        print(report.verdict)
    else:
        print(report.render())
    return EXIT_OK if report.similar else EXIT_NO


def cmd_intertwiners(args) -> int:
    a, b = load_model(args.file_a), load_model(args.file_b)
    if not isinstance(a, OperatorModel) or not isinstance(b, OperatorModel):
        raise ModelFileError("intertwiners needs two operator models")
    report = intertwiner_basis(a, b)
    print(report.render())
    if verbosity() >= 2:
        for c in report.cells:
            for x in c.basis:
                print(f"  {c.a_cell}: {_rows(x)}")
    return EXIT_OK if report.pattern_ok else EXIT_BUG


def cmd_normalize(args) -> int:
    a = _owner(args.model)
    with open(args.idempotent, encoding="utf-8") as fh:
        p = loads_idempotent(fh.read(), a, args.idempotent)
    x, d = normalize_idempotent(a, p)
    print(f"D slots: {_slot_summary(a, d)}")
    for (cid, k), v in trace_r(a, d).values.items():
        print(f"r_{k}({cid}) = {v}")
    for c in a.partition:
        print(f"X {c.id}: {_rows(x[c.id])}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(dumps_elements("family", a, [x, d]))
    return EXIT_OK


def cmd_standardize(args) -> int:
    a = _owner(args.model)
    with open(args.family, encoding="utf-8") as fh:
        family = loads_family(fh.read(), a, args.family)
    try:
        x = standardize_family(a, family)
    except NotMaximal as e:
        print(f"not maximal at cell {e.cell}; finer idempotent:")
        for c in a.partition:
            print(f"  {c.id}: {_rows(e.witness[c.id])}")
        return EXIT_NO
    for c in a.partition:
        print(f"X {c.id}: {_rows(x[c.id])}")
    images = [p.conjugate_by(x) for p in family]
    for k, img in enumerate(images):
        print(f"member {k}: {_slot_summary(a, img)}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(dumps_elements("family", a, images))
    return EXIT_OK


def cmd_skeleton(args) -> int:
    a = _owner(args.model)
    with open(args.family, encoding="utf-8") as fh:
        family = loads_family(fh.read(), a, args.family)
    try:
        skel = extract_skeleton(a, family)
    except NotMaximal as e:
        print(f"not maximal at cell {e.cell}")
        return EXIT_NO
    for (k, j), p in skel:
        print(f"P[{j};{k}]: " + "; ".join(f"{cid}: {_rows(m)}" for cid, m in p.mats.items()))
    return EXIT_OK


def cmd_decompose(args) -> int:
    inp = load_model(args.file)
    if not isinstance(inp, MultiplicityInput):
        raise ModelFileError(f"{args.file}: decompose expects kind 'multiplicity-input'")
    dec = decompose_by_multiplicity(inp)
    print(f"pushforward cells: {', '.join(dec.intermediate.partition.ids)}")
    print(f"intermediate: {len(dec.intermediate.blocks)} block(s); "
          f"final: {len(dec.final.blocks)} block(s)")
    print(f"permutation: {dec.permutation}")
    if args.intermediate:
        save_model(dec.intermediate, args.intermediate)
    if args.final:
        save_model(dec.final, args.final)
    if verbosity() >= 2 or not (args.intermediate or args.final):
        print(signature(dec.final).render())
    return EXIT_OK


def cmd_oracle(args) -> int:
    if args.what != "similar":
        raise ModelFileError(f"unknown oracle query {args.what!r}")
    ok = oracle_similar(load_model(args.file_a), load_model(args.file_b))
    print("similar" if ok else "not-similar")
    return EXIT_OK if ok else EXIT_NO


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nnormal", description="Similarity invariants of atomic n-normal operator models.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check the V1-V3 rules")
    s.add_argument("file")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("canonicalize", help="canonical strongly irreducible decomposition")
    s.add_argument("file")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_canonicalize)

    s = sub.add_parser("signature", help="per-cell (size, multiplicity) lists")
    s.add_argument("file")
    s.set_defaults(func=cmd_signature)

    s = sub.add_parser("k0", help="K0 invariant and identity class")
    s.add_argument("file")
    s.set_defaults(func=cmd_k0)

    s = sub.add_parser("similar", help="decide similarity of two models")
    s.add_argument("file_a")
    s.add_argument("file_b")
    s.add_argument("--witness", action="store_true")
    s.set_defaults(func=cmd_similar)

    s = sub.add_parser("intertwiners", help="solutions of A X = X B for single-block models")
    s.add_argument("file_a")
    s.add_argument("file_b")
    s.set_defaults(func=cmd_intertwiners)

    s = sub.add_parser("normalize-idempotent", help="conjugate an idempotent into the standard family")
    s.add_argument("model")
    s.add_argument("idempotent")
    s.add_argument("-o", "--output", help="write X and D as a two-member family file")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("standardize-family", help="conjugate a maximal abelian family onto the standard one")
    s.add_argument("model")
    s.add_argument("family")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_standardize)

    s = sub.add_parser("skeleton", help="minimal idempotents of a maximal abelian family")
    s.add_argument("model")
    s.add_argument("family")
    s.set_defaults(func=cmd_skeleton)

    s = sub.add_parser("decompose", help="split a multiplicity input over the pushforward measure")
    s.add_argument("file")
    s.add_argument("--intermediate")
    s.add_argument("--final")
    s.set_defaults(func=cmd_decompose)

    s = sub.add_parser("oracle", help="brute-force ground truth (debugging)")
    s.add_argument("what", choices=["similar"])
    s.add_argument("file_a")
    s.add_argument("file_b")
    s.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantBreach as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_BUG
    except (ModelFileError, ModelError, StructureError, PartitionError, NotInCommutant,
            NotCommuting, LinalgError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
