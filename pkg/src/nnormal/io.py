"""JSON model files, idempotent files and family files.

Scalars are ``["re", "im"]`` pairs of ``"p/q"`` strings and weights are
``"p/q"`` strings.  JSON floats are refused outright, as are unknown keys.
Idempotent and family files name their owner model by a SHA-256 digest of its
canonical serialization, so they cannot be applied to the wrong model.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

from .commutant import CommutantElement, NotInCommutant
from .linalg import Matrix
from .measure import Cell, Partition, PartitionError, StepFunction
from .model import AnyModel, MultiplicityInput, OperatorModel, StructureError, TriangularBlock
from .scalars import (ScalarParseError, format_rational, parse_rational, scalar_from_json,
                      scalar_to_json)


class ModelFileError(ValueError):
    """Malformed file; the message names the offending key path or line."""


def _no_floats(text: str):
    raise ModelFileError(f"floating-point literal {text} not allowed; use a 'p/q' string")


def _loads(text: str, source: str) -> Any:
    try:
        return json.loads(text, parse_float=_no_floats,
                          parse_constant=lambda c: _no_floats(c))
    except json.JSONDecodeError as e:
        raise ModelFileError(f"{source}: line {e.lineno} column {e.colno}: {e.msg}") from None


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _keys(obj: Any, path: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(obj, dict):
        raise ModelFileError(f"{path}: expected an object")
    unknown = set(obj) - required - optional
    if unknown:
        raise ModelFileError(f"{path}: unknown key(s) {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ModelFileError(f"{path}: missing key(s) {sorted(missing)}")
    return obj


def _int(obj: Any, path: str) -> int:
    if not isinstance(obj, int) or isinstance(obj, bool):
        raise ModelFileError(f"{path}: expected an integer")
    return obj


def _list(obj: Any, path: str) -> list:
    if not isinstance(obj, list):
        raise ModelFileError(f"{path}: expected a list")
    return obj


def _scalar(obj: Any, path: str):
    try:
        return scalar_from_json(obj)
    except ScalarParseError as e:
        raise ModelFileError(f"{path}: {e}") from None


def _step(obj: Any, path: str) -> StepFunction:
    if not isinstance(obj, dict):
        raise ModelFileError(f"{path}: expected a map cell-id → [re, im]")
    return StepFunction({cid: _scalar(v, f"{path}.{cid}") for cid, v in obj.items()})


# ---------------------------------------------------------------------------
# models


def model_from_json(obj: Any, source: str = "<model>") -> AnyModel:
    root = _keys(obj, source, {"partition", "blocks"}, {"kind"})
    kind = root.get("kind", "operator")
    if kind not in ("operator", "multiplicity-input"):
        raise ModelFileError(f"{source}.kind: expected 'operator' or 'multiplicity-input'")
    cells = []
    for k, c in enumerate(_list(root["partition"], f"{source}.partition")):
        path = f"{source}.partition[{k}]"
        c = _keys(c, path, {"id", "coordinate", "weight"})
        if not isinstance(c["id"], str):
            raise ModelFileError(f"{path}.id: expected a string")
        try:
            weight = parse_rational(c["weight"])
        except ScalarParseError as e:
            raise ModelFileError(f"{path}.weight: {e}") from None
        try:
            cells.append(Cell(c["id"], _scalar(c["coordinate"], f"{path}.coordinate"), weight))
        except PartitionError as e:
            raise ModelFileError(f"{path}: {e}") from None
    try:
        partition = Partition(tuple(cells))
    except PartitionError as e:
        raise ModelFileError(f"{source}.partition: {e}") from None

    blocks = []
    for k, b in enumerate(_list(root["blocks"], f"{source}.blocks")):
        path = f"{source}.blocks[{k}]"
        b = _keys(b, path, {"size", "multiplicity", "support"}, {"diagonal", "entries"})
        size = _int(b["size"], f"{path}.size")
        mult = _int(b["multiplicity"], f"{path}.multiplicity")
        support = _list(b["support"], f"{path}.support")
        if not all(isinstance(s, str) for s in support):
            raise ModelFileError(f"{path}.support: expected cell-id strings")
        diag_obj = b.get("diagonal", "coordinate")
        diagonal = None if diag_obj == "coordinate" else _step(diag_obj, f"{path}.diagonal")
        entries_obj = b.get("entries", {})
        if not isinstance(entries_obj, dict):
            raise ModelFileError(f"{path}.entries: expected a map 'i,j' → step function")
        entries = {}
        for key, f in entries_obj.items():
            parts = key.split(",")
            if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
                raise ModelFileError(f"{path}.entries: key {key!r} is not of the form 'i,j'")
            entries[(int(parts[0]), int(parts[1]))] = _step(f, f"{path}.entries.{key}")
        try:
            blocks.append((TriangularBlock(size, tuple(support), entries, diagonal), mult))
        except StructureError as e:
            raise ModelFileError(f"{path}: {e}") from None

    try:
        if kind == "multiplicity-input":
            if len(blocks) != 1 or blocks[0][1] != 1:
                raise ModelFileError(f"{source}.blocks: a multiplicity input has exactly one block "
                                     "of multiplicity 1")
            return MultiplicityInput(partition, blocks[0][0])
        return OperatorModel(partition, tuple(blocks))
    except StructureError as e:
        raise ModelFileError(f"{source}: {e}") from None


def model_to_json(a: AnyModel) -> dict:
    kind = "multiplicity-input" if isinstance(a, MultiplicityInput) else "operator"
    pairs = [(a.block, 1)] if isinstance(a, MultiplicityInput) else list(a.blocks)
    blocks = []
    for blk, m in pairs:
        b: dict[str, Any] = {"size": blk.size, "multiplicity": m, "support": list(blk.support)}
        if blk.diagonal is None:
            b["diagonal"] = "coordinate"
        else:
            b["diagonal"] = {cid: scalar_to_json(blk.diagonal(cid)) for cid in blk.support}
        b["entries"] = {f"{i},{j}": {cid: scalar_to_json(f(cid)) for cid in blk.support}
                        for (i, j), f in blk.entries}
        blocks.append(b)
    return {
        "kind": kind,
        "partition": [{"id": c.id, "coordinate": scalar_to_json(c.coordinate),
                       "weight": format_rational(c.weight)} for c in a.partition],
        "blocks": blocks,
    }


def dumps_model(a: AnyModel) -> str:
    return _dumps(model_to_json(a))


def loads_model(text: str, source: str = "<model>") -> AnyModel:
    return model_from_json(_loads(text, source), source)


def load_model(path: str) -> AnyModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read(), path)


def save_model(a: AnyModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(a))


def model_digest(a: AnyModel) -> str:
    canon = json.dumps(model_to_json(a), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# per-cell matrices, idempotents and families


def matrix_to_json(m: Matrix) -> list:
    return [[scalar_to_json(x) for x in m.row(i)] for i in range(m.rows)]


def matrix_from_json(obj: Any, path: str, dim: int) -> Matrix:
    rows = _list(obj, path)
    if len(rows) != dim:
        raise ModelFileError(f"{path}: expected {dim} rows, got {len(rows)}")
    out = []
    for i, r in enumerate(rows):
        r = _list(r, f"{path}[{i}]")
        if len(r) != dim:
            raise ModelFileError(f"{path}[{i}]: expected {dim} entries, got {len(r)}")
        out.append([_scalar(x, f"{path}[{i}][{j}]") for j, x in enumerate(r)])
    return Matrix.from_rows(out) if dim else Matrix.zeros(0)


def _cell_mats(obj: Any, path: str, owner: OperatorModel) -> dict[str, Matrix]:
    if not isinstance(obj, dict):
        raise ModelFileError(f"{path}: expected a map cell-id → matrix")
    unknown = set(obj) - set(owner.partition.ids)
    if unknown:
        raise ModelFileError(f"{path}: unknown cell(s) {sorted(unknown)}")
    out = {}
    for c in owner.partition:
        d = owner.fiber_dim(c.id)
        out[c.id] = matrix_from_json(obj[c.id], f"{path}.{c.id}", d) if c.id in obj else None
        if out[c.id] is None:
            if d:
                raise ModelFileError(f"{path}: missing cell {c.id!r}")
            out[c.id] = Matrix.zeros(0)
    return out


def _check_owner(root: dict, owner: OperatorModel, source: str):
    if root["owner"] != model_digest(owner):
        raise ModelFileError(f"{source}.owner: digest does not match the given model")


def elements_to_json(kind: str, owner: OperatorModel, elements) -> dict:
    body = [{cid: matrix_to_json(m) for cid, m in e.mats.items()} for e in elements]
    out: dict[str, Any] = {"kind": kind, "owner": model_digest(owner)}
    if kind == "idempotent":
        out["cells"] = body[0]
    else:
        out["members"] = body
    return out


def loads_idempotent(text: str, owner: OperatorModel, source: str = "<idempotent>"):
    root = _keys(_loads(text, source), source, {"kind", "owner", "cells"})
    if root["kind"] != "idempotent":
        raise ModelFileError(f"{source}.kind: expected 'idempotent'")
    _check_owner(root, owner, source)
    try:
        return CommutantElement(owner, _cell_mats(root["cells"], f"{source}.cells", owner))
    except NotInCommutant as e:
        raise ModelFileError(f"{source}.cells: {e}") from None


def loads_family(text: str, owner: OperatorModel, source: str = "<family>"):
    root = _keys(_loads(text, source), source, {"kind", "owner", "members"})
    if root["kind"] != "family":
        raise ModelFileError(f"{source}.kind: expected 'family'")
    _check_owner(root, owner, source)
    out = []
    for k, mem in enumerate(_list(root["members"], f"{source}.members")):
        try:
            out.append(CommutantElement(owner, _cell_mats(mem, f"{source}.members[{k}]", owner)))
        except NotInCommutant as e:
            raise ModelFileError(f"{source}.members[{k}]: {e}") from None
    return out


def dumps_elements(kind: str, owner: OperatorModel, elements) -> str:
    return _dumps(elements_to_json(kind, owner, elements))
