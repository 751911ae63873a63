"""Brute-force ground truth.

Works on the assembled finite matrices only and never imports the canonical or
commutant modules, so it can referee them.  Slow on purpose.
"""

from __future__ import annotations

from .linalg import Matrix, rank
from .model import AnyModel, fiber
from .scalars import Scalar


def _union_fibers(a: AnyModel, b: AnyModel) -> tuple[list[Matrix], list[Matrix]]:
    """Fibers of both models over the union of their coordinates (0×0 where absent)."""
    coords: list[Scalar] = []
    for c in list(a.partition) + list(b.partition):
        if c.coordinate not in coords:
            coords.append(c.coordinate)
    fa, fb = [], []
    for z in coords:
        ca, cb = a.partition.at(z), b.partition.at(z)
        fa.append(fiber(a, ca) if ca is not None else Matrix.zeros(0))
        fb.append(fiber(b, cb) if cb is not None else Matrix.zeros(0))
    return fa, fb

def _block_diag(mats: list[Matrix]) -> Matrix:
    n = sum(m.rows for m in mats)
    out = [[Scalar() for _ in range(n)] for _ in range(n)]
    pos = 0
    for m in mats:
        for i in range(m.rows):
            for j in range(m.cols):
                out[pos + i][pos + j] = m[i, j]
        pos += m.rows
    return Matrix.from_rows(out) if n else Matrix.zeros(0)

def _shift(m: Matrix, z: Scalar) -> Matrix:
    rows = [[m[i, j] - (z if i == j else 0) for j in range(m.cols)] for i in range(m.rows)]
    return Matrix.from_rows(rows)

def _rank_profile(m: Matrix, z: Scalar) -> tuple[int, ...]:
    """``rank (M − zI)^k`` for ``k = 1, 2, …`` until it stops dropping.

    The sequence is constant from the first repeat on, so the truncated tuple
    still fixes the Jordan blocks at ``z``.
    """
    s = _shift(m, z)
    p = s
    out = [rank(p)]
    while True:
        p = p @ s
        r = rank(p)
        if r == out[-1]:
            return tuple(out)
        out.append(r)

def _diagonal_values(m: Matrix) -> list[Scalar]:
    seen: list[Scalar] = []
    for i in range(m.rows):
        if m[i, i] not in seen:
            seen.append(m[i, i])
    return seen

def oracle_similar(a: AnyModel, b: AnyModel) -> bool:
    """Similarity of the assembled operators via ranks of powers.

    Both assembled matrices are upper triangular, so their eigenvalues are the
    diagonal values and comparing rank sequences at each of them is exhaustive.
    """
    fa, fb = _union_fibers(a, b)
    ma, mb = _block_diag(fa), _block_diag(fb)
    if ma.rows != mb.rows:
        return False
    if ma.rows == 0:
        return True
    eigs = _diagonal_values(ma)
    if sorted(eigs, key=Scalar.sort_key) != sorted(_diagonal_values(mb), key=Scalar.sort_key):
        return False
    return all(_rank_profile(ma, z) == _rank_profile(mb, z) for z in eigs)

def _commutation_system(p: Matrix, q: Matrix) -> Matrix:
    """Coefficient matrix of ``P·X − X·Q = 0`` in the unknowns ``X[i][j]`` (row-major)."""
    n, m = p.rows, q.rows
    rows = []
    for i in range(n):
        for j in range(m):
            row = [Scalar() for _ in range(n * m)]
            for k in range(n):
                row[k * m + j] = row[k * m + j] + p[i, k]
            for k in range(m):
                row[i * m + k] = row[i * m + k] - q[k, j]
            rows.append(row)
    return Matrix.from_rows(rows)

def oracle_intertwiner_dim(a: AnyModel, b: AnyModel) -> dict[Scalar, int]:
    """Per coordinate of the union, ``dim {X : A(c)·X = X·B(c)}``."""
    fa, fb = _union_fibers(a, b)
    coords = []
    for c in list(a.partition) + list(b.partition):
        if c.coordinate not in coords:
            coords.append(c.coordinate)
    out = {}
    for z, p, q in zip(coords, fa, fb):
        unknowns = p.rows * q.rows
        out[z] = 0 if unknowns == 0 else unknowns - rank(_commutation_system(p, q))
    return out

def oracle_commutant_dim(a: AnyModel) -> dict[str, int]:
    out = {}
    for c in a.partition:
        f = fiber(a, c)
        out[c.id] = 0 if f.rows == 0 else f.rows ** 2 - rank(_commutation_system(f, f))
    return out
