"""Dense exact matrices over Q(i) and the handful of algorithms built on them.

Elimination is done on sparse rows internally (fibers and assembled operators
are block diagonal, so this keeps the brute-force oracle cheap), but every
public object is a plain dense :class:`Matrix`.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .scalars import ONE, ZERO, Rational, Scalar, as_scalar, format_scalar, to_rational


class LinalgError(ValueError):
    pass


class DimensionMismatch(LinalgError):
    pass


class SingularMatrixError(LinalgError):
    pass


class NotIdempotent(LinalgError):
    pass


class Matrix:
    """Immutable dense matrix of exact scalars. 0×0 is allowed."""

    __slots__ = ("rows", "cols", "_data", "_nz")

    def __init__(self, rows: int, cols: int, data: Sequence[Sequence] | None = None):
        if rows < 0 or cols < 0:
            raise DimensionMismatch("negative matrix dimension")
        if data is None:
            data = [[ZERO] * cols for _ in range(rows)]
        if len(data) != rows or any(len(r) != cols for r in data):
            raise DimensionMismatch(f"entries do not form a {rows}×{cols} grid")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "_data", tuple(tuple(as_scalar(x) for x in r) for r in data))
        object.__setattr__(self, "_nz", None)

    @classmethod
    def _wrap(cls, rows, cols, data) -> Matrix:
        m = object.__new__(cls)
        object.__setattr__(m, "rows", rows)
        object.__setattr__(m, "cols", cols)
        object.__setattr__(m, "_data", data)
        object.__setattr__(m, "_nz", None)
        return m

    def __setattr__(self, name, value):
        raise AttributeError("Matrix is immutable")

    # constructors ---------------------------------------------------------

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> Matrix:
        rows = list(rows)
        ncols = len(rows[0]) if rows else 0
        return cls(len(rows), ncols, rows)

    @classmethod
    def identity(cls, n: int) -> Matrix:
        return cls._wrap(n, n, tuple(
            tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n)))

    @classmethod
    def zeros(cls, rows: int, cols: int | None = None) -> Matrix:
        cols = rows if cols is None else cols
        row = tuple([ZERO] * cols)
        return cls._wrap(rows, cols, tuple(row for _ in range(rows)))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], nrows: int | None = None) -> Matrix:
        columns = list(columns)
        if nrows is None:
            nrows = len(columns[0]) if columns else 0
        return cls._wrap(nrows, len(columns), tuple(
            tuple(as_scalar(col[i]) for col in columns) for i in range(nrows)))

    @classmethod
    def from_sparse(cls, rows: int, cols: int, entries: dict) -> Matrix:
        data = [[ZERO] * cols for _ in range(rows)]
        for (i, j), v in entries.items():
            data[i][j] = as_scalar(v)
        return cls._wrap(rows, cols, tuple(tuple(r) for r in data))

    # access ---------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self._data[i][j]

    def row(self, i: int) -> tuple[Scalar, ...]:
        return self._data[i]

    def column(self, j: int) -> tuple[Scalar, ...]:
        return tuple(r[j] for r in self._data)

    def to_lists(self) -> list[list[Scalar]]:
        return [list(r) for r in self._data]

    def nonzero_rows(self) -> tuple[tuple[tuple[int, Scalar], ...], ...]:
        nz = self._nz
        if nz is None:
            nz = tuple(tuple((j, x) for j, x in enumerate(r) if x) for r in self._data)
            object.__setattr__(self, "_nz", nz)
        return nz

    def diagonal(self) -> tuple[Scalar, ...]:
        return tuple(self._data[i][i] for i in range(min(self.rows, self.cols)))

    def trace(self) -> Scalar:
        return sum(self.diagonal(), ZERO)

    def submatrix(self, row_idx: Sequence[int], col_idx: Sequence[int]) -> Matrix:
        return Matrix._wrap(len(row_idx), len(col_idx), tuple(
            tuple(self._data[i][j] for j in col_idx) for i in row_idx))

    def block(self, r0: int, c0: int, nrows: int, ncols: int) -> Matrix:
        return self.submatrix(range(r0, r0 + nrows), range(c0, c0 + ncols))

    def transpose(self) -> Matrix:
        return Matrix._wrap(self.cols, self.rows, tuple(
            tuple(self._data[i][j] for i in range(self.rows)) for j in range(self.cols)))

    # predicates -----------------------------------------------------------

    def is_zero(self) -> bool:
        return not any(any(r) for r in self._data)

    def is_upper_triangular(self) -> bool:
        return all(not self._data[i][j] for i in range(self.rows)
                   for j in range(min(i, self.cols)))

    def is_identity(self) -> bool:
        return self.is_square() and self == Matrix.identity(self.rows)

    def is_idempotent(self) -> bool:
        return self.is_square() and self @ self == self

    # arithmetic -----------------------------------------------------------

    def _check_same_shape(self, other):
        if self.shape != other.shape:
            raise DimensionMismatch(f"shapes {self.shape} and {other.shape} differ")

    def __add__(self, other: Matrix) -> Matrix:
        self._check_same_shape(other)
        return Matrix._wrap(self.rows, self.cols, tuple(
            tuple(a + b for a, b in zip(r, s)) for r, s in zip(self._data, other._data)))

    def __sub__(self, other: Matrix) -> Matrix:
        self._check_same_shape(other)
        return Matrix._wrap(self.rows, self.cols, tuple(
            tuple(a - b for a, b in zip(r, s)) for r, s in zip(self._data, other._data)))

    def __neg__(self) -> Matrix:
        return Matrix._wrap(self.rows, self.cols, tuple(tuple(-a for a in r) for r in self._data))

    def scale(self, z) -> Matrix:
        z = as_scalar(z)
        return Matrix._wrap(self.rows, self.cols, tuple(tuple(z * a for a in r) for r in self._data))

    def __matmul__(self, other: Matrix) -> Matrix:
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        bnz = other.nonzero_rows()
        out = []
        for arow in self.nonzero_rows():
            acc: dict[int, Scalar] = {}
            for k, a in arow:
                for j, b in bnz[k]:
                    p = a * b
                    acc[j] = acc[j] + p if j in acc else p
            row = [ZERO] * other.cols
            for j, v in acc.items():
                row[j] = v
            out.append(tuple(row))
        return Matrix._wrap(self.rows, other.cols, tuple(out))

    def shift(self, c) -> Matrix:
        """``self − c·I``."""
        c = as_scalar(c)
        if not self.is_square():
            raise DimensionMismatch("shift needs a square matrix")
        return Matrix._wrap(self.rows, self.cols, tuple(
            tuple(x - c if i == j else x for j, x in enumerate(r)) for i, r in enumerate(self._data)))

    def __pow__(self, k: int) -> Matrix:
        if not self.is_square() or k < 0:
            raise DimensionMismatch("power needs a square matrix and k ≥ 0")
        result = Matrix.identity(self.rows)
        base = self
        while k:
            if k & 1:
                result = result @ base
            k >>= 1
            if k:
                base = base @ base
        return result

    # comparison / display ------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.shape == other.shape and self._data == other._data

    def __hash__(self):
        return hash((self.rows, self.cols, self._data))

    def __repr__(self):
        body = "; ".join(", ".join(format_scalar(x) for x in r) for r in self._data)
        return f"Matrix({self.rows}x{self.cols}: [{body}])"

    def norm_bound(self) -> Rational:
        """Max absolute row sum with |z| bounded by |re|+|im| (exact, ≥ ‖·‖∞)."""
        if not self.rows:
            return to_rational(0)
        return max(sum((x.abs_bound() for x in r), to_rational(0)) for r in self._data)


def block_diag(blocks: Iterable[Matrix]) -> Matrix:
    blocks = list(blocks)
    n = sum(b.rows for b in blocks)
    m = sum(b.cols for b in blocks)
    data = []
    c0 = 0
    for b in blocks:
        left = [ZERO] * c0
        right = [ZERO] * (m - c0 - b.cols)
        for r in b._data:
            data.append(tuple(left + list(r) + right))
        c0 += b.cols
    return Matrix._wrap(n, m, tuple(data))


def permutation_matrix(perm: Sequence[int]) -> Matrix:
    """``P`` with ``(P @ M @ P.T)[i][j] == M[perm[i]][perm[j]]``."""
    n = len(perm)
    if sorted(perm) != list(range(n)):
        raise DimensionMismatch(f"{list(perm)} is not a permutation")
    return Matrix.from_sparse(n, n, {(i, p): ONE for i, p in enumerate(perm)})


# ---------------------------------------------------------------------------
# elimination


class _Echelon:
    """Incrementally maintained reduced row echelon form over sparse rows."""

    def __init__(self):
        self.pivots: dict[int, dict[int, Scalar]] = {}

    def reduce(self, row: dict[int, Scalar]) -> dict[int, Scalar]:
        row = dict(row)
        for p in [c for c in row if c in self.pivots]:
            f = row.get(p)
            if not f:
                continue
            for j, v in self.pivots[p].items():
                nv = row.get(j, ZERO) - f * v
                if nv:
                    row[j] = nv
                else:
                    row.pop(j, None)
        return row

    def add(self, row: dict[int, Scalar]) -> bool:
        """Insert ``row``; return True iff it was independent of the rows so far."""
        r = self.reduce(row)
        if not r:
            return False
        p = min(r)
        inv = r[p].inverse()
        r = {j: v * inv for j, v in r.items()}
        for q, prow in self.pivots.items():
            f = prow.get(p)
            if f:
                for j, v in r.items():
                    nv = prow.get(j, ZERO) - f * v
                    if nv:
                        prow[j] = nv
                    else:
                        prow.pop(j, None)
        self.pivots[p] = r
        return True

    def contains(self, row: dict[int, Scalar]) -> bool:
        return not self.reduce(row)

    @property
    def rank(self) -> int:
        return len(self.pivots)


def _sparse_rows(m: Matrix) -> list[dict[int, Scalar]]:
    return [dict(r) for r in m.nonzero_rows()]


def _sparse_vec(v: Sequence[Scalar]) -> dict[int, Scalar]:
    return {i: x for i, x in enumerate(v) if x}


def rank(m: Matrix) -> int:
    ech = _Echelon()
    for r in _sparse_rows(m):
        ech.add(r)
    return ech.rank


def _nullspace_from_rows(rows: Iterable[dict[int, Scalar]], ncols: int) -> list[tuple[Scalar, ...]]:
    ech = _Echelon()
    for r in rows:
        ech.add(r)
    free = [j for j in range(ncols) if j not in ech.pivots]
    basis = []
    for f in free:
        v = [ZERO] * ncols
        v[f] = ONE
        for p, prow in ech.pivots.items():
            x = prow.get(f)
            if x:
                v[p] = -x
        basis.append(tuple(v))
    return basis


def nullspace(m: Matrix) -> list[tuple[Scalar, ...]]:
    """Basis of ``{x : m x = 0}``; free variables set to 1 in ascending order."""
    return _nullspace_from_rows(_sparse_rows(m), m.cols)


def column_space(m: Matrix) -> list[tuple[Scalar, ...]]:
    """Pivot columns of ``m`` (a basis of its range), left to right."""
    ech = _Echelon()
    cols = []
    for j in range(m.cols):
        col = m.column(j)
        if ech.add(_sparse_vec(col)):
            cols.append(col)
    return cols


def inverse(m: Matrix) -> Matrix:
    if not m.is_square():
        raise DimensionMismatch("only square matrices are invertible")
    n = m.rows
    ech = _Echelon()
    for i, r in enumerate(m.nonzero_rows()):
        row = dict(r)
        row[n + i] = ONE
        ech.add(row)
    if any(p not in ech.pivots for p in range(n)):
        raise SingularMatrixError("matrix is singular")
    data = []
    for p in range(n):
        prow = ech.pivots[p]
        row = [ZERO] * n
        for j, v in prow.items():
            if j >= n:
                row[j - n] = v
        data.append(tuple(row))
    return Matrix._wrap(n, n, tuple(data))


def is_invertible(m: Matrix) -> bool:
    return m.is_square() and rank(m) == m.rows


def same_span(a: Sequence[Matrix], b: Sequence[Matrix]) -> bool:
    """Do two lists of equally shaped matrices span the same subspace?"""
    def flat(x: Matrix):
        return _sparse_vec([v for r in x._data for v in r])
    ea, eb = _Echelon(), _Echelon()
    for x in a:
        ea.add(flat(x))
    for x in b:
        eb.add(flat(x))
    return ea.rank == eb.rank and all(ea.contains(flat(x)) for x in b)


# ---------------------------------------------------------------------------
# Jordan structure


def _distinct(eigenvalues: Iterable) -> list[Scalar]:
    out: list[Scalar] = []
    for c in eigenvalues:
        c = as_scalar(c)
        if c not in out:
            out.append(c)
    return out


def _rank_sequence(n_mat: Matrix) -> list[int]:
    """``[rank(N^0), rank(N^1), ...]`` up to the first repeat."""
    ranks = [n_mat.rows]
    power = Matrix.identity(n_mat.rows)
    while True:
        power = power @ n_mat
        r = rank(power)
        if r == ranks[-1]:
            return ranks
        ranks.append(r)
        if r == 0:
            return ranks


def _sizes_from_ranks(ranks: list[int]) -> tuple[int, ...]:
    # at_least[k] = r_{k-1} - r_k = number of blocks of size ≥ k
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, len(ranks))] + [0]
    sizes: list[int] = []
    for k in range(len(at_least) - 1, 0, -1):
        exactly = at_least[k - 1] - at_least[k]
        sizes.extend([k] * exactly)
    return tuple(sizes)


def jordan_structure(m: Matrix, eigenvalues: Iterable) -> dict[Scalar, tuple[int, ...]]:
    """Jordan block sizes per eigenvalue, read off rank sequences of ``m − cI``.

    ``eigenvalues`` must be exhaustive; otherwise :class:`DimensionMismatch`.
    Values that are not eigenvalues are dropped from the result.
    """
    if not m.is_square():
        raise DimensionMismatch("Jordan structure needs a square matrix")
    out: dict[Scalar, tuple[int, ...]] = {}
    for c in _distinct(eigenvalues):
        sizes = _sizes_from_ranks(_rank_sequence(m.shift(c)))
        if sizes:
            out[c] = sizes
    total = sum(sum(s) for s in out.values())
    if total != m.rows:
        raise DimensionMismatch(
            f"Jordan blocks cover {total} of {m.rows} dimensions; eigenvalue list is incomplete")
    return out


def jordan_basis(m: Matrix, eigenvalues: Iterable) -> tuple[Matrix, list[tuple[Scalar, int]]]:
    """``P`` and the block list ``[(c, size), ...]`` with ``m @ P == P @ J``.

    J has the eigenvalues in the given order, blocks by decreasing size within
    each eigenvalue, and ones on the superdiagonal.
    """
    structure = jordan_structure(m, eigenvalues)
    n = m.rows
    columns: list[tuple[Scalar, ...]] = []
    blocks: list[tuple[Scalar, int]] = []
    for c, sizes in structure.items():
        nmat = m.shift(c)
        top = sizes[0]
        kernels: list[list[tuple[Scalar, ...]]] = [[]]
        power = Matrix.identity(n)
        for _ in range(top):
            power = power @ nmat
            kernels.append(nullspace(power))
        chains: list[tuple[tuple[Scalar, ...], int]] = []
        for k in range(top, 0, -1):
            need = sizes.count(k)
            if not need:
                continue
            ech = _Echelon()
            for v in kernels[k - 1]:
                ech.add(_sparse_vec(v))
            for v, length in chains:
                ech.add(_sparse_vec(_apply_power(nmat, v, length - k)))
            for u in kernels[k]:
                if need == 0:
                    break
                if ech.add(_sparse_vec(u)):
                    chains.append((u, k))
                    need -= 1
            if need:
                raise LinalgError("failed to complete Jordan chains")  # pragma: no cover
        for u, length in chains:
            vecs = [u]
            for _ in range(length - 1):
                vecs.append(_apply(nmat, vecs[-1]))
            columns.extend(reversed(vecs))
            blocks.append((c, length))
    return Matrix.from_columns(columns, n), blocks


def _apply(m: Matrix, v: Sequence[Scalar]) -> tuple[Scalar, ...]:
    out = []
    for r in m.nonzero_rows():
        acc = ZERO
        for j, x in r:
            if v[j]:
                acc = acc + x * v[j]
        out.append(acc)
    return tuple(out)


def _apply_power(m: Matrix, v, k: int):
    for _ in range(k):
        v = _apply(m, v)
    return v


def jordan_matrix(blocks: Sequence[tuple[Scalar, int]]) -> Matrix:
    mats = []
    for c, size in blocks:
        c = as_scalar(c)
        mats.append(Matrix.from_sparse(size, size, {
            **{(i, i): c for i in range(size) if c},
            **{(i, i + 1): ONE for i in range(size - 1)},
        }))
    return block_diag(mats)


def similarity_transform(m1: Matrix, m2: Matrix, eigenvalues: Iterable) -> Matrix | None:
    """An invertible ``S`` with ``S @ m1 @ S⁻¹ == m2``, or None when not similar.

    Any valid witness may be returned; it is always checked before returning.
    """
    if m1.shape != m2.shape or not m1.is_square():
        raise DimensionMismatch("similarity needs two square matrices of equal size")
    if m1 == m2:
        return Matrix.identity(m1.rows)
    eigs = _distinct(eigenvalues)
    if jordan_structure(m1, eigs) != jordan_structure(m2, eigs):
        return None
    p1, b1 = jordan_basis(m1, eigs)
    p2, b2 = jordan_basis(m2, eigs)
    assert b1 == b2
    s = p2 @ inverse(p1)
    if s @ m1 != m2 @ s:
        raise LinalgError("similarity witness failed verification")  # pragma: no cover
    return s


# ---------------------------------------------------------------------------
# linear matrix equations


def solve_intertwiner(m1: Matrix, m2: Matrix) -> list[Matrix]:
    """Basis of ``{X : m1 @ X == X @ m2}`` for square ``m1`` (p×p), ``m2`` (q×q)."""
    if not (m1.is_square() and m2.is_square()):
        raise DimensionMismatch("intertwiner equation needs square coefficients")
    p, q = m1.rows, m2.rows
    # unknown X[i][j] sits at index i*q + j
    a_nz = m1.nonzero_rows()
    b_cols: list[list[tuple[int, Scalar]]] = [[] for _ in range(q)]
    for k, r in enumerate(m2.nonzero_rows()):
        for j, x in r:
            b_cols[j].append((k, x))
    equations = []
    for i in range(p):
        for j in range(q):
            eq: dict[int, Scalar] = {}
            for k, x in a_nz[i]:
                idx = k * q + j
                eq[idx] = eq.get(idx, ZERO) + x
            for k, x in b_cols[j]:
                idx = i * q + k
                eq[idx] = eq.get(idx, ZERO) - x
            eq = {k: v for k, v in eq.items() if v}
            if eq:
                equations.append(eq)
    basis = _nullspace_from_rows(equations, p * q)
    return [Matrix._wrap(p, q, tuple(tuple(v[i * q:(i + 1) * q]) for i in range(p)))
            for v in basis]


def idempotent_normal_form(p: Matrix) -> tuple[Matrix, Matrix]:
    """``(S, D)`` with ``S @ p @ S⁻¹ == D = diag(1,…,1,0,…,0)``.

    ``S⁻¹`` has a basis of ran(p) followed by a basis of ker(p) as columns.
    """
    if not p.is_square():
        raise DimensionMismatch("idempotent must be square")
    if p @ p != p:
        raise NotIdempotent("P·P ≠ P")
    n = p.rows
    rng = column_space(p)
    ker = nullspace(p)
    t = Matrix.from_columns(rng + ker, n)
    s = inverse(t)
    r = len(rng)
    d = Matrix.from_sparse(n, n, {(i, i): ONE for i in range(r)})
    if s @ p != d @ s:
        raise LinalgError("idempotent normal form failed verification")  # pragma: no cover
    return s, d
