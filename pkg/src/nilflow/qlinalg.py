"""Exact linear algebra over K = Q(theta).

Vectors are tuples of :class:`~nilflow.scalar.Scalar`; matrices are tuples
of row tuples. Subspaces are stored by their reduced row-echelon basis, so
equal subspaces compare equal.

Rationality is always relative to a lattice basis ``B``: a subspace is
Gamma-rational when, after pulling back by ``B``, it has a basis of
rational vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Iterable, Sequence

from .scalar import QQ, NumberField, Scalar

Vector = tuple  # tuple[Scalar, ...]
Matrix = tuple  # tuple[Vector, ...] (rows)


class DimensionMismatchError(ValueError):
    pass


class DegenerateLatticeError(ValueError):
    """Generators do not span a full-rank lattice."""


# --- vector helpers ----------------------------------------------------------


def vec(field: NumberField, values: Iterable) -> Vector:
    return tuple(field(v) for v in values)


def zero_vec(field: NumberField, m: int) -> Vector:
    z = field.zero()
    return (z,) * m


def unit_vec(field: NumberField, m: int, i: int) -> Vector:
    return tuple(field.one() if j == i else field.zero() for j in range(m))


def vadd(u: Vector, v: Vector) -> Vector:
    return tuple(a + b for a, b in zip(u, v))


def vsub(u: Vector, v: Vector) -> Vector:
    return tuple(a - b for a, b in zip(u, v))


def vscale(c, v: Vector) -> Vector:
    return tuple(c * a for a in v)


def dot(u: Sequence, v: Sequence):
    acc = None
    for a, b in zip(u, v):
        acc = a * b if acc is None else acc + a * b
    return acc


def is_zero(v: Vector) -> bool:
    return not any(v)


def matvec(M: Matrix, v: Vector) -> Vector:
    return tuple(dot(row, v) for row in M)


def matmul(A: Matrix, B: Matrix) -> Matrix:
    cols = list(zip(*B))
    return tuple(tuple(dot(row, col) for col in cols) for row in A)


def transpose(M: Matrix) -> Matrix:
    return tuple(zip(*M))


def identity(field: NumberField, m: int) -> Matrix:
    return tuple(unit_vec(field, m, i) for i in range(m))


def _field_of(rows: Sequence[Sequence[Scalar]], field: NumberField | None) -> NumberField:
    for row in rows:
        for x in row:
            if isinstance(x, Scalar):
                return x.field
    return field if field is not None else QQ


# --- row reduction -----------------------------------------------------------


def _echelon(rows: Sequence[Sequence[Scalar]], ncols: int) -> tuple[list[list[Scalar]], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    work = [list(r) for r in rows if any(r)]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == len(work):
            break
        piv = next((i for i in range(r, len(work)) if work[i][c]), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        p = work[r][c]
        if p != 1:
            pinv = p.inv()
            work[r] = [x * pinv for x in work[r]]
        for i in range(len(work)):
            if i != r and work[i][c]:
                f = work[i][c]
                prow = work[r]
                work[i] = [a - f * b for a, b in zip(work[i], prow)]
        pivots.append(c)
        r += 1
    return work[:r], pivots


@dataclass(frozen=True)
class Subspace:
    field: NumberField
    ambient_dim: int
    basis: tuple  # RREF rows

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def pivots(self) -> tuple[int, ...]:
        return tuple(next(i for i, x in enumerate(row) if x) for row in self.basis)

    def is_full(self) -> bool:
        return self.rank == self.ambient_dim

    def is_zero(self) -> bool:
        return self.rank == 0

    def reduce(self, v: Vector) -> Vector:
        """Canonical representative of v modulo this subspace."""
        if len(v) != self.ambient_dim:
            raise DimensionMismatchError(f"vector of length {len(v)} in ambient dimension {self.ambient_dim}")
        v = list(v)
        for row, p in zip(self.basis, self.pivots):
            c = v[p]
            if c:
                v = [a - c * b for a, b in zip(v, row)]
        return tuple(v)

    def contains(self, v: Vector) -> bool:
        return is_zero(self.reduce(v))

    def __contains__(self, v) -> bool:
        return self.contains(tuple(v))

    def issubspace(self, other: "Subspace") -> bool:
        _check_dims(self, other)
        return all(other.contains(b) for b in self.basis)

    def __le__(self, other: "Subspace") -> bool:
        return self.issubspace(other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and self.basis == other.basis

    def __hash__(self) -> int:
        return hash((self.ambient_dim, self.basis))

    def to_json(self) -> list:
        return [[x.to_json() for x in row] for row in self.basis]

    def __str__(self) -> str:
        if not self.basis:
            return "{0}"
        if self.is_full():
            return f"K^{self.ambient_dim}"
        return "span{" + ", ".join("(" + ", ".join(str(x) for x in row) + ")" for row in self.basis) + "}"


def _check_dims(U: Subspace, W: Subspace) -> None:
    if U.ambient_dim != W.ambient_dim:
        raise DimensionMismatchError(f"ambient dimensions differ: {U.ambient_dim} vs {W.ambient_dim}")


def rref(rows: Sequence[Sequence], *, dim: int | None = None, field: NumberField | None = None) -> Subspace:
    """Row space of ``rows`` as a canonical :class:`Subspace`."""
    rows = [tuple(r) for r in rows]
    if dim is None:
        if not rows:
            raise ValueError("dim is required when rows is empty")
        dim = len(rows[0])
    if any(len(r) != dim for r in rows):
        raise DimensionMismatchError("rows of inconsistent length")
    field = _field_of(rows, field)
    rows = [tuple(field(x) for x in r) for r in rows]
    red, _ = _echelon(rows, dim)
    return Subspace(field, dim, tuple(tuple(r) for r in red))


def span(vectors: Sequence[Sequence], *, dim: int | None = None, field: NumberField | None = None) -> Subspace:
    return rref(vectors, dim=dim, field=field)


def zero_space(field: NumberField, m: int) -> Subspace:
    return Subspace(field, m, ())


def full_space(field: NumberField, m: int) -> Subspace:
    return Subspace(field, m, identity(field, m))


def kernel(matrix: Sequence[Sequence], *, ncols: int | None = None, field: NumberField | None = None) -> Subspace:
    """Right null space {x : matrix @ x = 0}."""
    rows = [tuple(r) for r in matrix]
    if ncols is None:
        if not rows:
            raise ValueError("ncols is required for an empty matrix")
        ncols = len(rows[0])
    field = _field_of(rows, field)
    rows = [tuple(field(x) for x in r) for r in rows]
    red, pivots = _echelon(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    one, zero = field.one(), field.zero()
    basis = []
    for f in free:
        v = [zero] * ncols
        v[f] = one
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(tuple(v))
    return rref(basis, dim=ncols, field=field)


def annihilator(U: Subspace) -> Subspace:
    """Covectors vanishing on U, as a subspace of the dual K^m."""
    return kernel(U.basis, ncols=U.ambient_dim, field=U.field)


def subspace_sum(U: Subspace, W: Subspace) -> Subspace:
    _check_dims(U, W)
    return rref(U.basis + W.basis, dim=U.ambient_dim, field=U.field)


def intersect(U: Subspace, W: Subspace) -> Subspace:
    _check_dims(U, W)
    ann = annihilator(U).basis + annihilator(W).basis
    return kernel(ann, ncols=U.ambient_dim, field=U.field)


def contains(U: Subspace, v: Vector) -> bool:
    return U.contains(tuple(v))


def solve(A: Matrix, b: Vector) -> Vector:
    """Unique solution of A x = b for square invertible A."""
    m = len(A)
    aug = [tuple(row) + (bi,) for row, bi in zip(A, b)]
    red, pivots = _echelon(aug, m + 1)
    if pivots != list(range(m)):
        raise ValueError("singular system")
    return tuple(row[m] for row in red)


def inverse(A: Matrix) -> Matrix:
    m = len(A)
    field = _field_of(A, None)
    aug = [tuple(row) + unit_vec(field, m, i) for i, row in enumerate(A)]
    red, pivots = _echelon(aug, 2 * m)
    if pivots[:m] != list(range(m)) or len(red) < m:
        raise ValueError("matrix is singular")
    return tuple(tuple(row[m:]) for row in red)


# --- lattices ----------------------------------------------------------------


@dataclass(frozen=True)
class LatticeBasis:
    """Gamma = B Z^m; the columns of ``matrix`` are the generators."""

    matrix: Matrix  # rows of B

    def __post_init__(self):
        field = _field_of(self.matrix, QQ)
        object.__setattr__(self, "matrix", tuple(tuple(field(x) for x in row) for row in self.matrix))
        m = len(self.matrix)
        if any(len(r) != m for r in self.matrix):
            raise DimensionMismatchError("lattice basis must be square")
        if rref(self.matrix, dim=m, field=self.field).rank != m:
            raise DegenerateLatticeError("lattice basis is singular")

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], field: NumberField | None = None) -> "LatticeBasis":
        cols = [tuple(c) for c in columns]
        field = _field_of(cols, field)
        return cls(tuple(tuple(field(x) for x in row) for row in zip(*cols)))

    @classmethod
    def standard(cls, field: NumberField, m: int) -> "LatticeBasis":
        return cls(identity(field, m))

    @property
    def field(self) -> NumberField:
        return _field_of(self.matrix, None)

    @property
    def dim(self) -> int:
        return len(self.matrix)

    @property
    def columns(self) -> tuple:
        return transpose(self.matrix)

    @cached_property
    def inverse(self) -> Matrix:
        return inverse(self.matrix)

    def scaled(self, n: int) -> "LatticeBasis":
        return LatticeBasis(tuple(tuple(x * n for x in row) for row in self.matrix))

    def to_json(self) -> list:
        return [[x.to_json() for x in col] for col in self.columns]


def lattice_coords(B: LatticeBasis, v: Vector) -> Vector:
    """B^{-1} v."""
    if len(v) != B.dim:
        raise DimensionMismatchError("vector and lattice dimensions differ")
    return matvec(B.inverse, tuple(v))


def from_lattice_coords(B: LatticeBasis, z: Vector) -> Vector:
    return matvec(B.matrix, tuple(z))


def block_diagonal(B: LatticeBasis, n: int) -> LatticeBasis:
    """Basis of Gamma^n in (K^m)^n."""
    m = B.dim
    zero = B.field.zero()
    rows = []
    for blk in range(n):
        for row in B.matrix:
            full = [zero] * (m * n)
            full[blk * m:(blk + 1) * m] = row
            rows.append(tuple(full))
    return LatticeBasis(tuple(rows))


def _rational_expansion(vectors: Iterable[Vector]) -> list[tuple[Fraction, ...]]:
    out = []
    for v in vectors:
        d = v[0].field.degree if v else 1
        for k in range(d):
            r = tuple(x.rational_coords()[k] for x in v)
            if any(r):
                out.append(r)
    return out


def rational_closure(L: Subspace, B: LatticeBasis) -> Subspace:
    """Smallest Gamma-rational subspace containing L."""
    if L.ambient_dim != B.dim:
        raise DimensionMismatchError("subspace and lattice dimensions differ")
    m = L.ambient_dim
    field = L.field
    coords = [lattice_coords(B, b) for b in L.basis]
    R = _rational_expansion(coords)
    # rational covectors killing L, then everything they kill
    ann = kernel([[QQ(x) for x in r] for r in R], ncols=m, field=QQ)
    closed = kernel(ann.basis, ncols=m, field=QQ)
    back = [from_lattice_coords(B, tuple(field(x.to_fraction()) for x in row)) for row in closed.basis]
    return rref(back, dim=m, field=field)


def is_rational(L: Subspace, B: LatticeBasis) -> bool:
    return rational_closure(L, B) == L


# --- integer lattices --------------------------------------------------------


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def hnf_rows(M: Sequence[Sequence[int]]) -> list[list[int]]:
    """Row-style Hermite normal form of an integer matrix (nonzero rows only).

    Rows generate the same subgroup of Z^m; pivots are positive and the
    entries above each pivot lie in [0, pivot).
    """
    A = [list(map(int, r)) for r in M]
    if not A:
        return []
    ncols = len(A[0])
    r = 0
    for c in range(ncols):
        # gcd-eliminate column c below row r
        while True:
            nz = [i for i in range(r, len(A)) if A[i][c] != 0]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(A[i][c]))
            A[r], A[i0] = A[i0], A[r]
            done = True
            for i in range(r + 1, len(A)):
                if A[i][c]:
                    q = A[i][c] // A[r][c]
                    A[i] = [a - q * b for a, b in zip(A[i], A[r])]
                    if A[i][c]:
                        done = False
            if done:
                break
        if r < len(A) and A[r][c] != 0:
            if A[r][c] < 0:
                A[r] = [-a for a in A[r]]
            for i in range(r):
                q = A[i][c] // A[r][c]
                if q:
                    A[i] = [a - q * b for a, b in zip(A[i], A[r])]
            r += 1
            if r == len(A):
                break
    return [row for row in A[:r]]


def _common_denominator(vectors: Sequence[Sequence[Fraction]]) -> int:
    q = 1
    for v in vectors:
        for x in v:
            q = _lcm(q, Fraction(x).denominator)
    return q


def _as_fraction(x) -> Fraction:
    if isinstance(x, Scalar):
        return x.to_fraction()
    return Fraction(x)


def hnf(generators: Sequence[Sequence], field: NumberField | None = None) -> LatticeBasis:
    """Hermite basis of the subgroup generated by rational vectors.

    Denominators are cleared with their LCM, the integer HNF is taken and
    the result divided back. Raises :class:`DegenerateLatticeError` when the
    generators do not have full rank.
    """
    gens = [tuple(_as_fraction(x) for x in g) for g in generators]
    if not gens:
        raise DegenerateLatticeError("no generators")
    m = len(gens[0])
    if field is None:
        field = _field_of([g for g in generators], QQ)
    q = _common_denominator(gens)
    H = hnf_rows([[int(x * q) for x in g] for g in gens])
    if len(H) != m:
        raise DegenerateLatticeError(f"generators span rank {len(H)} < {m}")
    cols = [tuple(field(Fraction(x, q)) for x in row) for row in H]
    return LatticeBasis.from_columns(cols, field)


def integer_kernel(M: Sequence[Sequence[int]], ncols: int) -> list[list[int]]:
    """Z-basis of {x in Z^ncols : M x = 0} via unimodular column operations."""
    A = [list(map(int, r)) for r in M]
    U = [[int(i == j) for j in range(ncols)] for i in range(ncols)]  # columns track transforms
    cols = list(range(ncols))
    start = 0
    for row in A:
        # column-reduce this row over the still-active columns
        while True:
            active = [c for c in cols[start:] if row[c] != 0]
            if len(active) <= 1:
                break
            c0 = min(active, key=lambda c: abs(row[c]))
            for c in active:
                if c != c0:
                    q = row[c] // row[c0]
                    for R in A:
                        R[c] -= q * R[c0]
                    for R in U:
                        R[c] -= q * R[c0]
        active = [c for c in cols[start:] if row[c] != 0]
        if active:
            c0 = active[0]
            i = cols.index(c0)
            cols[start], cols[i] = cols[i], cols[start]
            start += 1
    return [[U[r][c] for r in range(ncols)] for c in cols[start:]]


def saturated_basis(L: Subspace, B: LatticeBasis) -> list[tuple[int, ...]]:
    """Z-basis, in lattice coordinates, of Gamma ∩ L for a Gamma-rational L."""
    if not is_rational(L, B):
        raise ValueError("subspace is not Gamma-rational")
    m = L.ambient_dim
    if L.rank == 0:
        return []
    rows = [tuple(x.to_fraction() for x in lattice_coords(B, b)) for b in L.basis]
    q = _common_denominator(rows)
    W = [[int(x * q) for x in r] for r in rows]
    ann = integer_kernel(W, m)
    if not ann:
        return [tuple(int(i == j) for j in range(m)) for i in range(m)]
    sat = integer_kernel(ann, m)
    return [tuple(v) for v in hnf_rows(sat)]


# --- cosets ------------------------------------------------------------------


@dataclass(frozen=True)
class Coset:
    translate: Vector
    direction: Subspace

    def __str__(self) -> str:
        return "(" + ", ".join(str(x) for x in self.translate) + ") + " + str(self.direction)


def coset_reduce(a: Vector, L: Subspace) -> Coset:
    return Coset(L.reduce(tuple(a)), L)
