"""Unipotent matrix groups over K.

Group elements are upper unitriangular n x n matrices, Lie algebra elements
are strictly upper triangular ones. Because both are nilpotent of order n,
exp and log are finite sums and stay exact.

Algebra elements are usually handled through their coordinates with
respect to ``UnipotentGroupSpec.algebra_basis``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from . import qlinalg as ql
from .scalar import QQ, NumberField, Scalar


class SpecMismatchError(ValueError):
    pass


class UnsupportedLatticeError(ValueError):
    pass


Mat = tuple  # n x n, rows of Scalars


def _mat(field: NumberField, rows) -> Mat:
    return tuple(tuple(field(x) for x in r) for r in rows)


def mat_add(A: Mat, B: Mat) -> Mat:
    return tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_sub(A: Mat, B: Mat) -> Mat:
    return tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_scale(c, A: Mat) -> Mat:
    return tuple(tuple(c * a for a in r) for r in A)


def mat_mul(A: Mat, B: Mat) -> Mat:
    n = len(A)
    zero = A[0][0] * 0
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = zero
            for k in range(n):
                a = A[i][k]
                if a:
                    b = B[k][j]
                    if b:
                        acc = acc + a * b
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def mat_eye(field: NumberField, n: int) -> Mat:
    return ql.identity(field, n)


def mat_zero(field: NumberField, n: int) -> Mat:
    z = field.zero()
    return tuple((z,) * n for _ in range(n))


def bracket(A: Mat, B: Mat) -> Mat:
    return mat_sub(mat_mul(A, B), mat_mul(B, A))


def is_strictly_upper(A: Mat) -> bool:
    return all(not A[i][j] for i in range(len(A)) for j in range(i + 1))


def is_unipotent(g: Mat) -> bool:
    n = len(g)
    return all((g[i][j] == 1) if i == j else not g[i][j] for i in range(n) for j in range(i + 1))


def _field_of_mat(A: Mat) -> NumberField:
    return A[0][0].field


def exp(A: Mat) -> Mat:
    """sum_{k<n} A^k / k! for strictly upper triangular A."""
    if not is_strictly_upper(A):
        raise ValueError("exp expects a strictly upper triangular matrix")
    n = len(A)
    field = _field_of_mat(A)
    out = mat_eye(field, n)
    term = out
    for k in range(1, n):
        term = mat_scale(Fraction(1, k), mat_mul(term, A))
        out = mat_add(out, term)
    return out


def log(g: Mat) -> Mat:
    """sum_{k<n} (-1)^{k+1} (g - I)^k / k for unipotent g."""
    if not is_unipotent(g):
        raise ValueError("log expects an upper unitriangular matrix")
    n = len(g)
    field = _field_of_mat(g)
    N = mat_sub(g, mat_eye(field, n))
    out = mat_zero(field, n)
    power = N
    for k in range(1, n):
        out = mat_add(out, mat_scale(Fraction((-1) ** (k + 1), k), power))
        power = mat_mul(power, N)
    return out


def group_inv(g: Mat) -> Mat:
    """Inverse through the finite Neumann series of the nilpotent part."""
    n = len(g)
    field = _field_of_mat(g)
    minus_N = mat_scale(-1, mat_sub(g, mat_eye(field, n)))
    out = mat_eye(field, n)
    power = out
    for _ in range(1, n):
        power = mat_mul(power, minus_N)
        out = mat_add(out, power)
    return out


def elementary(field: NumberField, n: int, i: int, j: int) -> Mat:
    z, one = field.zero(), field.one()
    return tuple(tuple(one if (r, c) == (i, j) else z for c in range(n)) for r in range(n))


@dataclass(frozen=True)
class UnipotentGroupSpec:
    n: int
    algebra_basis: tuple  # of Mat
    name: str | None = None
    field: NumberField = dc_field(default=QQ, compare=False)

    def __post_init__(self):
        basis = tuple(_mat(self.field, B) for B in self.algebra_basis)
        object.__setattr__(self, "algebra_basis", basis)
        for B in basis:
            if len(B) != self.n or any(len(r) != self.n for r in B):
                raise ValueError("algebra basis matrices must be n x n")
            if not is_strictly_upper(B):
                raise ValueError("algebra basis matrices must be strictly upper triangular")
        if ql.rref([self._flat(B) for B in basis], dim=self.n * self.n, field=self.field).rank != len(basis):
            raise ValueError("algebra basis is linearly dependent")
        for i, A in enumerate(basis):
            for B in basis[i + 1:]:
                self.coords(bracket(A, B))  # raises if not closed

    @staticmethod
    def _flat(A: Mat) -> tuple:
        return tuple(x for row in A for x in row)

    @property
    def dim(self) -> int:
        return len(self.algebra_basis)

    @cached_property
    def _solver(self):
        # columns = flattened basis; solve via RREF of the transposed system
        flat = [self._flat(B) for B in self.algebra_basis]
        rows = [tuple(f[k] for f in flat) for k in range(self.n * self.n)]
        return rows

    def coords(self, A: Mat) -> tuple:
        """Coordinates of an algebra element with respect to algebra_basis."""
        rows = self._solver
        target = self._flat(A)
        aug = [r + (t,) for r, t in zip(rows, target)]
        red, pivots = ql._echelon(aug, self.dim + 1)
        if self.dim in pivots:
            raise ValueError("matrix does not lie in the Lie algebra")
        out = [self.field.zero()] * self.dim
        for row, p in zip(red, pivots):
            out[p] = row[self.dim]
        return tuple(out)

    def matrix(self, coords: Sequence) -> Mat:
        out = mat_zero(self.field, self.n)
        for c, B in zip(coords, self.algebra_basis):
            c = self.field(c)
            if c:
                out = mat_add(out, mat_scale(c, B))
        return out

    def exp_coords(self, coords: Sequence) -> "GroupElement":
        return GroupElement(exp(self.matrix(coords)), self)

    def log_coords(self, g: "GroupElement | Mat") -> tuple:
        m = g.matrix if isinstance(g, GroupElement) else g
        return self.coords(log(m))

    def contains(self, g: Mat) -> bool:
        if not is_unipotent(g):
            return False
        try:
            self.coords(log(g))
        except ValueError:
            return False
        return True

    def is_heisenberg(self) -> bool:
        return self.name == "heisenberg3" or (self.name == "full_un:3")


def abelian_spec(m: int, field: NumberField = QQ) -> UnipotentGroupSpec:
    """(K^m, +) realized in the first row of (m+1) x (m+1) matrices."""
    basis = tuple(elementary(field, m + 1, 0, j) for j in range(1, m + 1))
    return UnipotentGroupSpec(m + 1, basis, f"abelian:{m}", field)


def full_un_spec(n: int, field: NumberField = QQ) -> UnipotentGroupSpec:
    """All of U_n; basis E_ij ordered by superdiagonal level, then row."""
    basis = tuple(elementary(field, n, i, i + k) for k in range(1, n) for i in range(n - k))
    return UnipotentGroupSpec(n, basis, f"full_un:{n}", field)


def heisenberg_spec(field: NumberField = QQ) -> UnipotentGroupSpec:
    """Heisenberg group; algebra coordinates (x, y, z) for x E01 + y E12 + z E02.

    The group element [a, b, c] is the matrix with a, b on the superdiagonal
    and c in the corner, so [a,b,c][d,e,f] = [a+d, b+e, ae+c+f].
    """
    basis = (elementary(field, 3, 0, 1), elementary(field, 3, 1, 2), elementary(field, 3, 0, 2))
    return UnipotentGroupSpec(3, basis, "heisenberg3", field)


def builtin_spec(name: str, field: NumberField = QQ) -> UnipotentGroupSpec:
    if name == "heisenberg3":
        return heisenberg_spec(field)
    kind, _, arg = name.partition(":")
    if kind == "abelian" and arg:
        return abelian_spec(int(arg), field)
    if kind == "full_un" and arg:
        return full_un_spec(int(arg), field)
    raise ValueError(f"unknown group spec {name!r}")


@dataclass(frozen=True)
class GroupElement:
    matrix: Mat
    spec: UnipotentGroupSpec | None = dc_field(default=None, compare=False)

    def __post_init__(self):
        if not is_unipotent(self.matrix):
            raise ValueError("group elements must be upper unitriangular")
        if self.spec is not None and not self.spec.contains(self.matrix):
            raise ValueError("element does not belong to the group")

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def inv(self) -> "GroupElement":
        return inv(self)

    @property
    def heis(self) -> tuple:
        """[a, b, c] coordinates of a 3 x 3 element."""
        m = self.matrix
        return (m[0][1], m[1][2], m[0][2])


def heis_element(a, b, c, spec: UnipotentGroupSpec | None = None) -> GroupElement:
    field = spec.field if spec is not None else _field_guess((a, b, c))
    one, z = field.one(), field.zero()
    M = ((one, field(a), field(c)), (z, one, field(b)), (z, z, one))
    return GroupElement(M, spec)


def _field_guess(values) -> NumberField:
    for v in values:
        if isinstance(v, Scalar):
            return v.field
    return QQ


def _same_spec(g: GroupElement, h: GroupElement) -> None:
    if g.spec is not None and h.spec is not None and g.spec != h.spec:
        raise SpecMismatchError("elements belong to different groups")
    if len(g.matrix) != len(h.matrix):
        raise SpecMismatchError("matrix sizes differ")


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    _same_spec(g, h)
    return GroupElement(mat_mul(g.matrix, h.matrix), g.spec or h.spec)


def inv(g: GroupElement) -> GroupElement:
    return GroupElement(group_inv(g.matrix), g.spec)


@dataclass(frozen=True)
class GroupLattice:
    """Generators asserted to generate a lattice; lattice-ness is not checked."""

    generators: tuple
    spec: UnipotentGroupSpec

    def __post_init__(self):
        gens = tuple(g if isinstance(g, GroupElement) else GroupElement(_mat(self.spec.field, g), self.spec)
                     for g in self.generators)
        for g in gens:
            if not self.spec.contains(g.matrix):
                raise ValueError("lattice generator outside the group")
        object.__setattr__(self, "generators", gens)


def integer_lattice(spec: UnipotentGroupSpec) -> GroupLattice:
    """exp of the integer span of the basis, for the builtin specs.

    For the Heisenberg group these are [1,0,0], [0,1,0], [0,0,1]; for
    abelian and full U_n the elementary unipotents I + E_ij.
    """
    field = spec.field
    gens = tuple(GroupElement(mat_add(mat_eye(field, spec.n), B), spec) for B in spec.algebra_basis)
    return GroupLattice(gens, spec)


def commutator_subalgebra(spec: UnipotentGroupSpec) -> ql.Subspace:
    """[g, g] in algebra coordinates."""
    vecs = []
    basis = spec.algebra_basis
    for i, A in enumerate(basis):
        for B in basis[i + 1:]:
            vecs.append(spec.coords(bracket(A, B)))
    return ql.rref(vecs, dim=spec.dim, field=spec.field)


@dataclass(frozen=True)
class Abelianization:
    m_ab: int
    projection: tuple  # m_ab x dim_G rows
    commutator: ql.Subspace
    kept: tuple[int, ...]  # algebra coordinates surviving the quotient

    def apply(self, v: Sequence) -> tuple:
        return ql.matvec(self.projection, tuple(v))


def abelianization(spec: UnipotentGroupSpec) -> Abelianization:
    """Quotient projection K^dim_G -> K^m_ab with kernel [g, g].

    A vector is reduced modulo the RREF basis of [g, g] and the non-pivot
    coordinates are kept.
    """
    C = commutator_subalgebra(spec)
    kept = tuple(c for c in range(spec.dim) if c not in C.pivots)
    cols = []
    for j in range(spec.dim):
        r = C.reduce(ql.unit_vec(spec.field, spec.dim, j))
        cols.append(tuple(r[c] for c in kept))
    proj = tuple(tuple(col[i] for col in cols) for i in range(len(kept)))
    return Abelianization(len(kept), proj, C, kept)


def project_lattice(gamma: GroupLattice, spec: UnipotentGroupSpec | None = None) -> ql.LatticeBasis:
    """HNF basis of Gamma_ab = pi_ab(Gamma) in abelianization coordinates."""
    spec = spec or gamma.spec
    ab = abelianization(spec)
    images = []
    for g in gamma.generators:
        v = ab.apply(spec.log_coords(g))
        if not all(x.is_rational() for x in v):
            raise UnsupportedLatticeError("projected lattice generator is irrational")
        images.append(tuple(x.to_fraction() for x in v))
    if ab.m_ab == 0:
        raise ql.DegenerateLatticeError("abelianization is trivial")
    return ql.hnf(images, field=spec.field)
