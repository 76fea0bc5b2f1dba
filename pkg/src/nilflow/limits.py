"""Hausdorff limits at infinity of proper polynomial dilations.

Pipeline for an abelian target (K^m, lattice B):

1. :func:`normal_form` turns ``rho_t(X)`` into a proper polynomial family of
   multi-cosets (a union of ``p_j(t) + L_j``) containing it for every t.
2. :func:`limit_family` rational-closes each ``L_j`` and the nearest coset
   ``cbar + V`` of the stacked translate curve ``sigma(t)``; the Hausdorff
   limits are the unions of ``pi(d_j + closure_j)`` for ``d`` in
   ``cbar + Vclosed``.
3. :func:`classify_convergence` decides strong convergence to the whole
   torus from the maximal ``L_j``.

Unipotent targets go through :func:`abelianize_dilation` first.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from . import qlinalg as ql
from .qlinalg import LatticeBasis, Subspace
from .scalar import NumberField, Scalar
from .unipotent import UnipotentGroupSpec, abelianization


class Convergence(str, enum.Enum):
    FULL = "ConvergesStronglyToFull"
    NOT_FULL = "NotFull"

    def __str__(self) -> str:
        return self.value


class ContractError(RuntimeError):
    pass


# --- polynomial data ---------------------------------------------------------


@dataclass(frozen=True)
class PolyVec:
    """p(t) = sum_i t^i coeffs[i], coefficients in K^m."""

    coeffs: tuple  # tuple of vectors, degree 0..D

    @classmethod
    def zero(cls, field: NumberField, m: int) -> "PolyVec":
        return cls((ql.zero_vec(field, m),))

    @property
    def dim(self) -> int:
        return len(self.coeffs[0])

    @property
    def degree(self) -> int:
        for i in range(len(self.coeffs) - 1, -1, -1):
            if not ql.is_zero(self.coeffs[i]):
                return i
        return 0

    def is_proper(self) -> bool:
        return ql.is_zero(self.coeffs[0])

    def __call__(self, t) -> tuple:
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = ql.vadd(ql.vscale(t, acc), c)
        return acc

    def __sub__(self, other: "PolyVec") -> "PolyVec":
        n = max(len(self.coeffs), len(other.coeffs))
        field = self.coeffs[0][0].field
        z = ql.zero_vec(field, self.dim)
        a = self.coeffs + (z,) * (n - len(self.coeffs))
        b = other.coeffs + (z,) * (n - len(other.coeffs))
        return PolyVec(tuple(ql.vsub(x, y) for x, y in zip(a, b)))

    def reduce(self, L: Subspace) -> "PolyVec":
        return PolyVec(tuple(L.reduce(c) for c in self.coeffs))

    def to_json(self) -> list:
        return [[x.to_json() for x in c] for c in self.coeffs]

    def __str__(self) -> str:
        terms = []
        for i, c in enumerate(self.coeffs):
            if ql.is_zero(c):
                continue
            v = "(" + ", ".join(str(x) for x in c) + ")"
            terms.append(v if i == 0 else (f"t*{v}" if i == 1 else f"t^{i}*{v}"))
        return " + ".join(terms) if terms else "0"


@dataclass(frozen=True)
class DilationFamily:
    """rho_t(x) = sum_{i>=1} t^i A_i x; ``matrices[i-1]`` is A_i (m x k)."""

    matrices: tuple

    def __post_init__(self):
        if not self.matrices:
            raise ValueError("a dilation family needs at least one matrix")
        m, k = len(self.matrices[0]), len(self.matrices[0][0])
        for A in self.matrices:
            if len(A) != m or any(len(r) != k for r in A):
                raise ql.DimensionMismatchError("dilation matrices have inconsistent shapes")

    @classmethod
    def from_degrees(cls, by_degree: dict[int, Sequence], field: NumberField) -> "DilationFamily":
        """Build from {degree: matrix}; a nonzero degree-0 term is rejected."""
        if not by_degree:
            raise ValueError("empty dilation")
        d = max(by_degree)
        some = next(iter(by_degree.values()))
        m, k = len(some), len(some[0])
        zero = tuple((field.zero(),) * k for _ in range(m))
        if 0 in by_degree and any(field(x) for row in by_degree[0] for x in row):
            raise ValueError("dilation is not proper (nonzero constant term); use raw mode")
        mats = []
        for i in range(1, d + 1):
            A = by_degree.get(i)
            mats.append(zero if A is None else tuple(tuple(field(x) for x in row) for row in A))
        return cls(tuple(mats))

    @property
    def m(self) -> int:
        return len(self.matrices[0])

    @property
    def k(self) -> int:
        return len(self.matrices[0][0])

    @property
    def degree(self) -> int:
        return len(self.matrices)

    @property
    def field(self) -> NumberField:
        return self.matrices[0][0][0].field

    def apply(self, t, x: Sequence) -> tuple:
        return self.image_poly(x)(t)

    def image_poly(self, x: Sequence) -> PolyVec:
        x = tuple(self.field(v) for v in x)
        coeffs = [ql.zero_vec(self.field, self.m)] + [ql.matvec(A, x) for A in self.matrices]
        return PolyVec(tuple(coeffs))

    def to_json(self) -> dict:
        return {str(i + 1): [[x.to_json() for x in row] for row in A] for i, A in enumerate(self.matrices)}


@dataclass(frozen=True)
class FinitePoints:
    points: tuple

    def __post_init__(self):
        if not self.points:
            raise ValueError("empty point set")


@dataclass(frozen=True)
class Polytope:
    """Convex hull of ``vertices``."""

    vertices: tuple

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("polytope without vertices")
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("polytope vertices must be distinct")


Piece = Union[FinitePoints, Polytope]


@dataclass(frozen=True)
class InputSet:
    pieces: tuple

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("empty input set")

    @property
    def k(self) -> int:
        p = self.pieces[0]
        return len(p.points[0] if isinstance(p, FinitePoints) else p.vertices[0])


@dataclass(frozen=True)
class PolyCoset:
    p: PolyVec
    L: Subspace

    def __str__(self) -> str:
        return f"{self.p} + {self.L}"


@dataclass(frozen=True)
class MultiCosetFamily:
    cosets: tuple  # of PolyCoset

    @property
    def n(self) -> int:
        return len(self.cosets)

    @property
    def dim(self) -> int:
        return self.cosets[0].L.ambient_dim

    @property
    def field(self) -> NumberField:
        return self.cosets[0].L.field

    def contains_point(self, t, y: Sequence) -> bool:
        """Exact membership of y in the union at time t."""
        y = tuple(y)
        return any(ql.coset_reduce(ql.vsub(y, c.p(t)), c.L).translate == ql.zero_vec(self.field, self.dim)
                   for c in self.cosets)


@dataclass(frozen=True)
class LimitFamily:
    """All sets pi(union_j d_j + closures[j]) with d in cbar + Vclosed."""

    lattice: LatticeBasis
    closures: tuple  # of Subspace
    cbar: tuple
    V: Subspace
    Vclosed: Subspace
    n: int

    @property
    def dim(self) -> int:
        return self.lattice.dim


# --- operations --------------------------------------------------------------


def _polytope_coset(dil: DilationFamily, vertices: Sequence) -> PolyCoset:
    field = dil.field
    verts = [tuple(field(x) for x in v) for v in vertices]
    v0 = verts[0]
    diffs = [ql.matvec(A, ql.vsub(v, v0)) for v in verts[1:] for A in dil.matrices]
    L = ql.rref(diffs, dim=dil.m, field=field)
    return PolyCoset(dil.image_poly(v0).reduce(L), L)


def normal_form(dil: DilationFamily, X: InputSet) -> MultiCosetFamily:
    """Proper multi-coset family containing rho_t(X) for every t.

    Each point of a finite piece is its own coset with L = {0}; a polytope
    becomes one coset through its first vertex, directed by the span of all
    A_i (v - w). The result is passed through :func:`compress`.
    """
    if not X.pieces:
        raise ValueError("empty input set")
    if X.k != dil.k:
        raise ql.DimensionMismatchError(f"input set lives in K^{X.k}, dilation expects K^{dil.k}")
    field = dil.field
    zero = ql.zero_space(field, dil.m)
    cosets = []
    for piece in X.pieces:
        if isinstance(piece, FinitePoints):
            for x in piece.points:
                cosets.append(PolyCoset(dil.image_poly(x), zero))
        else:
            cosets.append(_polytope_coset(dil, piece.vertices))
    return compress(MultiCosetFamily(tuple(cosets)))


def _absorbed(cj: PolyCoset, ck: PolyCoset) -> bool:
    if not cj.L.issubspace(ck.L):
        return False
    return all(ck.L.contains(c) for c in (cj.p - ck.p).coeffs)


def compress(M: MultiCosetFamily) -> MultiCosetFamily:
    """Drop cosets contained in another coset for every t.

    Coset j goes when some surviving k != j has L_j in L_k and every
    coefficient of p_j - p_k in L_k. Scan order is input order.
    """
    alive = list(range(M.n))
    for j in range(M.n):
        for k in alive:
            if k != j and _absorbed(M.cosets[j], M.cosets[k]):
                alive.remove(j)
                break
    return MultiCosetFamily(tuple(M.cosets[j] for j in alive))


def slmax(M: MultiCosetFamily) -> list[Subspace]:
    """Inclusion-maximal direction spaces, deduplicated, in first-seen order."""
    Ls: list[Subspace] = []
    for c in M.cosets:
        if c.L not in Ls:
            Ls.append(c.L)
    return [L for L in Ls if not any(L != W and L.issubspace(W) for W in Ls)]


def stacked_curve(M: MultiCosetFamily) -> PolyVec:
    """sigma(t) = (p_1(t), ..., p_n(t)) in K^{m n}."""
    D = max(len(c.p.coeffs) for c in M.cosets)
    field, m = M.field, M.dim
    z = ql.zero_vec(field, m)
    coeffs = []
    for i in range(D):
        v: tuple = ()
        for c in M.cosets:
            v += c.p.coeffs[i] if i < len(c.p.coeffs) else z
        coeffs.append(v)
    return PolyVec(tuple(coeffs))


def curve_coset(M: MultiCosetFamily) -> tuple[tuple, Subspace]:
    """Nearest coset cbar + V of the stacked translate curve at infinity.

    For a polynomial curve sigma(t) = sum t^i c_i, a linear functional
    composed with sigma is bounded as t -> oo iff it is constant iff it
    kills every c_i with i >= 1. So V = span{c_i : i >= 1} and cbar = c_0.
    """
    sigma = stacked_curve(M)
    return poly_curve_coset(sigma)


def poly_curve_coset(sigma: PolyVec) -> tuple[tuple, Subspace]:
    field = sigma.coeffs[0][0].field
    V = ql.rref(sigma.coeffs[1:], dim=sigma.dim, field=field)
    return V.reduce(sigma.coeffs[0]), V


def limit_family(M: MultiCosetFamily, B: LatticeBasis) -> LimitFamily:
    if M.dim != B.dim:
        raise ql.DimensionMismatchError("family and lattice dimensions differ")
    closures = tuple(ql.rational_closure(c.L, B) for c in M.cosets)
    cbar, V = curve_coset(M)
    Vclosed = ql.rational_closure(V, ql.block_diagonal(B, M.n))
    return LimitFamily(B, closures, Vclosed.reduce(cbar), V, Vclosed, M.n)


def classify_convergence(M: MultiCosetFamily, B: LatticeBasis) -> Convergence:
    for L in slmax(M):
        if ql.rational_closure(L, B).is_full():
            return Convergence.FULL
    return Convergence.NOT_FULL


@dataclass(frozen=True)
class BodyLimits:
    """Limits {pi(d + body) : d in cbar + Vclosed} of a translated body a(t) + C."""

    lattice: LatticeBasis
    translate: PolyVec
    body: Polytope
    cbar: tuple
    V: Subspace
    Vclosed: Subspace


def translated_body_limits(a: PolyVec, C: Piece, B: LatticeBasis) -> BodyLimits:
    if isinstance(C, FinitePoints):
        C = Polytope(C.points) if len(C.points) == 1 else C
    if a.dim != B.dim:
        raise ql.DimensionMismatchError("translate and lattice dimensions differ")
    cbar, V = poly_curve_coset(a)
    Vclosed = ql.rational_closure(V, B)
    return BodyLimits(B, a, C, Vclosed.reduce(cbar), V, Vclosed)


def classify_body(limits: BodyLimits) -> Convergence:
    """A bounded body has only zero-dimensional nearest cosets."""
    return Convergence.FULL if limits.lattice.dim == 0 else Convergence.NOT_FULL


def abelianize_dilation(dil: DilationFamily, spec: UnipotentGroupSpec) -> DilationFamily:
    """Push a dilation of the Lie algebra down to the abelianization."""
    if dil.m != spec.dim:
        raise ql.DimensionMismatchError(f"dilation has {dil.m} rows, algebra has dimension {spec.dim}")
    ab = abelianization(spec)
    if ab.m_ab == 0:
        raise ValueError("trivial abelianization")
    return DilationFamily(tuple(ql.matmul(ab.projection, A) for A in dil.matrices))


def nonconvergence_index(family, B: LatticeBasis, N_max: int, *, schedule=None, cfg=None,
                         margin: float = 0.1) -> int | None:
    """Smallest 2 <= N <= N_max for which every scheduled limit under N*Gamma is proper.

    ``family`` is a :class:`MultiCosetFamily` or :class:`BodyLimits`. N is
    certified when the sampled family stays at Hausdorff distance >= margin
    from the whole torus R^m / N Gamma at every scheduled t.
    """
    from . import numeric

    if isinstance(family, MultiCosetFamily) and classify_convergence(family, B) is Convergence.FULL:
        raise ContractError("family converges strongly to the whole torus; no finite-index witness exists")
    for N in range(2, N_max + 1):
        dists = numeric.fullspace_distances(family, B.scaled(N), schedule=schedule, cfg=cfg)
        if min(dists) >= margin:
            return N
    return None
