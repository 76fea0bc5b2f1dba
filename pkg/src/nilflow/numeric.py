"""Floating-point verification of predicted Hausdorff limits.

Exact data is embedded once (dyadic rational approximations), images are
reduced modulo the lattice exactly before rounding, and clouds are compared
with KD-tree nearest-neighbour queries. Two quotients are supported: tori
R^m / Gamma and the integer Heisenberg nilmanifold.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from . import qlinalg as ql
from .qlinalg import LatticeBasis, Subspace
from .scalar import Scalar

_DYADIC = 2 ** 100
_KRONECKER = tuple(math.sqrt(p) % 1.0 for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("NILFLOW_THREADS", "1")))
    except ValueError:
        return 1


# --- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingConfig:
    precision: float = 2.0 ** -53
    sample_density: float = 200.0
    offset_window: int = 1
    max_samples: int = 1_000_000
    min_samples: int = 0
    completeness_grid: int = 8
    completeness_cap: int = 4096
    completeness_t_samples: int = 20_000
    full_grid_cap: int = 50_000
    seed: int = 0

    def __post_init__(self):
        if not self.precision > 0:
            raise ValueError("precision must be positive")
        if self.sample_density < 1:
            raise ValueError("sample_density must be >= 1")
        if self.offset_window < 1:
            raise ValueError("offset_window must be >= 1")
        if self.max_samples < 1:
            raise ValueError("max_samples must be >= 1")

    def with_(self, **kw) -> "EmbeddingConfig":
        return EmbeddingConfig(**{**self.__dict__, **kw})


@dataclass(frozen=True)
class Schedule:
    t_values: tuple

    def __post_init__(self):
        ts = tuple(float(t) for t in self.t_values)
        if not ts:
            raise ValueError("empty schedule")
        if any(t <= 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("schedule must be positive and strictly increasing")
        object.__setattr__(self, "t_values", ts)

    @classmethod
    def geometric(cls, start: float = 10.0, stop: float = 1e4, per_decade: int = 2) -> "Schedule":
        lo, hi = math.log10(start), math.log10(stop)
        n = int(round((hi - lo) * per_decade))
        return cls(tuple(10 ** (lo + i / per_decade) for i in range(n + 1)))

    @property
    def tail(self) -> tuple:
        """Second half of the schedule (the middle value included)."""
        return self.t_values[len(self.t_values) // 2:]

    def windows(self) -> list[tuple[float, float]]:
        """Search window (previous t, t] below each scheduled value."""
        ts = self.t_values
        ratio = ts[1] / ts[0] if len(ts) > 1 else 2.0
        prev = (ts[0] / ratio,) + ts[:-1]
        return list(zip(prev, ts))


@dataclass(frozen=True)
class TorusCloud:
    points: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.size and (pts.min() < 0 or pts.max() >= 1):
            raise ValueError("cloud coordinates must lie in [0, 1)")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __or__(self, other: "TorusCloud") -> "TorusCloud":
        return TorusCloud(np.vstack([self.points, other.points]))


# --- embedding ---------------------------------------------------------------


def _dyadic(x) -> Fraction:
    """Close dyadic rational approximation of a scalar."""
    if isinstance(x, Scalar):
        if x.is_rational():
            return x.to_fraction()
        x = x.to_rational_approx(Fraction(1, _DYADIC * 4))
    x = Fraction(x)
    if (x.denominator & (x.denominator - 1)) == 0:
        return x
    return Fraction(round(x * _DYADIC), _DYADIC)


def _frac(x: np.ndarray) -> np.ndarray:
    y = x - np.floor(x)
    y[y >= 1.0] = 0.0
    return y


def _frac_exact(v: Sequence[Fraction]) -> np.ndarray:
    return np.array([float(x - math.floor(x)) for x in v]) % 1.0


@dataclass(frozen=True)
class EmbeddedLattice:
    """Float image of a lattice basis with its search window."""

    B: np.ndarray
    Binv: np.ndarray
    window: int
    exact: LatticeBasis | None = None

    @classmethod
    def of(cls, B, cfg: EmbeddingConfig | None = None) -> "EmbeddedLattice":
        if isinstance(B, EmbeddedLattice):
            return B
        cfg = cfg or EmbeddingConfig()
        exact = B if isinstance(B, LatticeBasis) else None
        M = np.array([[float(x) for x in row] for row in B.matrix] if exact else B, dtype=float)
        M = np.atleast_2d(M)
        if M.shape[0] != M.shape[1]:
            raise ql.DimensionMismatchError("lattice basis must be square")
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > 1e12:
            raise ql.DegenerateLatticeError("embedded lattice basis is singular")
        w = max(cfg.offset_window, 2 if cond > 10 else 1)
        return cls(M, np.linalg.inv(M), w, exact)

    @property
    def m(self) -> int:
        return self.B.shape[0]

    @property
    def diagonal(self) -> bool:
        return bool(np.all(self.B == np.diag(np.diag(self.B))))

    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.B, axis=0)


def reduce_mod_lattice(v, B, cfg: EmbeddingConfig | None = None) -> np.ndarray:
    """frac(B^{-1} v) for one vector or an (N, m) array."""
    lat = EmbeddedLattice.of(B, cfg)
    v = np.asarray(v, dtype=float)
    return _frac(v @ lat.Binv.T)


def _offsets(m: int, w: int) -> np.ndarray:
    return np.array(list(itertools.product(range(-w, w + 1), repeat=m)), dtype=float)


def torus_distance(x, y, B, w: int | None = None) -> float | np.ndarray:
    """min over z in [-w, w]^m of |B (x - y - z)| for fractional coordinates."""
    lat = EmbeddedLattice.of(B)
    w = lat.window if w is None else w
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    offs = _offsets(lat.m, w)
    diffs = (d[..., None, :] - offs) @ lat.B.T
    return np.linalg.norm(diffs, axis=-1).min(axis=-1)


def _dedupe(points: np.ndarray, cell: np.ndarray) -> np.ndarray:
    if len(points) < 2:
        return points
    keys = np.floor(points / cell).astype(np.int64)
    _, idx = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(idx)]


def _nearest(Q: np.ndarray, P: np.ndarray, lat: EmbeddedLattice, ub: float = np.inf) -> np.ndarray:
    """Exact torus distance from each row of Q to P; inf beyond ``ub``."""
    workers = _workers()
    if lat.diagonal:
        box = np.abs(np.diag(lat.B))
        top = np.nextafter(box, 0)
        tree = cKDTree(np.minimum(P * box, top), boxsize=box)
        return tree.query(np.minimum(Q * box, top), distance_upper_bound=ub, workers=workers)[0]
    offs = _offsets(lat.m, lat.window)
    if len(offs) <= 729:
        tree = cKDTree(P @ lat.B.T)
        best = np.full(len(Q), np.inf)
        for z in offs:
            d = tree.query((Q - z) @ lat.B.T, distance_upper_bound=ub, workers=workers)[0]
            best = np.minimum(best, d)
        return best
    # high dimension: candidates from the lattice-coordinate torus, refined exactly
    k = min(8, len(P))
    cand = cKDTree(P, boxsize=1.0).query(Q, k=k, workers=workers)[1].reshape(len(Q), k)
    return np.array([torus_distance(q, P[c], lat).min() for q, c in zip(Q, cand)])


def _directed(Q: np.ndarray, P: np.ndarray, lat: EmbeddedLattice) -> np.ndarray:
    """Distance from each row of Q to the cloud P on the torus.

    Values below r0 = 0.1 * (shortest basis vector) are exact. Farther
    queries are answered on successively coarser copies of P (cell r / 8
    while the search radius r grows fourfold) and reported as lower bounds,
    which keeps them cheap.
    """
    if len(P) == 0 or len(Q) == 0:
        raise ValueError("Hausdorff distance to an empty cloud is undefined")
    lengths = lat.lengths()
    r = 0.1 * float(lengths.min())
    diameter = float(lengths.sum())
    d = _nearest(Q, P, lat, ub=r)
    far = np.nonzero(~np.isfinite(d))[0]
    lower = np.full(len(far), r)
    while len(far):
        cell = r / 8
        Pc = _dedupe(P, cell / lengths)
        slack = lat.m * cell if len(Pc) < len(P) else 0.0
        r *= 4
        ub = r if r < diameter else np.inf
        dc = _nearest(Q[far], Pc, lat, ub=ub)
        hit = np.isfinite(dc)
        d[far[hit]] = np.maximum(lower[hit], dc[hit] - slack)
        lower = np.maximum(lower[~hit], r - slack)
        far = far[~hit]
    return d


def hausdorff(A, Bc, B) -> float:
    """max of the two directed sup-distances between finite torus clouds."""
    lat = EmbeddedLattice.of(B)
    pa = A.points if isinstance(A, TorusCloud) else np.atleast_2d(np.asarray(A, dtype=float))
    pb = Bc.points if isinstance(Bc, TorusCloud) else np.atleast_2d(np.asarray(Bc, dtype=float))
    if pa.size == 0 or pb.size == 0:
        raise ValueError("Hausdorff distance to an empty cloud is undefined")
    return float(max(_directed(pa, pb, lat).max(), _directed(pb, pa, lat).max()))


# --- sampling ----------------------------------------------------------------


def _kronecker(n: int, dim: int, shift: int = 0) -> np.ndarray:
    """Low-discrepancy jitter in [0, 1)^dim."""
    idx = np.arange(1, n + 1, dtype=float)[:, None] + shift
    alpha = np.array([_KRONECKER[j % len(_KRONECKER)] for j in range(dim)])
    return (idx * alpha) % 1.0


def _simplex_grid(n: int, r: int) -> np.ndarray:
    """Integer points k >= 0 with sum(k) <= n - r (all of 0..n-1 when r = 1)."""
    if r == 1:
        return np.arange(n, dtype=float)[:, None]
    top = n - r
    pts = np.indices((top + 1,) * r).reshape(r, -1).T
    return pts[pts.sum(axis=1) <= top].astype(float)


def _simplex_count(n: int, r: int) -> int:
    return math.comb(n, r) if n >= r else 1


def _affine_pieces(vertices: list[tuple], field) -> list[list[int]]:
    """Simplices (vertex index lists) covering the hull of exact vertices."""
    v0 = vertices[0]
    diffs = [ql.vsub(v, v0) for v in vertices[1:]]
    S = ql.rref(diffs, dim=len(v0), field=field) if diffs else None
    r = S.rank if S is not None else 0
    if r == 0:
        return [[0]]
    chart = np.array([[float(v[p] - v0[p]) for p in S.pivots] for v in vertices])
    if r == len(vertices) - 1:
        return [list(range(len(vertices)))]
    if r == 1:
        order = np.argsort(chart[:, 0])
        return [[int(order[0]), int(order[-1])]]
    tri = Delaunay(chart)
    return [list(map(int, s)) for s in tri.simplices]


class AffineSampler:
    """Samples x -> sum_i t^i A_i x + a(t) on input pieces, reduced mod Gamma.

    ``matrices`` maps degree to an exact matrix (degree 0 allowed for raw
    families); ``offset`` is an optional exact polynomial translate.
    """

    def __init__(self, lattice: LatticeBasis, matrices: dict, offset=None, cfg: EmbeddingConfig | None = None):
        self.cfg = cfg or EmbeddingConfig()
        self.lattice = lattice
        self.emb = EmbeddedLattice.of(lattice, self.cfg)
        Binv = lattice.inverse
        self.mats = {d: [[_dyadic(x) for x in row] for row in ql.matmul(Binv, A)] for d, A in matrices.items()}
        self.offset = None
        if offset is not None:
            self.offset = [[_dyadic(x) for x in ql.matvec(Binv, c)] for c in offset.coeffs]
        self._pieces: dict = {}

    @property
    def m(self) -> int:
        return self.lattice.dim

    def _matrix_at(self, t: Fraction):
        m = self.m
        k = len(next(iter(self.mats.values()))[0])
        M = [[Fraction(0)] * k for _ in range(m)]
        for d, C in self.mats.items():
            td = t ** d
            for i in range(m):
                for j in range(k):
                    if C[i][j]:
                        M[i][j] += td * C[i][j]
        off = [Fraction(0)] * m
        if self.offset:
            for d, c in enumerate(self.offset):
                td = t ** d
                off = [o + td * x for o, x in zip(off, c)]
        return M, off

    def _prepare(self, piece):
        key = id(piece)
        if key not in self._pieces:
            from .limits import FinitePoints

            if isinstance(piece, FinitePoints):
                pts = [tuple(_dyadic(x) for x in p) for p in piece.points]
                self._pieces[key] = (pts, [[i] for i in range(len(pts))], True)
            else:
                field = self.lattice.field
                exact = [tuple(field(x) for x in v) for v in piece.vertices]
                simplices = _affine_pieces(exact, field)
                pts = [tuple(_dyadic(x) for x in v) for v in exact]
                self._pieces[key] = (pts, simplices, False)
        return self._pieces[key]

    def sample(self, pieces, t, budget: int | None = None) -> tuple[np.ndarray, int]:
        """Reduced images of all pieces at time t and the raw sample count."""
        cfg = self.cfg
        t = Fraction(t)
        M, off = self._matrix_at(t)
        preps = [self._prepare(p) for p in pieces]
        n_simplices = sum(len(s) for _, s, finite in preps if not finite) or 1
        budget = budget or cfg.max_samples
        per = max(1, budget // n_simplices)
        per_min = cfg.min_samples // n_simplices
        clouds, used = [], 0
        for sx, (verts, simplices, finite) in enumerate(preps):
            images = [[sum((a * b for a, b in zip(row, v)), Fraction(0)) + o for row, o in zip(M, off)]
                      for v in verts]
            clouds.append(np.array([_frac_exact(y) for y in images]))
            used += len(images)
            if finite:
                continue
            for si, simplex in enumerate(simplices):
                r = len(simplex) - 1
                if r == 0:
                    continue
                P0 = images[simplex[0]]
                D = [[a - b for a, b in zip(images[j], P0)] for j in simplex[1:]]
                Df = np.array([[float(x) for x in d] for d in D])
                longest = float(np.linalg.norm(Df @ self.emb.B.T, axis=1).max())
                n = max(1, math.ceil(cfg.sample_density * longest))
                while _simplex_count(n, r) < per_min and n < 10 ** 7:
                    n = max(n + 1, int(n * 1.2))
                while _simplex_count(n, r) > per and n > r:
                    n = max(r, int(n / 1.1))
                K = _simplex_grid(n, r)
                U = _kronecker(len(K), r, shift=131 * si + 7919 * sx)
                E = np.array([_frac_exact([x / n for x in d]) for d in D])
                S = Df / n
                pts = _frac_exact(P0) + (K @ E) % 1.0 + U @ S
                clouds.append(_frac(pts))
                used += len(K)
        return np.vstack(clouds), used


def _grid_axes(counts: Sequence[int]) -> np.ndarray:
    axes = [np.arange(n) / n for n in counts]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def _fit_counts(lengths: Sequence[float], density: float, cap: int) -> list[int]:
    counts = [max(1, math.ceil(density * L)) for L in lengths]
    total = math.prod(counts)
    if total > cap:
        f = (cap / total) ** (1 / len(counts))
        counts = [max(1, int(c * f)) for c in counts]
    return counts


class SubtorusGrid:
    """Grid of the closed subtorus pi(L) for a Gamma-rational L."""

    def __init__(self, L: Subspace, lattice: LatticeBasis, cfg: EmbeddingConfig, cap: int):
        emb = EmbeddedLattice.of(lattice, cfg)
        W = np.array(ql.saturated_basis(L, lattice), dtype=float).reshape(-1, lattice.dim)
        if len(W) == 0:
            self.offsets = np.zeros((1, lattice.dim))
            return
        lengths = np.linalg.norm(W @ emb.B.T, axis=1)
        S = _grid_axes(_fit_counts(lengths, cfg.sample_density, cap))
        self.offsets = _frac(S @ W)

    def at(self, d: np.ndarray) -> np.ndarray:
        return _frac(self.offsets + d)


def full_grid(lattice, density: float, cap: int = 50_000) -> np.ndarray:
    """Regular grid of the whole torus in fractional coordinates."""
    emb = EmbeddedLattice.of(lattice)
    return _grid_axes(_fit_counts(emb.lengths(), density, cap))


def sample_piece(piece, dil, t, lattice: LatticeBasis, cfg: EmbeddingConfig | None = None) -> TorusCloud:
    """pi(rho_t(piece)) for a proper dilation."""
    mats = {i + 1: A for i, A in enumerate(dil.matrices)}
    pts, _ = AffineSampler(lattice, mats, cfg=cfg).sample([piece], t)
    return TorusCloud(pts)


def sample_limit(translates: Sequence, closures: Sequence[Subspace], lattice: LatticeBasis,
                 cfg: EmbeddingConfig | None = None) -> TorusCloud:
    """pi(union_j d_j + closures[j]); translates are exact vectors of K^m."""
    cfg = cfg or EmbeddingConfig()
    cap = max(1, cfg.max_samples // max(1, len(closures)))
    parts = []
    for d, L in zip(translates, closures):
        z = _frac_exact([_dyadic(x) for x in ql.lattice_coords(lattice, d)])
        parts.append(SubtorusGrid(L, lattice, cfg, cap).at(z))
    return TorusCloud(np.vstack(parts))


# --- Heisenberg nilmanifold --------------------------------------------------


def heis_reduce(g) -> np.ndarray:
    """Representative of g Gamma with all three coordinates in [0, 1).

    Right multiplication by [d, e, 0] with d = -floor(a), e = -floor(b)
    changes c to c + a e; the centre then brings c into [0, 1).
    """
    g = np.asarray(g, dtype=float)
    a, b, c = g[..., 0], g[..., 1], g[..., 2]
    c2 = c - a * np.floor(b)
    return _frac(np.stack([a, b, c2], axis=-1))


def _heis_lift(P: np.ndarray, w: int) -> np.ndarray:
    offs = _offsets(3, w)
    p, q, r = offs[:, 0][:, None], offs[:, 1][:, None], offs[:, 2][:, None]
    Y1 = P[:, 0][None, :] + p
    Y2 = P[:, 1][None, :] + q
    Y3 = P[:, 2][None, :] + r + P[:, 0][None, :] * q
    return np.stack([Y1, Y2, Y3], axis=-1).reshape(-1, 3)


def _heis_exact(x: np.ndarray, Y: np.ndarray) -> np.ndarray:
    D = Y - x
    return np.sqrt(D[..., 0] ** 2 + D[..., 1] ** 2 + (D[..., 2] - x[..., 0] * D[..., 1]) ** 2)


def heis_distance(x, y, w: int = 1) -> float:
    """min over gamma in [-w, w]^3 of |coords(x^{-1} y gamma)|."""
    x = np.asarray(x, dtype=float)
    Y = _heis_lift(np.atleast_2d(np.asarray(y, dtype=float)), w)
    return float(_heis_exact(x[None, :], Y).min())


def _heis_directed(Q: np.ndarray, P: np.ndarray, w: int = 1, r0: float | None = 0.1) -> np.ndarray:
    """Heisenberg distance from each row of Q to the cloud P.

    The lifted cloud P * gamma is searched in the Euclidean metric; since
    |S_a^{-1}| <= golden ratio for a in [0, 1), any point within true
    distance r lies within Euclidean distance 1.62 r. Queries farther than
    r0 are answered on a coarsened cloud as a lower bound.
    """
    if len(P) == 0 or len(Q) == 0:
        raise ValueError("Hausdorff distance to an empty cloud is undefined")
    Y = _heis_lift(P, w)
    tree = cKDTree(Y)
    k = min(16, len(Y))
    ub = np.inf if r0 is None else 1.62 * r0
    dist, idx = tree.query(Q, k=k, distance_upper_bound=ub, workers=_workers())
    dist, idx = dist.reshape(len(Q), k), idx.reshape(len(Q), k)
    valid = idx < len(Y)
    cand = _heis_exact(Q[:, None, :], Y[np.where(valid, idx, 0)])
    exact = np.where(valid, cand, np.inf).min(axis=1)
    a = np.abs(Q[:, 0])
    stretch = np.sqrt((2 + a * a + a * np.sqrt(a * a + 4)) / 2)  # norm of the inverse shear
    radius = stretch * exact
    for i in np.nonzero(np.isfinite(exact) & (dist[:, -1] <= radius))[0]:
        near = tree.query_ball_point(Q[i], radius[i] * (1 + 1e-12))
        exact[i] = _heis_exact(Q[i][None, None, :], Y[near][None]).min()
    far = ~np.isfinite(exact)
    if far.any():
        cell = r0 / 16
        Pc = _dedupe(P, np.full(3, cell))
        slack = 1.62 * (1 + w) * math.sqrt(3) * cell if len(Pc) < len(P) else 0.0
        exact[far] = np.maximum(r0, _heis_directed(Q[far], Pc, w, None) - slack)
    return exact


def heis_hausdorff(A: np.ndarray, B: np.ndarray, w: int = 1) -> float:
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    return float(max(_heis_directed(A, B, w).max(), _heis_directed(B, A, w).max()))


def heis_grid(n: int) -> np.ndarray:
    return _grid_axes([n, n, n])


def heis_sample(spec, dil, pieces, t, cfg: EmbeddingConfig) -> tuple[np.ndarray, int]:
    """Reduced group points exp(rho_t(x)) for x on the pieces.

    ``dil`` acts on Heisenberg algebra coordinates (x, y, z); the group
    element is [x, y, z + x y / 2].
    """
    if not spec.is_heisenberg():
        raise ValueError("Heisenberg sampling needs the heisenberg3 spec")
    from .limits import FinitePoints

    mats = [[[float(v) for v in row] for row in A] for A in dil.matrices]
    At = sum(t ** (i + 1) * np.array(A) for i, A in enumerate(mats))
    alg = []
    n_simplices = sum(1 for p in pieces if not isinstance(p, FinitePoints)) or 1
    for sx, piece in enumerate(pieces):
        if isinstance(piece, FinitePoints):
            alg.append(np.array([[float(v) for v in p] for p in piece.points]) @ At.T)
            continue
        field = spec.field
        exact = [tuple(field(x) for x in v) for v in piece.vertices]
        V = np.array([[float(x) for x in v] for v in exact])
        for si, simplex in enumerate(_affine_pieces(exact, field)):
            r = len(simplex) - 1
            alg.append(V[simplex] @ At.T)
            if r == 0:
                continue
            D = (V[simplex[1:]] - V[simplex[0]]) @ At.T
            longest = float(np.linalg.norm(D, axis=1).max())
            n = max(1, math.ceil(cfg.sample_density * longest))
            per = max(1, cfg.max_samples // n_simplices)
            per_min = cfg.min_samples // n_simplices
            while _simplex_count(n, r) < per_min:
                n = max(n + 1, int(n * 1.2))
            while _simplex_count(n, r) > per and n > r:
                n = max(r, int(n / 1.1))
            K = _simplex_grid(n, r)
            lam = (K + _kronecker(len(K), r, 97 * si + sx)) / n
            alg.append(V[simplex[0]] @ At.T + lam @ D)
    X = np.vstack(alg)
    group = np.stack([X[:, 0], X[:, 1], X[:, 2] + X[:, 0] * X[:, 1] / 2], axis=1)
    return heis_reduce(group), len(X)


# --- experiments -------------------------------------------------------------


def _completeness(limits, sigma, schedule: Schedule, cfg: EmbeddingConfig, n: int) -> tuple[list[float], float, int]:
    """Per-window worst target distance and the overall worst over the tail.

    Targets form a grid of the closed subtorus cbar + Vclosed of the product
    torus; sigma is sampled densely inside each schedule window.
    """
    lat_n = ql.block_diagonal(limits.lattice, n)
    emb = EmbeddedLattice.of(lat_n, cfg)
    W = np.array(ql.saturated_basis(limits.Vclosed, lat_n), dtype=float).reshape(-1, lat_n.dim)
    cbar = _frac_exact([_dyadic(x) for x in ql.lattice_coords(lat_n, limits.cbar)])
    r = len(W)
    g = cfg.completeness_grid
    if r:
        while g > 1 and g ** r > cfg.completeness_cap:
            g -= 1
        targets = _frac(cbar + _grid_axes([g] * r) @ W)
    else:
        targets = cbar[None, :]
    coeffs = []
    for c in sigma.coeffs:
        z = [_dyadic(x) for x in ql.lattice_coords(lat_n, c)]
        hi = np.array([float(x) for x in z], dtype=np.longdouble)
        lo = np.array([float(x - Fraction(float(x))) for x in z], dtype=np.longdouble)
        coeffs.append(hi + lo)
    tail = set(schedule.tail)
    per_row, tail_best = [], np.full(len(targets), np.inf)
    for k, (lo, hi) in enumerate(schedule.windows()):
        ts = lo + (hi - lo) * _kronecker(cfg.completeness_t_samples, 1, shift=k)[:, 0]
        ts = np.append(ts, hi).astype(np.longdouble)
        acc = np.zeros((len(ts), lat_n.dim), dtype=np.longdouble)
        for c in reversed(coeffs):
            acc = acc * ts[:, None] + c
        pts = np.asarray(acc - np.floor(acc), dtype=float) % 1.0
        d = _directed(targets, pts, emb)
        per_row.append(float(d.max()))
        if schedule.t_values[k] in tail:
            tail_best = np.minimum(tail_best, d)
    return per_row, float(tail_best.max()), len(targets)


def _body_covers(limits) -> bool | None:
    """Whether every limit pi(d + C) is the whole torus (decided for m = 1)."""
    if limits.lattice.dim != 1:
        return None
    vals = [v[0] for v in limits.body.vertices]
    period = abs(limits.lattice.matrix[0][0])
    return (max(vals) - min(vals)) >= period


def fullspace_distances(family, lattice: LatticeBasis, *, schedule: Schedule | None = None,
                        cfg: EmbeddingConfig | None = None) -> list[float]:
    """d_H to the whole torus R^m / lattice along the schedule.

    For a translated body the sampled set is a(t) + C itself; for a
    multi-coset family the predicted limit members pi(p_j(t) + closure_j).
    """
    from .limits import BodyLimits

    schedule = schedule or Schedule.geometric()
    cfg = cfg or EmbeddingConfig()
    grid = full_grid(lattice, cfg.sample_density, cfg.full_grid_cap)
    emb = EmbeddedLattice.of(lattice, cfg)
    out = []
    if isinstance(family, BodyLimits):
        field = lattice.field
        eye = ql.identity(field, lattice.dim)
        sampler = AffineSampler(lattice, {0: eye}, offset=family.translate, cfg=cfg)
        for t in schedule.t_values:
            pts, _ = sampler.sample([family.body], t)
            out.append(hausdorff(pts, grid, emb))
        return out
    closures = [ql.rational_closure(c.L, lattice) for c in family.cosets]
    for t in schedule.t_values:
        tq = Fraction(t)
        cloud = sample_limit([c.p(family.field(tq)) for c in family.cosets], closures, lattice, cfg)
        out.append(hausdorff(cloud, grid, emb))
    return out


@dataclass
class VerificationReport:
    scenario_id: str
    mode: str
    rows: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    analytic: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    COLUMNS = ("t", "sound_dH", "worst_target_dist", "samples_used", "wall_ms")

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def csv_text(self) -> str:
        lines = [",".join(self.COLUMNS)]
        for r in self.rows:
            lines.append(",".join(_fmt(r[c]) for c in self.COLUMNS))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario_id,
            "mode": self.mode,
            "analytic": self.analytic,
            "rows": self.rows,
            "verdicts": self.verdicts,
            "details": self.details,
            "timings": self.timings,
        }

    def svg(self, width: int = 640, height: int = 360) -> str:
        return svg_plot(self.rows, width, height, title=self.scenario_id)


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6g}"
    return str(x)


def svg_plot(rows: list, width: int = 640, height: int = 360, title: str = "") -> str:
    """d_H against log10 t as polylines (sound and completeness columns)."""
    pad = 48
    ts = [math.log10(r["t"]) for r in rows]
    series = {"sound_dH": "#1f77b4", "worst_target_dist": "#d62728"}
    vals = [r[k] for r in rows for k in series if not math.isnan(r[k])]
    ymax = max(vals + [1e-9]) * 1.1
    x0, x1 = min(ts), max(ts) if max(ts) > min(ts) else min(ts) + 1

    def px(t, y):
        return (pad + (t - x0) / (x1 - x0) * (width - 2 * pad), height - pad - y / ymax * (height - 2 * pad))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">log10 t</text>',
           f'<text x="{pad}" y="{pad - 12}" font-size="12">{title} (y max {ymax:.3g})</text>']
    for key, colour in series.items():
        pts = [px(t, r[key]) for t, r in zip(ts, rows) if not math.isnan(r[key])]
        if pts:
            coords = " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)
            out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{coords}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _row(t, sound, worst, used, t0) -> dict:
    return {"t": float(t), "sound_dH": float(sound), "worst_target_dist": float(worst),
            "samples_used": int(used), "wall_ms": round((time.perf_counter() - t0) * 1000, 1)}


def verify_convergence(scenario, predicted=None, schedule: Schedule | None = None,
                       cfg: EmbeddingConfig | None = None, *, completeness: bool = True) -> VerificationReport:
    """Numeric evidence for a scenario's predicted limit family.

    ``predicted`` is a :class:`~nilflow.limits.LimitFamily` (abelian and
    unipotent modes), a :class:`~nilflow.limits.BodyLimits` (translated
    body) or None (raw). Defaults come from the scenario itself.
    """
    from .limits import Convergence

    schedule = schedule or scenario.schedule
    cfg = cfg or scenario.embedding
    if not schedule.t_values:
        raise ValueError("empty schedule")
    tol = scenario.tolerances
    report = VerificationReport(scenario.id, scenario.mode)
    start = time.perf_counter()

    if scenario.mode == "raw":
        B = scenario.lattice
        sampler = AffineSampler(B, scenario.raw_matrices, cfg=cfg)
        grid = full_grid(B, cfg.sample_density, cfg.full_grid_cap)
        emb = EmbeddedLattice.of(B, cfg)
        for t in schedule.t_values:
            t0 = time.perf_counter()
            pts, used = sampler.sample(scenario.input_set.pieces, t)
            report.rows.append(_row(t, hausdorff(pts, grid, emb), math.nan, used, t0))
        report.details["note"] = "raw mode: sound_dH is the distance to the whole torus; no verdicts"
        report.timings["total_ms"] = round((time.perf_counter() - start) * 1000, 1)
        return report

    if predicted is None:
        raise ValueError("a prediction is required outside raw mode")
    B = predicted.lattice
    emb = EmbeddedLattice.of(B, cfg)
    tail = set(schedule.tail)

    if scenario.mode == "translated_body":
        eye = ql.identity(B.field, B.dim)
        sampler = AffineSampler(B, {0: eye}, offset=predicted.translate, cfg=cfg)
        pieces = [predicted.body]
        limit_sampler = sampler
        n = 1
        sigma = predicted.translate
        covers = _body_covers(predicted)
        expect_full = covers
        cosets = None
    else:
        family = scenario.analytic_family()
        dil = scenario.analytic_dilation()
        sampler = AffineSampler(B, {i + 1: A for i, A in enumerate(dil.matrices)}, cfg=cfg)
        pieces = list(scenario.input_set.pieces)
        cosets = family.cosets
        grids = [SubtorusGrid(L, B, cfg, max(1, cfg.max_samples // len(cosets))) for L in predicted.closures]
        n = predicted.n
        from .limits import stacked_curve

        sigma = stacked_curve(family)
        expect_full = scenario.classification() is Convergence.FULL

    full = full_grid(B, cfg.sample_density, cfg.full_grid_cap)
    sound_tail, fullspace = [], []
    for t in schedule.t_values:
        t0 = time.perf_counter()
        image, used = sampler.sample(pieces, t)
        if cosets is None:
            limit = image
        else:
            tq = B.field(Fraction(t))
            parts = [g.at(_frac_exact([_dyadic(x) for x in ql.lattice_coords(B, c.p(tq))]))
                     for g, c in zip(grids, cosets)]
            limit = np.vstack(parts)
        cell = 1.0 / (4 * cfg.sample_density * np.maximum(emb.lengths(), 1e-9))
        image_d = _dedupe(image, cell)
        s = hausdorff(image_d, limit, emb)
        fullspace.append(hausdorff(image_d, full, emb))
        report.rows.append(_row(t, s, math.nan, used, t0))
        if t in tail:
            sound_tail.append(s)

    if completeness:
        t0 = time.perf_counter()
        per_row, worst, n_targets = _completeness(predicted, sigma, schedule, cfg, n)
        for row, w in zip(report.rows, per_row):
            row["worst_target_dist"] = w
        report.details["completeness_targets"] = n_targets
        report.details["worst_target_dist"] = worst
        report.verdicts["complete"] = worst < tol["complete"]
        report.timings["completeness_ms"] = round((time.perf_counter() - t0) * 1000, 1)

    report.details["tail_sound_dH"] = max(sound_tail)
    report.verdicts["sound"] = max(sound_tail) < tol["sound"]
    fs_tail = [d for t, d in zip(schedule.t_values, fullspace) if t in tail]
    report.details["fullspace_dH_tail_max"] = max(fs_tail)
    report.details["fullspace_margin"] = min(fullspace)
    report.details["fullspace_dH"] = dict(zip(map(float, schedule.t_values), fullspace))
    if expect_full:
        report.verdicts["fullspace"] = max(fs_tail) < tol["fullspace"]
    elif expect_full is False:
        report.details["fullspace_check"] = "fails (limits are proper)"
        report.verdicts["proper"] = min(fullspace) >= tol["proper"]

    if scenario.mode == "unipotent" and scenario.heis_check:
        _heis_verdicts(scenario, schedule, cfg, expect_full, report)
    report.timings["total_ms"] = round((time.perf_counter() - start) * 1000, 1)
    return report


def _heis_verdicts(scenario, schedule: Schedule, cfg: EmbeddingConfig, expect_full: bool, report) -> None:
    """Distance to a full grid of the Heisenberg nilmanifold itself."""
    tol = scenario.tolerances
    hcfg = cfg.with_(sample_density=scenario.heis_density, min_samples=scenario.heis_min_samples,
                     max_samples=max(cfg.max_samples, scenario.heis_min_samples))
    grid = heis_grid(scenario.heis_grid)
    ts = [t for t in schedule.t_values if t <= scenario.heis_t_max]
    dists, counts = [], []
    for t in ts:
        pts, used = heis_sample(scenario.group, scenario.dilation, scenario.input_set.pieces, t, hcfg)
        counts.append(used)
        pts = _dedupe(pts, np.full(3, 1.0 / (4 * scenario.heis_grid * 10)))
        dists.append(heis_hausdorff(pts, grid))
    report.details["heis_fullspace_dH"] = dict(zip(map(float, ts), dists))
    report.details["heis_samples_used"] = dict(zip(map(float, ts), counts))
    if expect_full:
        report.verdicts["heis_fullspace"] = dists[-1] < tol["heis_fullspace"]
    else:
        report.verdicts["heis_proper"] = min(dists) >= tol["heis_proper"]
