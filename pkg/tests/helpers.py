"""Random exact instances shared by the unit and acceptance tests."""

import random
from fractions import Fraction

from nilflow import limits as lm
from nilflow.scalar import NumberField

K2 = NumberField.sqrt(2)
SQRT2_ENTRIES = ([0, 1], [0, -1], [1, 1], [1, -1], [Fraction(1, 2), 1])


def random_entry(rng: random.Random, K, irrational_rate=0.3, zero_rate=0.35):
    u = rng.random()
    if u < zero_rate:
        return K(0)
    if u < zero_rate + irrational_rate:
        return K(rng.choice(SQRT2_ENTRIES))
    return K(rng.choice([-2, -1, 1, 2, Fraction(1, 2), 3]))


def random_dilation(rng: random.Random, K, m: int, k: int, degree: int) -> lm.DilationFamily:
    while True:
        mats = {d: tuple(tuple(random_entry(rng, K) for _ in range(k)) for _ in range(m)) for d in range(1, degree + 1)}
        dil = lm.DilationFamily.from_degrees(mats, K)
        if any(x for A in dil.matrices for row in A for x in row):
            return dil


def random_point(rng: random.Random, K, k: int) -> tuple:
    return tuple(K(Fraction(rng.randint(-4, 4), rng.choice([1, 2, 3]))) for _ in range(k))


def random_input_set(rng: random.Random, K, k: int) -> lm.InputSet:
    pieces = []
    for _ in range(rng.randint(1, 2)):
        if rng.random() < 0.4:
            pieces.append(lm.FinitePoints(tuple(random_point(rng, K, k) for _ in range(rng.randint(1, 2)))))
        else:
            n = rng.randint(2, min(3, k + 1))
            verts = []
            while len(verts) < n:
                v = random_point(rng, K, k)
                if v not in verts:
                    verts.append(v)
            pieces.append(lm.Polytope(tuple(verts)))
    return lm.InputSet(tuple(pieces))


def random_hull_point(rng: random.Random, piece) -> tuple:
    """Exact rational convex combination of a piece's vertices."""
    pts = piece.points if isinstance(piece, lm.FinitePoints) else piece.vertices
    if isinstance(piece, lm.FinitePoints):
        return rng.choice(pts)
    w = [Fraction(rng.randint(0, 5)) for _ in pts]
    if not any(w):
        w[0] = Fraction(1)
    s = sum(w)
    return tuple(sum((wi / s * p[i] for wi, p in zip(w, pts)), pts[0][i] * 0) for i in range(len(pts[0])))


def random_scenario(rng: random.Random, K=K2):
    m = rng.randint(1, 3)
    k = rng.randint(1, 2)
    degree = rng.randint(1, 3)
    return random_dilation(rng, K, m, k, degree), random_input_set(rng, K, k)
