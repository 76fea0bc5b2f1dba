"""Acceptance criteria 1-8, one summary line per criterion."""

import itertools
import random
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

from nilflow import limits as lm
from nilflow import qlinalg as ql
from nilflow import unipotent as up
from nilflow.cli import run_verify
from nilflow.limits import Convergence
from nilflow.numeric import Schedule, verify_convergence
from nilflow.scalar import QQ
from nilflow.scenario import bundled, parse_scenario

from helpers import K2, random_hull_point, random_scenario

th = K2.gen


@pytest.fixture
def report(capsys):
    def emit(n, ok, elapsed, limit, note):
        with capsys.disabled():
            status = "PASS" if ok and elapsed < limit else "FAIL"
            print(f"\n[criterion {n}] {status} {note} ({elapsed:.1f}s, limit {limit}s)")
    return emit


def test_c1_translate_family(report):
    t0 = time.perf_counter()
    sc = bundled("sample64_translates")
    pred = sc.predicted()
    assert pred.closures == (ql.span([(QQ(1), QQ(0))]),)
    assert pred.Vclosed == ql.span([(QQ(0), QQ(1))])
    assert sc.classification() is Convergence.NOT_FULL
    assert sc.schedule.t_values[0] == 10 and sc.schedule.t_values[-1] == pytest.approx(1e4)
    assert sc.embedding.sample_density == 200 and sc.embedding.completeness_grid == 8
    rep = verify_convergence(sc, pred)
    elapsed = time.perf_counter() - t0
    sound, worst = rep.details["tail_sound_dH"], rep.details["worst_target_dist"]
    ok = sound < 0.02 and worst < 0.05
    report(1, ok, elapsed, 10, f"tail sound_dH={sound:.4f} (<0.02), worst target={worst:.4f} (<0.05)")
    assert ok and elapsed < 10


def test_c2_segment_parabola(report):
    t0 = time.perf_counter()
    sc = bundled("segment_parabola_dilation")
    assert sc.classification() is Convergence.FULL
    rep = verify_convergence(sc, sc.predicted(), completeness=False)
    elapsed = time.perf_counter() - t0
    fs = rep.details["fullspace_dH"]
    assert min(fs) >= 200
    samples = min(r["samples_used"] for r in rep.rows)
    ok = max(fs.values()) < 0.05 and samples >= 1e4
    report(2, ok, elapsed, 30, f"max d_H to full grid={max(fs.values()):.4f} (<0.05), min samples={samples}")
    assert ok and elapsed < 30


def test_c3_strong_vs_plain(report):
    t0 = time.perf_counter()
    sc = bundled("sample63_interval")
    rep = run_verify(sc, completeness=False)
    assert rep.verdicts["sound"]
    full_tail = rep.details["fullspace_dH_tail_max"]
    N = rep.details["nonconvergence_index"]
    rep3 = verify_convergence(sc.with_lattice_scale(3), sc.with_lattice_scale(3).predicted(), completeness=False)
    margin = rep3.details["fullspace_margin"]
    elapsed = time.perf_counter() - t0
    ok = full_tail < 0.05 and margin >= 0.4 and N is not None and N <= 3
    report(3, ok, elapsed, 5, f"Z: d_H to circle={full_tail:.4f}; 3Z: min d_H={margin:.4f} (>=0.4); index N={N}")
    assert ok and elapsed < 5


def test_c4_heisenberg_orbit(report):
    t0 = time.perf_counter()
    sc = bundled("heis_orbit_irrational")
    assert sc.classification() is Convergence.FULL
    rep = verify_convergence(sc, sc.predicted(), completeness=False)
    t_irr = time.perf_counter() - t0
    d_1000 = rep.details["heis_fullspace_dH"][1000.0]
    used = rep.details["heis_samples_used"][1000.0]
    assert sc.heis_grid == 20

    t1 = time.perf_counter()
    sr = bundled("heis_orbit_rational")
    assert sr.classification() is Convergence.NOT_FULL
    rr = verify_convergence(sr, sr.predicted(), completeness=False)
    t_rat = time.perf_counter() - t1
    heis_min = min(rr.details["heis_fullspace_dH"].values())
    ab_min = rr.details["fullspace_margin"]
    ok = d_1000 < 0.1 and used >= 1e5 and heis_min >= 0.2 and ab_min >= 0.2
    report(4, ok, max(t_irr, t_rat), 60,
           f"(1,sqrt2): heis d_H(t=1e3)={d_1000:.4f} (<0.1) with {used} samples; "
           f"(1,1): min heis d_H={heis_min:.4f}, min abelian d_H={ab_min:.4f} (>=0.2)")
    assert ok and t_irr < 60 and t_rat < 60


# --- criterion 5: closure oracle ---------------------------------------------

def _random_closure_instance(rng):
    m = rng.randint(1, 4)
    if rng.random() < 0.3:
        cols = [tuple(QQ(int(i == j)) for i in range(m)) for j in range(m)]
        for j in range(m):
            for i in range(j):
                cols[j] = tuple(x + QQ(rng.randint(-1, 1)) * y for x, y in zip(cols[j], cols[i]))
        B = ql.LatticeBasis.from_columns([tuple(K2(x.to_fraction()) for x in c) for c in cols], K2)
    else:
        B = ql.LatticeBasis.standard(K2, m)
    d = rng.randint(1, m)
    vecs = []
    for _ in range(d):
        if rng.random() < 0.6:
            # w1 + sqrt2 w2 with small integer w's: coefficient height stays <= 10
            w1 = [rng.randint(-2, 2) for _ in range(m)]
            w2 = [rng.randint(-2, 2) * rng.randint(0, 1) for _ in range(m)]
            vecs.append(tuple(K2([a, b]) for a, b in zip(w1, w2)))
        else:
            vecs.append(tuple(K2([rng.randint(-10, 10), rng.randint(-10, 10) * (rng.random() < 0.3)])
                              for _ in range(m)))
    return ql.span(vecs, dim=m, field=K2), B


def _oracle(L, B, H=10):
    """Integer covectors of height <= H annihilating L in lattice coordinates."""
    m = B.dim
    coords = [ql.lattice_coords(B, v) for v in L.basis]
    expansion = [[x.rational_coords()[i] for x in c] for c in coords for i in range(2)]
    rank = sympy.Matrix(expansion).rank() if L.dim else 0
    F = np.array([[float(x) for x in c] for c in coords]) if L.dim else np.zeros((0, m))
    grid = np.array(list(itertools.product(range(-H, H + 1), repeat=m)))
    grid = grid[np.argsort(np.abs(grid).sum(axis=1), kind="stable")][1:]
    cand = grid[np.all(np.abs(grid @ F.T) < 1e-9, axis=1)]
    U = ql.span([], dim=m, field=K2)
    for c in cand:
        cv = tuple(K2(int(x)) for x in c)
        if U.contains(cv):
            continue
        if all(sum((a * b for a, b in zip(cv, w)), K2(0)) == 0 for w in coords):
            U = ql.span(list(U.basis) + [cv], dim=m, field=K2)
    # closure candidate: back in ambient coordinates
    kerU = ql.kernel(U.basis, ncols=m, field=K2) if U.dim else ql.full_space(K2, m)
    Bmat = tuple(tuple(B.columns[j][i] for j in range(m)) for i in range(m))
    closure = ql.span([ql.matvec(Bmat, v) for v in kerU.basis], dim=m, field=K2)
    return closure, U.dim == m - rank


def test_c5_closure_oracle(report):
    t0 = time.perf_counter()
    rng = random.Random(2024)
    conclusive = 0
    for _ in range(100):
        L, B = _random_closure_instance(rng)
        C = ql.rational_closure(L, B)
        assert L.issubspace(C)
        assert ql.rational_closure(C, B) == C
        W = ql.span(list(L.basis)[:-1], dim=B.dim, field=K2)
        assert ql.rational_closure(W, B).issubspace(C)
        oracle, ok = _oracle(L, B)
        assert C.issubspace(oracle)
        if ok:
            conclusive += 1
            assert C == oracle
    elapsed = time.perf_counter() - t0
    report(5, True, elapsed, 20, f"oracle agreed on {conclusive}/100 conclusive instances; laws held on all 100")
    assert conclusive >= 50 and elapsed < 20


# --- criterion 6: exact algebra ----------------------------------------------

def _strict(rng, n):
    return tuple(tuple(K2([Fraction(rng.randint(-6, 6), rng.randint(1, 3)), rng.randint(-3, 3)]) if j > i
                       else K2(0) for j in range(n)) for i in range(n))


def _scalar(rng):
    return K2([Fraction(rng.randint(-50, 50), rng.randint(1, 9)), Fraction(rng.randint(-50, 50), rng.randint(1, 9))])


def test_c6_exact_algebra(report):
    t0 = time.perf_counter()
    rng = random.Random(6)
    for _ in range(200):
        n = rng.randint(2, 5)
        A = _strict(rng, n)
        g = up.exp(A)
        assert up.log(g) == A
        assert up.exp(up.log(g)) == g
    xs = [_scalar(rng) for _ in range(10 ** 4)]
    zero, one = K2(0), K2(1)
    for a, b, c in zip(xs, xs[1:] + xs[:1], xs[2:] + xs[:2]):
        assert a + b == b + a and a * b == b * a
        assert (a + b) + c == a + (b + c) and (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a + zero == a and a * one == a and a - a == zero
        if a != zero:
            assert a * a.inv() == one
    for _ in range(100):
        m = rng.randint(1, 4)
        G = [[rng.randint(-9, 9) for _ in range(m)] for _ in range(rng.randint(1, 5))]
        U = [[int(i == j) for j in range(len(G))] for i in range(len(G))]
        for _ in range(6):
            i, j = rng.sample(range(len(G)), 2) if len(G) > 1 else (0, 0)
            if i != j:
                k = rng.randint(-3, 3)
                U[i] = [a + k * b for a, b in zip(U[i], U[j])]
            if rng.random() < 0.3:
                U[i] = [-a for a in U[i]]
            if rng.random() < 0.3 and i != j:
                U[i], U[j] = U[j], U[i]
        assert abs(sympy.Matrix(U).det()) == 1
        UG = [[sum(U[i][k] * G[k][j] for k in range(len(G))) for j in range(m)] for i in range(len(G))]
        assert ql.hnf_rows(UG) == ql.hnf_rows(G)
    elapsed = time.perf_counter() - t0
    report(6, True, elapsed, 30, "200 exp/log round trips, 10^4 field-law triples, 100 HNF invariance cases")
    assert elapsed < 30


# --- criterion 7: random scenarios -------------------------------------------

def _js(x):
    return x.to_json()


def _scenario_dict(dil, X, sid):
    return {
        "id": sid,
        "mode": "abelian",
        "field": "sqrt:2",
        "lattice": "standard",
        "dilation": {str(d + 1): [[_js(x) for x in row] for row in A] for d, A in enumerate(dil.matrices)},
        "input_set": [{"points": [[_js(x) for x in v] for v in p.points]} if isinstance(p, lm.FinitePoints)
                      else {"polytope": [[_js(x) for x in v] for v in p.vertices]} for p in X.pieces],
        "schedule": {"t_values": [1000, 3981.0717055349733]},
        "embedding": {"sample_density": 40, "max_samples": 300000},
    }


def test_c7_random_scenarios(report):
    t0 = time.perf_counter()
    rng = random.Random(77)
    worst = 0.0
    for i in range(25):
        dil, X = random_scenario(rng)
        M = lm.normal_form(dil, X)
        for _ in range(10):
            t = K2(Fraction(rng.randint(-200, 200), rng.randint(1, 13)))
            for piece in X.pieces:
                verts = piece.points if isinstance(piece, lm.FinitePoints) else piece.vertices
                for x in list(verts) + [random_hull_point(rng, piece)]:
                    assert M.contains_point(t, dil.apply(t, x))
        sc = parse_scenario(_scenario_dict(dil, X, f"random{i}"))
        rep = verify_convergence(sc, sc.predicted(), completeness=False)
        s = max(r["sound_dH"] for r in rep.rows)
        worst = max(worst, s)
        assert s < 0.05, (i, rep.rows)
    elapsed = time.perf_counter() - t0
    report(7, worst < 0.05, elapsed, 120, f"clause 1 exact on 25 scenarios; worst sound_dH at t>=1e3 = {worst:.4f} (<0.05)")
    assert elapsed < 120


# --- criterion 8: curve coset ------------------------------------------------

def test_c8_curve_coset_oracle(report):
    t0 = time.perf_counter()
    rng = random.Random(8)
    checked = 0
    for _ in range(100):
        dim, D = rng.randint(1, 5), rng.randint(1, 4)
        coeffs = []
        for _ in range(D + 1):
            if rng.random() < 0.3 and coeffs:
                c = rng.choice(coeffs)
                coeffs.append(tuple(K2(rng.randint(-2, 2)) * x for x in c))
            else:
                coeffs.append(tuple(K2([rng.randint(-3, 3), rng.randint(-3, 3) * (rng.random() < 0.4)])
                                    for _ in range(dim)))
        sigma = lm.PolyVec(tuple(coeffs))
        cbar, V = lm.poly_curve_coset(sigma)
        assert V.contains(tuple(a - b for a, b in zip(sigma.coeffs[0], cbar)))
        for f in ql.annihilator(V).basis:
            vals = [sum((a * b for a, b in zip(f, c)), K2(0)) for c in sigma.coeffs]
            assert all(v == 0 for v in vals[1:])
            checked += 1
        for _ in range(3):
            f = tuple(K2(rng.randint(-3, 3)) for _ in range(dim))
            vals = [sum((a * b for a, b in zip(f, c)), K2(0)) for c in sigma.coeffs]
            killed = all(v == 0 for v in vals[1:])
            assert killed == all(sum((a * b for a, b in zip(f, v)), K2(0)) == 0 for v in V.basis)
    elapsed = time.perf_counter() - t0
    report(8, True, elapsed, 5, f"{checked} annihilators constant; non-annihilators nonconstant on 100 curves")
    assert elapsed < 5
