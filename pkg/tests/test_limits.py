import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nilflow import limits as lm
from nilflow import qlinalg as ql
from nilflow import unipotent as up
from nilflow.limits import Convergence, DilationFamily, FinitePoints, InputSet, Polytope
from nilflow.qlinalg import LatticeBasis
from nilflow.scalar import QQ

from conftest import K2
from helpers import random_hull_point, random_scenario

th = K2.gen
Z2 = LatticeBasis.standard(QQ, 2)


def span(*vs, K=QQ):
    return ql.span([tuple(K(x) for x in v) for v in vs], dim=len(vs[0]), field=K)


def test_translates_family():
    dil = DilationFamily.from_degrees({1: [[1, 0], [0, 1]]}, QQ)
    M = lm.normal_form(dil, InputSet((Polytope(((-1, 1), (1, 1))),)))
    assert M.n == 1 and M.cosets[0].L == span((1, 0))
    lim = lm.limit_family(M, Z2)
    assert lim.closures == (span((1, 0)),)
    assert lim.Vclosed == span((0, 1))
    assert lm.classify_convergence(M, Z2) is Convergence.NOT_FULL


def test_segment_parabola_converges_strongly():
    dil = DilationFamily.from_degrees({1: [[1], [0]], 2: [[0], [1]]}, QQ)
    M = lm.normal_form(dil, InputSet((Polytope(((0,), (1,))),)))
    assert M.cosets[0].L.is_full()
    assert lm.classify_convergence(M, Z2) is Convergence.FULL
    assert lm.limit_family(M, Z2).closures[0].is_full()


def test_vertical_circles():
    dil = DilationFamily.from_degrees({1: [[1, 0], [0, 1]]}, QQ)
    M = lm.normal_form(dil, InputSet((Polytope(((1, 0), (1, 1))),)))
    lim = lm.limit_family(M, Z2)
    assert lim.closures == (span((0, 1)),)
    assert lim.Vclosed == span((1, 0))


def test_irrational_line_is_dense():
    dil = DilationFamily.from_degrees({1: [[1], [th]]}, K2)
    M = lm.normal_form(dil, InputSet((Polytope(((0,), (1,))),)))
    assert lm.classify_convergence(M, LatticeBasis.standard(K2, 2)) is Convergence.FULL


def test_finite_points_only():
    dil = DilationFamily.from_degrees({1: [[1], [th]]}, K2)
    M = lm.normal_form(dil, InputSet((FinitePoints(((K2(1),), (K2(2),))),)))
    assert M.n == 2 and all(c.L.is_zero() for c in M.cosets)
    lim = lm.limit_family(M, LatticeBasis.standard(K2, 2))
    # the pair (t(1, th), 2t(1, th)) stays on the rational plane {(x, y, 2x, 2y)}
    assert lim.Vclosed == span((1, 0, 2, 0), (0, 1, 0, 2), K=K2)
    assert lm.classify_convergence(M, LatticeBasis.standard(K2, 2)) is Convergence.NOT_FULL


def test_compress_absorbs_points_on_a_polytope():
    dil = DilationFamily.from_degrees({1: [[1, 0], [0, 1]]}, QQ)
    X = InputSet((Polytope(((0, 0), (1, 0))), FinitePoints(((Fraction(1, 2), 0), (0, 1)))))
    M = lm.normal_form(dil, X)
    assert M.n == 2
    assert M.cosets[1].L.is_zero()
    assert M.cosets[1].p.coeffs[1] == (QQ(0), QQ(1))


def test_compress_keeps_first_of_duplicates():
    dil = DilationFamily.from_degrees({1: [[1]]}, QQ)
    M = lm.normal_form(dil, InputSet((FinitePoints(((1,), (1,))),)))
    assert M.n == 1


def test_slmax():
    dil = DilationFamily.from_degrees({1: [[1, 0], [0, 1]]}, QQ)
    X = InputSet((Polytope(((0, 0), (1, 0))), Polytope(((0, 0), (0, 1))), FinitePoints(((3, 3),))))
    M = lm.normal_form(dil, X)
    assert lm.slmax(M) == [span((1, 0)), span((0, 1))]


def test_non_proper_dilation_rejected():
    with pytest.raises(ValueError, match="raw"):
        DilationFamily.from_degrees({0: [[1]], 1: [[1]]}, QQ)
    assert DilationFamily.from_degrees({0: [[0]], 1: [[1]]}, QQ).degree == 1


def test_dimension_checks():
    dil = DilationFamily.from_degrees({1: [[1, 0]]}, QQ)
    with pytest.raises(ql.DimensionMismatchError):
        lm.normal_form(dil, InputSet((FinitePoints(((1,),)),)))
    with pytest.raises(ValueError):
        Polytope(((1,), (1,)))
    with pytest.raises(ValueError):
        InputSet(())


def test_curve_coset_example():
    sigma = lm.PolyVec(((QQ(1), QQ(2)), (QQ(0), QQ(1)), (QQ(0), QQ(3))))
    cbar, V = lm.poly_curve_coset(sigma)
    assert V == span((0, 1))
    assert cbar == (QQ(1), QQ(0))


def test_translated_body_limits():
    a = lm.PolyVec(((QQ(0),), (QQ(1),)))
    body = Polytope(((QQ(0),), (QQ(2),)))
    lim = lm.translated_body_limits(a, body, LatticeBasis.standard(QQ, 1))
    assert lim.Vclosed.is_full()
    assert lm.classify_body(lim) is Convergence.NOT_FULL


def test_nonconvergence_index_interval():
    a = lm.PolyVec(((QQ(0),), (QQ(1),)))
    body = Polytope(((QQ(0),), (QQ(2),)))
    lim = lm.translated_body_limits(a, body, LatticeBasis.standard(QQ, 1))
    assert lm.nonconvergence_index(lim, lim.lattice, 4, margin=0.4) == 3
    assert lm.nonconvergence_index(lim, lim.lattice, 2, margin=0.4) is None


def test_nonconvergence_index_contract():
    dil = DilationFamily.from_degrees({1: [[1], [0]], 2: [[0], [1]]}, QQ)
    M = lm.normal_form(dil, InputSet((Polytope(((0,), (1,))),)))
    with pytest.raises(lm.ContractError):
        lm.nonconvergence_index(M, Z2, 3)


def test_abelianize_dilation_heisenberg():
    H = up.heisenberg_spec(K2)
    dil = DilationFamily.from_degrees({1: [[1], [th], [5]], 2: [[0], [0], [1]]}, K2)
    ab = lm.abelianize_dilation(dil, H)
    assert ab.m == 2
    assert ab.matrices[0] == ((K2(1),), (th,))
    assert ab.matrices[1] == ((K2(0),), (K2(0),))


def test_abelianization_equivalence_for_abelian_group():
    A = up.abelian_spec(2, K2)
    dil = DilationFamily.from_degrees({1: [[1], [th]]}, K2)
    X = InputSet((Polytope(((0,), (1,))),))
    direct = lm.classify_convergence(lm.normal_form(dil, X), LatticeBasis.standard(K2, 2))
    via = lm.classify_convergence(lm.normal_form(lm.abelianize_dilation(dil, A), X),
                                  up.project_lattice(up.integer_lattice(A)))
    assert direct is via is Convergence.FULL


@given(st.integers(min_value=0, max_value=10 ** 6))
def test_clause_one_exactness(seed):
    rng = random.Random(seed)
    dil, X = random_scenario(rng)
    M = lm.normal_form(dil, X)
    for _ in range(3):
        t = K2(Fraction(rng.randint(-50, 50), rng.randint(1, 9)))
        piece = rng.choice(X.pieces)
        x = random_hull_point(rng, piece)
        assert M.contains_point(t, dil.apply(t, x))
