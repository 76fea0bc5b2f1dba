import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from nilflow import unipotent as up
from nilflow import qlinalg as ql
from nilflow.scalar import QQ

from conftest import K2, scalars

th = K2.gen


def random_strict(rng, n, K=K2):
    return tuple(
        tuple(K([rng.randint(-4, 4), rng.randint(-3, 3)]) if j > i else K(0) for j in range(n)) for i in range(n)
    )


def test_heisenberg_law_matches_matrices():
    H = up.heisenberg_spec(K2)
    g = up.heis_element(1, th, 3, H)
    h = up.heis_element(2, 5, th, H)
    a, b, c = g.heis
    d, e, f = h.heis
    assert (g * h).heis == (a + d, b + e, a * e + c + f)
    assert g.inv().heis == (-a, -b, a * b - c)
    assert (g * g.inv()).heis == (K2(0), K2(0), K2(0))


def test_exp_of_algebra_coordinates():
    H = up.heisenberg_spec(K2)
    g = H.exp_coords((K2(1), th, K2(3)))
    assert g.heis == (K2(1), th, 3 + th / 2)
    assert H.log_coords(g) == (K2(1), th, K2(3))


def test_exp_log_roundtrip_small():
    rng = random.Random(1)
    for n in (2, 3, 4, 5):
        A = random_strict(rng, n)
        assert up.log(up.exp(A)) == A
        g = up.exp(A)
        assert up.exp(up.log(g)) == g
        assert up.mat_mul(g, up.group_inv(g)) == up.mat_eye(K2, n)


def test_exp_is_finite_series_for_nilpotent():
    A = up.elementary(QQ, 3, 0, 1)
    B = up.elementary(QQ, 3, 1, 2)
    S = up.mat_add(A, B)
    E = up.exp(S)
    assert E[0][2] == QQ("1/2") and E[0][1] == QQ(1) and E[1][2] == QQ(1)


def test_spec_validation():
    E01 = up.elementary(QQ, 3, 0, 1)
    E12 = up.elementary(QQ, 3, 1, 2)
    with pytest.raises(ValueError):
        up.UnipotentGroupSpec(3, (E01, E12))  # bracket E02 missing
    with pytest.raises(ValueError):
        up.UnipotentGroupSpec(3, (E01, E01))
    with pytest.raises(ValueError):
        up.UnipotentGroupSpec(2, (((QQ(1), QQ(0)), (QQ(0), QQ(0))),))
    with pytest.raises(ValueError):
        up.builtin_spec("nonsense")


def test_builtin_specs():
    assert up.builtin_spec("heisenberg3").dim == 3
    assert up.builtin_spec("full_un:4").dim == 6
    assert up.builtin_spec("abelian:3").dim == 3
    assert up.builtin_spec("full_un:3").is_heisenberg()


@pytest.mark.parametrize("name, m_ab", [("heisenberg3", 2), ("full_un:4", 3), ("abelian:2", 2)])
def test_abelianization_dimensions(name, m_ab):
    spec = up.builtin_spec(name)
    ab = up.abelianization(spec)
    assert ab.m_ab == m_ab
    for v in ab.commutator.basis:
        assert ql.is_zero(ab.apply(v))


def test_heisenberg_abelianization_drops_centre():
    H = up.heisenberg_spec(K2)
    ab = up.abelianization(H)
    assert ab.apply((K2(1), th, K2(7))) == (K2(1), th)
    B = up.project_lattice(up.integer_lattice(H))
    assert B == ql.LatticeBasis.standard(K2, 2)


def test_project_lattice_scaled_generators():
    H = up.heisenberg_spec(QQ)
    gens = (up.heis_element(2, 0, 0, H).matrix, up.heis_element(0, 3, 0, H).matrix, up.heis_element(0, 0, 1, H).matrix)
    B = up.project_lattice(up.GroupLattice(gens, H))
    assert sorted((c[0].to_fraction(), c[1].to_fraction()) for c in B.columns) == [(0, 3), (2, 0)]


def test_irrational_projection_rejected():
    H = up.heisenberg_spec(K2)
    gens = (up.heis_element(th, 0, 0, H).matrix, up.heis_element(0, 1, 0, H).matrix, up.heis_element(0, 0, 1, H).matrix)
    with pytest.raises(up.UnsupportedLatticeError):
        up.project_lattice(up.GroupLattice(gens, H))


def test_group_membership():
    U4 = up.full_un_spec(4)
    assert U4.contains(up.exp(up.elementary(QQ, 4, 0, 3)))
    A2 = up.abelian_spec(2)
    assert A2.contains(up.exp(up.elementary(QQ, 3, 0, 2)))
    assert not A2.contains(up.exp(up.elementary(QQ, 3, 1, 2)))
    with pytest.raises(ValueError):
        up.GroupElement(((QQ(2), QQ(0)), (QQ(0), QQ(1))))


@given(scalars(), scalars(), scalars(), scalars(), scalars(), scalars())
def test_heisenberg_associative_and_exp_log(a, b, c, d, e, f):
    H = up.heisenberg_spec(K2)
    g, h = up.heis_element(a, b, c, H), up.heis_element(d, e, f, H)
    k = up.heis_element(f, d, e, H)
    assert (g * h) * k == g * (h * k)
    coords = H.log_coords(g * h)
    assert H.exp_coords(coords) == g * h
