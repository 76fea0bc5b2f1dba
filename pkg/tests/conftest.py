from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from nilflow.scalar import NumberField, QQ

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

K2 = NumberField.sqrt(2)
K3 = NumberField([-2, 0, 0, 1], (1, 2), name="cbrt2")


@pytest.fixture
def K():
    return K2


small_fractions = st.fractions(min_value=-12, max_value=12, max_denominator=7)


def scalars(field=K2, elements=small_fractions):
    return st.lists(elements, min_size=field.degree, max_size=field.degree).map(field)


def vectors(m, field=K2):
    return st.lists(scalars(field), min_size=m, max_size=m).map(tuple)


def frac(x):
    return Fraction(x)


__all__ = ["K2", "K3", "QQ", "scalars", "vectors", "small_fractions"]
