"""Exact Hausdorff limits of polynomial dilations on tori and nilmanifolds.

Exact algebra lives in :mod:`nilflow.scalar`, :mod:`nilflow.qlinalg` and
:mod:`nilflow.unipotent`; the limit predictions in :mod:`nilflow.limits`;
floating-point verification in :mod:`nilflow.numeric`.
"""

from .scalar import QQ, NumberField, Scalar
from .qlinalg import LatticeBasis, Subspace, rational_closure, hnf
from .limits import (
    Convergence,
    DilationFamily,
    FinitePoints,
    InputSet,
    Polytope,
    classify_convergence,
    limit_family,
    normal_form,
)

__version__ = "0.1.0"

__all__ = [
    "QQ", "NumberField", "Scalar", "LatticeBasis", "Subspace", "rational_closure", "hnf",
    "Convergence", "DilationFamily", "FinitePoints", "InputSet", "Polytope",
    "classify_convergence", "limit_family", "normal_form",
]
