"""Scenario files: parsing, validation and the bundled examples.

A scenario is a JSON object (``spec_version`` 1). Scalars are integers,
``"p/q"`` strings, or coefficient lists over the field's power basis.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Any

from . import limits as lm
from . import qlinalg as ql
from . import unipotent as up
from .numeric import EmbeddingConfig, Schedule
from .scalar import QQ, NumberField

SPEC_VERSION = 1
MODES = ("abelian", "unipotent", "translated_body", "raw")
DEFAULT_TOLERANCES = {
    "sound": 0.05,
    "complete": 0.05,
    "fullspace": 0.05,
    "proper": 0.1,
    "heis_fullspace": 0.1,
    "heis_proper": 0.2,
}


class ScenarioError(ValueError):
    """Schema or consistency problem, with the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


# --- parsing helpers ---------------------------------------------------------


def _scalar(K: NumberField, value, path: str):
    try:
        return K(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise ScenarioError(path, f"bad scalar {value!r} ({exc})") from None


def _vector(K: NumberField, value, path: str, dim: int | None = None) -> tuple:
    if not isinstance(value, list):
        raise ScenarioError(path, "expected a list")
    if dim is not None and len(value) != dim:
        raise ScenarioError(path, f"expected length {dim}, got {len(value)}")
    return tuple(_scalar(K, x, f"{path}[{i}]") for i, x in enumerate(value))


def _matrix(K: NumberField, value, path: str, shape: tuple | None = None) -> tuple:
    if not isinstance(value, list) or not value:
        raise ScenarioError(path, "expected a non-empty list of rows")
    rows = tuple(_vector(K, r, f"{path}[{i}]", shape[1] if shape else None) for i, r in enumerate(value))
    if shape and len(rows) != shape[0]:
        raise ScenarioError(path, f"expected {shape[0]} rows, got {len(rows)}")
    if len({len(r) for r in rows}) != 1:
        raise ScenarioError(path, "ragged matrix")
    return rows


def _field(value, path: str = "field") -> NumberField:
    if value is None or value in ("Q", "QQ"):
        return QQ
    if isinstance(value, str) and value.startswith("sqrt:"):
        return NumberField.sqrt(int(value[5:]))
    if not isinstance(value, dict) or "minpoly" not in value:
        raise ScenarioError(path, "expected 'Q', 'sqrt:N' or {minpoly, root_between}")
    try:
        return NumberField(value["minpoly"], value.get("root_between"), value.get("name"))
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from None


def parse_field(value) -> NumberField:
    return _field(value)


def _pieces(K: NumberField, value, path: str, k: int | None) -> tuple:
    if not isinstance(value, list) or not value:
        raise ScenarioError(path, "expected a non-empty list of pieces")
    out = []
    for i, piece in enumerate(value):
        p = f"{path}[{i}]"
        if not isinstance(piece, dict) or len(piece) != 1:
            raise ScenarioError(p, "a piece is {'points': [...]} or {'polytope': [...]}")
        kind, pts = next(iter(piece.items()))
        vecs = tuple(_vector(K, v, f"{p}.{kind}[{j}]", k) for j, v in enumerate(pts or []))
        try:
            out.append(lm.FinitePoints(vecs) if kind == "points" else lm.Polytope(vecs) if kind == "polytope"
                       else None)
        except ValueError as exc:
            raise ScenarioError(p, str(exc)) from None
        if out[-1] is None:
            raise ScenarioError(p, f"unknown piece kind {kind!r}")
    return tuple(out)


def _degree_matrices(K: NumberField, value, path: str) -> dict[int, tuple]:
    if not isinstance(value, dict) or not value:
        raise ScenarioError(path, "expected {degree: matrix}")
    mats, shape = {}, None
    for key, M in value.items():
        try:
            d = int(key)
        except ValueError:
            raise ScenarioError(f"{path}.{key}", "degree keys must be integers") from None
        if d < 0:
            raise ScenarioError(f"{path}.{key}", "negative degree")
        mats[d] = _matrix(K, M, f"{path}.{key}", shape)
        shape = (len(mats[d]), len(mats[d][0]))
    return mats


def _schedule(value, path: str = "schedule") -> Schedule:
    try:
        if value is None:
            return Schedule.geometric()
        if "t_values" in value:
            return Schedule(tuple(value["t_values"]))
        if "geometric" in value:
            return Schedule.geometric(*value["geometric"])
    except (ValueError, TypeError) as exc:
        raise ScenarioError(path, str(exc)) from None
    raise ScenarioError(path, "expected {'t_values': [...]} or {'geometric': [start, stop, per_decade]}")


_EMBED_KEYS = {"sample_density", "offset_window", "max_samples", "min_samples", "completeness_grid",
               "completeness_cap", "completeness_t_samples", "full_grid_cap", "precision", "seed"}


def _embedding(value, path: str = "embedding") -> EmbeddingConfig:
    value = value or {}
    unknown = set(value) - _EMBED_KEYS
    if unknown:
        raise ScenarioError(path, f"unknown keys {sorted(unknown)}")
    try:
        return EmbeddingConfig(**value)
    except (ValueError, TypeError) as exc:
        raise ScenarioError(path, str(exc)) from None


# --- the scenario ------------------------------------------------------------


@dataclass
class Scenario:
    id: str
    mode: str
    field: NumberField
    schedule: Schedule
    embedding: EmbeddingConfig
    tolerances: dict
    description: str = ""
    lattice: ql.LatticeBasis | None = None
    group: up.UnipotentGroupSpec | None = None
    group_lattice: up.GroupLattice | None = None
    dilation: lm.DilationFamily | None = None
    raw_matrices: dict | None = None
    input_set: lm.InputSet | None = None
    translate: lm.PolyVec | None = None
    body: Any = None
    lattice_scale: int = 1
    heis: dict = field(default_factory=dict)
    nonconvergence_N_max: int | None = None
    source: dict = field(default_factory=dict, repr=False)

    # heisenberg fullspace check knobs
    @property
    def heis_check(self) -> bool:
        return bool(self.heis) and self.group is not None and self.group.is_heisenberg()

    @property
    def heis_grid(self) -> int:
        return int(self.heis.get("grid", 20))

    @property
    def heis_density(self) -> float:
        return float(self.heis.get("sample_density", 20))

    @property
    def heis_min_samples(self) -> int:
        return int(self.heis.get("min_samples", 100_000))

    @property
    def heis_t_max(self) -> float:
        return float(self.heis.get("t_max", 1e3))

    def with_lattice_scale(self, n: int) -> "Scenario":
        if n < 1:
            raise ScenarioError("lattice_scale", "must be a positive integer")
        if self.mode == "unipotent" and n != 1:
            raise ScenarioError("lattice_scale", "not supported in unipotent mode")
        return replace(self, lattice_scale=self.lattice_scale * n)

    @cached_property
    def torus_lattice(self) -> ql.LatticeBasis:
        """Lattice of the torus the analytic pipeline works on."""
        if self.mode == "unipotent":
            B = up.project_lattice(self.group_lattice, self.group)
        else:
            B = self.lattice
        return B.scaled(self.lattice_scale) if self.lattice_scale != 1 else B

    def analytic_dilation(self) -> lm.DilationFamily:
        if self.mode == "unipotent":
            return lm.abelianize_dilation(self.dilation, self.group)
        return self.dilation

    @cached_property
    def _family(self) -> lm.MultiCosetFamily:
        return lm.normal_form(self.analytic_dilation(), self.input_set)

    def analytic_family(self) -> lm.MultiCosetFamily:
        return self._family

    def classification(self) -> lm.Convergence:
        if self.mode == "translated_body":
            return lm.classify_body(self.predicted())
        return lm.classify_convergence(self._family, self.torus_lattice)

    @cached_property
    def _predicted(self):
        if self.mode == "raw":
            raise ScenarioError("mode", "raw scenarios have no analytic prediction")
        if self.mode == "translated_body":
            return lm.translated_body_limits(self.translate, self.body, self.torus_lattice)
        return lm.limit_family(self._family, self.torus_lattice)

    def predicted(self):
        return self._predicted


def _require(d: dict, key: str, path: str = ""):
    if key not in d:
        raise ScenarioError(f"{path}{key}", "missing required field")
    return d[key]


def _group(K: NumberField, value) -> up.UnipotentGroupSpec:
    if isinstance(value, str):
        try:
            return up.builtin_spec(value, K)
        except ValueError as exc:
            raise ScenarioError("group", str(exc)) from None
    if isinstance(value, dict) and "algebra_basis" in value:
        basis = [_matrix(K, M, f"group.algebra_basis[{i}]") for i, M in enumerate(value["algebra_basis"])]
        try:
            return up.UnipotentGroupSpec(len(basis[0]), tuple(basis), value.get("name"), K)
        except ValueError as exc:
            raise ScenarioError("group", str(exc)) from None
    raise ScenarioError("group", "expected a builtin name or {'algebra_basis': [...]}")


def _torus_lattice(K: NumberField, value, m: int) -> ql.LatticeBasis:
    try:
        if value in (None, "standard", "integer"):
            return ql.LatticeBasis.standard(K, m)
        if isinstance(value, dict) and "basis" in value:
            cols = [_vector(K, c, f"lattice.basis[{i}]", m) for i, c in enumerate(value["basis"])]
            if len(cols) != m:
                raise ScenarioError("lattice.basis", f"expected {m} columns")
            return ql.LatticeBasis.from_columns(cols, K)
        if isinstance(value, dict) and "generators" in value:
            gens = [_vector(K, g, f"lattice.generators[{i}]", m) for i, g in enumerate(value["generators"])]
            return ql.hnf(gens, field=K)
    except ql.DegenerateLatticeError as exc:
        raise ScenarioError("lattice", str(exc)) from None
    raise ScenarioError("lattice", "expected 'standard', {'basis': columns} or {'generators': vectors}")


def _group_lattice(K: NumberField, spec: up.UnipotentGroupSpec, value) -> up.GroupLattice:
    if value in (None, "integer", "standard"):
        return up.integer_lattice(spec)
    if isinstance(value, dict) and "generators" in value:
        gens = [_matrix(K, g, f"lattice.generators[{i}]", (spec.n, spec.n)) for i, g in enumerate(value["generators"])]
        try:
            return up.GroupLattice(tuple(gens), spec)
        except ValueError as exc:
            raise ScenarioError("lattice", str(exc)) from None
    raise ScenarioError("lattice", "expected 'integer' or {'generators': [matrices]}")


def parse_scenario(data: dict, *, default_id: str = "scenario") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("", "scenario must be a JSON object")
    version = data.get("spec_version", SPEC_VERSION)
    if version != SPEC_VERSION:
        raise ScenarioError("spec_version", f"unsupported version {version!r}")
    mode = data.get("mode", "abelian")
    if mode not in MODES:
        raise ScenarioError("mode", f"expected one of {MODES}")
    K = _field(data.get("field"))
    tol = {**DEFAULT_TOLERANCES, **data.get("tolerances", {})}
    checks = data.get("checks", {})
    sc = Scenario(
        id=str(data.get("id", default_id)),
        mode=mode,
        field=K,
        schedule=_schedule(data.get("schedule")),
        embedding=_embedding(data.get("embedding")),
        tolerances=tol,
        description=str(data.get("description", "")),
        heis=dict(checks.get("heisenberg", {})),
        nonconvergence_N_max=checks.get("nonconvergence_N_max"),
        source=data,
    )

    if mode == "translated_body":
        tr = _require(data, "translate")
        if not isinstance(tr, list) or not tr:
            raise ScenarioError("translate", "expected a list of coefficient vectors (degree 0, 1, ...)")
        m = len(tr[0]) if isinstance(tr[0], list) else 0
        coeffs = tuple(_vector(K, c, f"translate[{i}]", m) for i, c in enumerate(tr))
        sc.translate = lm.PolyVec(coeffs)
        body = _pieces(K, [_require(data, "body")], "body", m)[0]
        if not isinstance(body, lm.Polytope):
            body = lm.Polytope(body.points)
        sc.body = body
        sc.lattice = _torus_lattice(K, data.get("lattice"), m)
        return sc

    mats = _degree_matrices(K, _require(data, "dilation"), "dilation")
    m, k = len(next(iter(mats.values()))), len(next(iter(mats.values()))[0])
    sc.input_set = lm.InputSet(_pieces(K, _require(data, "input_set"), "input_set", k))

    if mode == "raw":
        sc.raw_matrices = mats
        sc.lattice = _torus_lattice(K, data.get("lattice"), m)
        return sc

    if 0 in mats and any(x for row in mats[0] for x in row):
        raise ScenarioError("dilation.0", "dilation is not proper (nonzero constant term); use mode 'raw'")
    sc.dilation = lm.DilationFamily.from_degrees({d: M for d, M in mats.items() if d > 0}, K)
    if mode == "unipotent":
        sc.group = _group(K, _require(data, "group"))
        if m != sc.group.dim:
            raise ScenarioError("dilation", f"expected {sc.group.dim} rows (algebra dimension), got {m}")
        sc.group_lattice = _group_lattice(K, sc.group, data.get("lattice"))
    else:
        sc.lattice = _torus_lattice(K, data.get("lattice"), m)
    return sc


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario file, or a bundled scenario by name."""
    path = Path(source)
    if not path.exists() and str(source) in bundled_names():
        return bundled(str(source))
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError("", f"cannot read {source}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(data, default_id=path.stem)


def _bundle_dir():
    return resources.files("nilflow") / "scenarios"


def bundled_names() -> list[str]:
    return sorted(p.name[:-5] for p in _bundle_dir().iterdir() if p.name.endswith(".json"))


def bundled(name: str) -> Scenario:
    entry = _bundle_dir() / f"{name}.json"
    if not entry.is_file():
        raise ScenarioError("", f"no bundled scenario named {name!r}")
    return parse_scenario(json.loads(entry.read_text()), default_id=name)
