"""Command line front end: ``nilflow predict|verify|closure|scenarios``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import limits as lm
from . import qlinalg as ql
from .numeric import VerificationReport, verify_convergence
from .scenario import Scenario, ScenarioError, bundled, bundled_names, load_scenario, parse_field

__all__ = ["main", "analytic_summary", "run_verify", "VerificationReport"]


def _subspace_json(S: ql.Subspace) -> dict:
    return {"dim": S.dim, "basis": S.to_json()}


def _vec_json(v) -> list:
    return [x.to_json() for x in v]


def analytic_summary(sc: Scenario) -> dict:
    """Machine-readable prediction: normal form, SL_max, limit family, classification."""
    if sc.mode == "raw":
        raise ScenarioError("mode", "raw scenarios have no analytic prediction")
    B = sc.torus_lattice
    out = {"scenario": sc.id, "mode": sc.mode, "field": sc.field.to_json(), "lattice": B.to_json()}
    if sc.mode == "translated_body":
        pred = sc.predicted()
        out.update({
            "translate": pred.translate.to_json(),
            "body": [_vec_json(v) for v in pred.body.vertices],
            "cbar": _vec_json(pred.cbar),
            "V": _subspace_json(pred.V),
            "Vclosed": _subspace_json(pred.Vclosed),
            "classification": str(sc.classification()),
        })
        return out
    fam = sc.analytic_family()
    pred = sc.predicted()
    if sc.mode == "unipotent":
        out["abelianized_dilation"] = sc.analytic_dilation().to_json()
    out.update({
        "cosets": [{"p": c.p.to_json(), "L": _subspace_json(c.L)} for c in fam.cosets],
        "slmax": [_subspace_json(L) for L in lm.slmax(fam)],
        "closures": [_subspace_json(L) for L in pred.closures],
        "cbar": _vec_json(pred.cbar),
        "V": _subspace_json(pred.V),
        "Vclosed": _subspace_json(pred.Vclosed),
        "classification": str(sc.classification()),
    })
    return out


def _scalar_text(x) -> str:
    if not isinstance(x, list):
        return str(x)
    terms = []
    for i, c in enumerate(x):
        if c == "0":
            continue
        power = "" if i == 0 else ("θ" if i == 1 else f"θ^{i}")
        coef = "" if power and c == "1" else ("-" if power and c == "-1" else c + ("*" if power else ""))
        terms.append(coef + power)
    return " + ".join(terms) or "0"


def _vec_text(v) -> str:
    return "(" + ", ".join(_scalar_text(x) for x in v) + ")"


def _summary_text(s: dict) -> str:
    lines = [f"scenario {s['scenario']} ({s['mode']})"]

    def sub(S):
        return "0" if S["dim"] == 0 else "span{" + ", ".join(_vec_text(v) for v in S["basis"]) + "}"

    def poly(coeffs):
        terms = [(_vec_text(c), i) for i, c in enumerate(coeffs) if any(_scalar_text(x) != "0" for x in c)]
        return " + ".join(v if i == 0 else (f"t {v}" if i == 1 else f"t^{i} {v}") for v, i in terms) or "0"

    if "cosets" in s:
        for j, c in enumerate(s["cosets"]):
            lines.append(f"  coset {j}: p(t) = {poly(c['p'])}, L = {sub(c['L'])}")
        lines.append("  SL_max: " + "; ".join(sub(L) for L in s["slmax"]))
        for j, L in enumerate(s["closures"]):
            lines.append(f"  closure {j}: {sub(L)} (dim {L['dim']})")
    else:
        lines.append(f"  a(t) = {poly(s['translate'])}, body hull of " + ", ".join(_vec_text(v) for v in s["body"]))
    lines.append(f"  cbar = {_vec_text(s['cbar'])}")
    lines.append(f"  V = {sub(s['V'])}, Vclosed = {sub(s['Vclosed'])}")
    lines.append(f"  classification: {s['classification']}")
    return "\n".join(lines)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _load(name: str, scale: int | None) -> Scenario:
    sc = load_scenario(name)
    return sc.with_lattice_scale(scale) if scale and scale != 1 else sc


def cmd_predict(args) -> int:
    sc = _load(args.scenario, args.lattice_scale)
    summary = analytic_summary(sc)
    text = json.dumps(summary, indent=2, sort_keys=True) if args.json else _summary_text(summary)
    if args.out:
        _atomic_write(Path(args.out), json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(text)
    return 0


def run_verify(sc: Scenario, *, completeness: bool = True) -> VerificationReport:
    if sc.mode == "raw":
        return verify_convergence(sc)
    report = verify_convergence(sc, sc.predicted(), completeness=completeness)
    report.analytic = analytic_summary(sc)
    if sc.nonconvergence_N_max and sc.lattice_scale == 1:
        target = sc.predicted() if sc.mode == "translated_body" else sc.analytic_family()
        if sc.mode == "translated_body" or sc.classification() is lm.Convergence.NOT_FULL:
            N = lm.nonconvergence_index(target, sc.torus_lattice, sc.nonconvergence_N_max,
                                        schedule=sc.schedule, cfg=sc.embedding,
                                        margin=sc.tolerances["proper"])
            report.details["nonconvergence_index"] = N
    return report


def cmd_verify(args) -> int:
    sc = _load(args.scenario, args.lattice_scale)
    report = run_verify(sc, completeness=not args.no_completeness)
    out = Path(args.out)
    stem = sc.id if sc.lattice_scale == 1 else f"{sc.id}_x{sc.lattice_scale}"
    _atomic_write(out / f"{stem}.csv", report.csv_text())
    _atomic_write(out / f"{stem}.json", json.dumps(report.to_json(), indent=2, sort_keys=True, default=str) + "\n")
    if args.svg:
        _atomic_write(out / f"{stem}.svg", report.svg())
    print(report.csv_text(), end="")
    for k, v in sorted(report.details.items()):
        print(f"# {k}: {v}")
    for k, v in sorted(report.verdicts.items()):
        print(f"verdict {k}: {'pass' if v else 'FAIL'}")
    return 0 if report.passed else 2


def cmd_closure(args) -> int:
    K = parse_field(args.field if args.field.startswith(("Q", "sqrt:")) else json.loads(args.field))
    vectors = json.loads(args.subspace)
    if not vectors:
        raise ScenarioError("--subspace", "expected a non-empty list of vectors")
    m = len(vectors[0])
    L = ql.span([tuple(K(x) for x in v) for v in vectors], dim=m, field=K)
    lat = json.loads(args.lattice)
    B = (ql.LatticeBasis.standard(K, m) if lat == "standard"
         else ql.LatticeBasis.from_columns([tuple(K(x) for x in c) for c in lat], K))
    C = ql.rational_closure(L, B)
    if args.json:
        print(json.dumps(_subspace_json(C), sort_keys=True))
    else:
        print("full space" if C.is_full() else f"dim {C.dim}")
        for row in C.basis:
            print("  (" + ", ".join(str(x) for x in row) + ")")
    return 0


def cmd_scenarios(args) -> int:
    for name in bundled_names():
        sc = bundled(name)
        print(f"{name:28s} {sc.mode:16s} {sc.description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nilflow", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("predict", help="print the analytic limit family")
    pr.add_argument("scenario", help="scenario JSON file or bundled name")
    pr.add_argument("--json", action="store_true", help="print JSON instead of text")
    pr.add_argument("--out", help="also write the JSON summary here")
    pr.add_argument("--lattice-scale", type=int, default=None, metavar="N")
    pr.set_defaults(func=cmd_predict)

    vr = sub.add_parser("verify", help="run the numeric experiment and write reports")
    vr.add_argument("scenario")
    vr.add_argument("--out", default="reports", help="output directory (default: reports)")
    vr.add_argument("--svg", action="store_true", help="also write a d_H vs log t plot")
    vr.add_argument("--lattice-scale", type=int, default=None, metavar="N",
                    help="replace the lattice by N times itself")
    vr.add_argument("--no-completeness", action="store_true", help="skip the target search")
    vr.set_defaults(func=cmd_verify)

    cl = sub.add_parser("closure", help="rational closure of a subspace")
    cl.add_argument("--subspace", required=True, help='JSON list of vectors, e.g. [[1, [0, 1]]]')
    cl.add_argument("--lattice", default='"standard"', help='JSON list of basis columns or "standard"')
    cl.add_argument("--field", default="Q", help="Q, sqrt:N or a JSON {minpoly, root_between}")
    cl.add_argument("--json", action="store_true")
    cl.set_defaults(func=cmd_closure)

    sc = sub.add_parser("scenarios", help="list bundled scenarios")
    sc.set_defaults(func=cmd_scenarios)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
