"""Command-line front end. Reports go to stdout as JSON, diagnostics to stderr.

Exit codes: 0 success or inconclusive, 2 input error, 3 domain or sampling
error, 4 the two Lagrangians were distinguished.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .distribution import (
    RankExperiment,
    RankInconsistencyError,
    SamplingError,
    generic_rank,
)
from .equivalence import (
    Automorphism,
    EmptyGridError,
    GuardViolation,
    check_candidate,
    distinguish,
    grid_points,
    transform_lagrangian,
)
from .expr import ParseError, evaluate, to_string
from .expr.evaluate import EvaluationDomainError, UnboundVariableError
from .invariants import DomainError, Lagrangian, hessian, invariant_values, j1_names
from .jetcalc import JetError
from .prolong import ProjectableField, lift_order

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_DISTINGUISHED = 0, 2, 3, 4


class InputError(ValueError):
    pass


# JSON with 17 significant digits for every float

def _fmt_float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    s = format(v, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj: Any, indent: int | None, level: int) -> str:
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(bool(obj) if obj is not None else None)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        items = [(json.dumps(str(k)), _encode(v, indent, level + 1)) for k, v in obj.items()]
        if not items:
            return "{}"
        if indent is None:
            return "{" + ", ".join(f"{k}: {v}" for k, v in items) + "}"
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        return "{\n" + ",\n".join(f"{inner}{k}: {v}" for k, v in items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        parts = [_encode(v, indent, level + 1) for v in obj]
        if not parts:
            return "[]"
        if indent is None:
            return "[" + ", ".join(parts) + "]"
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        return "[\n" + ",\n".join(inner + p for p in parts) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int | None = 2) -> str:
    return _encode(obj, indent, 0)


# problem files, grids and seeds

DEFAULT_AXES = {"x": [-0.5, 0.5], "y": [-0.5, 0.5], "dy": [0.5, 1.0, 1.5]}


def default_grid(m: int) -> dict[str, list[float]]:
    grid = {"x": list(DEFAULT_AXES["x"])}
    for i in range(1, m + 1):
        grid[f"y{i}"] = list(DEFAULT_AXES["y"])
    for i in range(1, m + 1):
        grid[f"dy{i}"] = list(DEFAULT_AXES["dy"])
    return grid


def _axis(spec: Any) -> list[float]:
    """A list of values, {"values": [...]}, or {"range": [lo, hi], "count": n}."""
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if isinstance(spec, list):
        return [float(v) for v in spec]
    if isinstance(spec, dict):
        if "values" in spec:
            return [float(v) for v in spec["values"]]
        if "range" in spec:
            lo, hi = spec["range"]
            n = int(spec.get("count", 2))
            if n < 1:
                raise InputError("grid count must be positive")
            return np.linspace(float(lo), float(hi), n).tolist()
    raise InputError(f"cannot read grid axis {spec!r}")


def parse_grid_flag(text: str) -> dict[str, list[float]]:
    """``name=v1,v2;name=lo:hi:n`` (separate axes by ';')."""
    out = {}
    for part in filter(None, (s.strip() for s in text.split(";"))):
        if "=" not in part:
            raise InputError(f"grid entry {part!r} needs the form name=values")
        name, values = (s.strip() for s in part.split("=", 1))
        try:
            if ":" in values:
                lo, hi, n = values.split(":")
                out[name] = np.linspace(float(lo), float(hi), int(n)).tolist()
            else:
                out[name] = [float(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise InputError(f"cannot read grid values {values!r}") from None
    return out


def resolve_grid(m: int, problem: dict | None, flags: Sequence[str] | None) -> dict:
    grid = default_grid(m)
    if problem and "grid" in problem:
        grid.update({k: _axis(v) for k, v in problem["grid"].items()})
    for text in flags or ():
        grid.update(parse_grid_flag(text))
    unknown = set(grid) - set(j1_names(m))
    if unknown:
        raise InputError(f"grid names unknown variables {sorted(unknown)}")
    if any(not v for v in grid.values()):
        raise InputError("grid axes must be non-empty")
    return grid


def resolve_seed(flag: int | None, problem: dict | None = None) -> int:
    if flag is not None:
        return flag
    if problem and "seed" in problem:
        return int(problem["seed"])
    env = os.environ.get("JETINV_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise InputError(f"JETINV_SEED must be an integer, got {env!r}") from None
    return 0


def load_problem(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            problem = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read problem file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"problem file is not valid JSON: {exc}") from None
    if not isinstance(problem, dict):
        raise InputError("problem file must hold a JSON object")
    return problem


def _problem_m(args, problem) -> int:
    m = args.m
    if problem and "m" in problem:
        if m is not None and m != problem["m"]:
            raise InputError(f"--m {m} conflicts with m = {problem['m']} in the problem file")
        m = int(problem["m"])
    if m is None:
        raise InputError("fiber dimension missing: pass --m or set m in the problem file")
    if m < 1:
        raise InputError("m must be positive")
    return m


def _lagrangian(text: str, m: int) -> Lagrangian:
    try:
        return Lagrangian.parse(text, m)
    except ParseError as exc:
        raise InputError(f"cannot parse Lagrangian {text!r}: {exc}") from None


def _automorphism(spec: dict, m: int) -> Automorphism:
    try:
        Phi = Automorphism.parse(spec["phi"], list(spec["psi"]))
    except KeyError as exc:
        raise InputError(f"automorphism needs 'phi' and 'psi', missing {exc}") from None
    if Phi.m != m:
        raise InputError(f"automorphism has {Phi.m} psi components, expected {m}")
    return Phi


def _parse_point(text: str) -> dict[str, float]:
    out = {}
    for part in filter(None, (s.strip() for s in text.split(","))):
        name, _, value = part.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise InputError(f"cannot read point entry {part!r}") from None
    return out


# commands

def cmd_prolong(args) -> tuple[dict, int]:
    m = _problem_m(args, None)
    v = args.v if args.v else ["0"] * m
    if len(v) != m:
        raise InputError(f"expected {m} components for --v, got {len(v)}")
    X = ProjectableField.parse(args.u, v)
    L = lift_order(X, args.order)
    report = {"m": m, "order": args.order,
              "coefficients": {k: to_string(e) for k, e in L.coefficients.items()}}
    if args.point:
        p = _parse_point(args.point)
        report["point"] = p
        report["values"] = {k: evaluate(e, p) for k, e in L.coefficients.items()}
    return report, EXIT_OK


def cmd_rank(args) -> tuple[dict, int]:
    m = _problem_m(args, None)
    if not 1 <= m <= 5:
        raise InputError("rank supports m in 1..5")
    seed = resolve_seed(args.seed)
    exp = RankExperiment(m, args.order, samples=args.samples, points=args.points,
                         tolerance=args.tol if args.tol is not None else 1e-9, seed=seed)
    res = generic_rank(exp)
    report = {"m": m, "order": args.order, "ambient": res.ambient, "rank": res.rank,
              "expected": res.expected, "match": res.match, "seed": seed,
              "points": exp.points, "agreeing": res.agreeing, "ranks": res.ranks,
              "samples": exp.samples, "tolerance": exp.tolerance,
              "singular_values": res.singular_values}
    return report, EXIT_OK


def _lagrangian_texts(args, problem) -> dict[str, str]:
    texts = dict(problem.get("lagrangians", {})) if problem else {}
    for name, text in (("L", getattr(args, "lagrangian", None)),
                       ("L1", getattr(args, "l1", None)), ("L2", getattr(args, "l2", None))):
        if text:
            texts[name] = text
    return texts


def cmd_invariant(args) -> tuple[dict, int]:
    problem = load_problem(args.problem) if args.problem else None
    m = _problem_m(args, problem)
    texts = _lagrangian_texts(args, problem)
    if not texts:
        raise InputError("no Lagrangian given: use --lagrangian or a problem file")
    grid = resolve_grid(m, problem, args.grid)
    points = grid_points(grid, m)
    report, any_ok = {"m": m, "grid": grid, "lagrangians": {}}, False
    for name, text in texts.items():
        L = _lagrangian(text, m)
        entries = []
        for p in points:
            entry: dict[str, Any] = {"point": p}
            try:
                val = invariant_values(L, p)
                entry.update(V=val.V, I=val.I)
                if val.K is not None:
                    entry["K"] = val.K
                sig = hessian(L, p).signature
                entry["signature"] = list(sig) if sig else None
                any_ok = True
            except (DomainError, EvaluationDomainError) as exc:
                entry["error"] = str(exc)
                entry["locus"] = getattr(exc, "locus", None)
            entries.append(entry)
        report["lagrangians"][name] = {"expression": to_string(L.expr), "values": entries}
    if not any_ok:
        print("no grid point lies in the domain of I", file=sys.stderr)
        return report, EXIT_DOMAIN
    return report, EXIT_OK


def cmd_check(args) -> tuple[dict, int]:
    problem = load_problem(args.problem) if args.problem else None
    m = _problem_m(args, problem)
    texts = _lagrangian_texts(args, problem)
    names = list(problem.get("compare", [])) if problem else []
    if not names:
        names = ["L1", "L2"] if {"L1", "L2"} <= texts.keys() else list(texts)[:2]
    if len(names) != 2 or not set(names) <= texts.keys():
        raise InputError("check needs two Lagrangians (L1 and L2, or 'compare' in the problem file)")
    L1, L2 = (_lagrangian(texts[n], m) for n in names)
    candidate = None
    autos = problem.get("automorphisms", {}) if problem else {}
    cand_name = problem.get("candidate") if problem else None
    if args.phi or args.psi:
        candidate = _automorphism({"phi": args.phi or "x",
                                   "psi": args.psi or [f"y{i}" for i in range(1, m + 1)]}, m)
    elif cand_name:
        if cand_name not in autos:
            raise InputError(f"candidate {cand_name!r} is not among the automorphisms")
        candidate = _automorphism(autos[cand_name], m)
    elif len(autos) == 1:
        candidate = _automorphism(next(iter(autos.values())), m)
    tol = (problem or {}).get("tolerances", {})
    tol_abs = float(tol.get("abs", 1e-6))
    tol_rel = float(tol.get("rel", 1e-6))
    if args.tol is not None:
        tol_abs = tol_rel = args.tol
    vertical = args.vertical or bool((problem or {}).get("vertical", False))
    if vertical and candidate is not None and not candidate.vertical:
        raise InputError("--vertical was given but the candidate map is not vertical")
    points = grid_points(resolve_grid(m, problem, args.grid), m)
    verdict = distinguish(L1, L2, points, vertical=vertical, tol_abs=tol_abs,
                          tol_rel=tol_rel, candidate=candidate)
    report = {"m": m, "compare": names, "status": verdict.status,
              "witnesses": verdict.witnesses, "max_discrepancy": verdict.max_discrepancy,
              "tolerances": verdict.tolerances, "ranges": verdict.ranges,
              "candidate_residual": verdict.candidate_residual, "vertical": vertical,
              "points": len(points)}
    code = EXIT_DISTINGUISHED if verdict.status == "distinguished" else EXIT_OK
    return report, code


def cmd_transform(args) -> tuple[dict, int]:
    problem = load_problem(args.problem) if args.problem else None
    m = _problem_m(args, problem)
    texts = _lagrangian_texts(args, problem)
    if not texts:
        raise InputError("no Lagrangian given")
    if args.phi or args.psi:
        Phi = _automorphism({"phi": args.phi or "x",
                             "psi": args.psi or [f"y{i}" for i in range(1, m + 1)]}, m)
    else:
        autos = (problem or {}).get("automorphisms", {})
        if not autos:
            raise InputError("no automorphism given: use --phi/--psi or a problem file")
        Phi = _automorphism(next(iter(autos.values())), m)
    out = {}
    for name, text in texts.items():
        L = _lagrangian(text, m)
        Lbar = transform_lagrangian(L, Phi)
        entry = {"input": to_string(L.expr), "transformed": to_string(Lbar.expr)}
        if args.grid or (problem and "grid" in problem):
            points = grid_points(resolve_grid(m, problem, args.grid), m)
            entry["residual"] = check_candidate(L, Lbar, Phi, points).residual
        out[name] = entry
    report = {"m": m, "phi": to_string(Phi.phi), "psi": [to_string(e) for e in Phi.psi],
              "convention": "Lbar(p) = L(Phi1(p)) / phi'(x)", "lagrangians": out}
    return report, EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jetinv", description="Jet-bundle invariants of first-order Lagrangians.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=False, problem=False):
        p.add_argument("--m", type=int, help="fiber dimension")
        p.add_argument("--json-indent", type=int, default=2,
                       help="indentation of the JSON report (negative for one line)")
        if grid:
            p.add_argument("--grid", action="append",
                           help="axis values, e.g. 'dy1=0.5,1;x=-1:1:5' (repeatable)")
        if problem:
            p.add_argument("--problem", help="JSON problem file")

    p = sub.add_parser("prolong", help="print the lift of a projectable field")
    common(p)
    p.add_argument("--u", default="0", help="u(x)")
    p.add_argument("--v", nargs="+", help="v1 .. vm as functions of x, y1..ym")
    p.add_argument("--order", type=int, choices=(0, 1, 2), default=1)
    p.add_argument("--point", help="evaluate at 'x=..,y1=..,z=..,z_x=..'")
    p.set_defaults(func=cmd_prolong)

    p = sub.add_parser("rank", help="estimate the generic rank of the lifted distribution")
    common(p)
    p.add_argument("--order", type=int, choices=(0, 1, 2), default=2)
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float, help="relative singular-value cutoff")
    p.add_argument("--samples", type=int, help="field-data draws per point")
    p.add_argument("--points", type=int, default=20)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("invariant", help="evaluate V, I (and K for m = 2) on a grid")
    common(p, grid=True, problem=True)
    p.add_argument("--lagrangian", "-L", help="Lagrangian expression")
    p.set_defaults(func=cmd_invariant)

    p = sub.add_parser("check", help="compare two Lagrangians through their invariants")
    common(p, grid=True, problem=True)
    p.add_argument("--l1", help="first Lagrangian")
    p.add_argument("--l2", help="second Lagrangian")
    p.add_argument("--phi", help="candidate phi(x)")
    p.add_argument("--psi", nargs="+", help="candidate psi components")
    p.add_argument("--tol", type=float, help="absolute and relative range tolerance")
    p.add_argument("--vertical", action="store_true",
                   help="restrict to vertical maps and also compare K (m = 2)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("transform", help="transform a Lagrangian by an automorphism")
    common(p, grid=True, problem=True)
    p.add_argument("--lagrangian", "-L", help="Lagrangian expression")
    p.add_argument("--phi", help="phi(x)")
    p.add_argument("--psi", nargs="+", help="psi components")
    p.set_defaults(func=cmd_transform)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report, code = args.func(args)
    except (SamplingError, RankInconsistencyError, DomainError, EvaluationDomainError,
            GuardViolation, EmptyGridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InputError, ParseError, JetError, UnboundVariableError, KeyError, TypeError,
            ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    indent = args.json_indent if args.json_indent >= 0 else None
    print(dumps(report, indent))
    return code


if __name__ == "__main__":
    sys.exit(main())
