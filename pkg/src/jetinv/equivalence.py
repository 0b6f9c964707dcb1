"""Bundle automorphisms acting on Lagrangians, and invariant-based comparison."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .expr import ZERO, Expr, Var, add, as_expr, compile_expressions, diff, div, mul, parse, substitute
from .expr.evaluate import EvaluationDomainError
from .invariants import DomainError, Lagrangian, gaussian_K, invariant_I, j1_names
from .prolong import base_names, velocity_names


class GuardViolation(ValueError):
    pass


class EmptyGridError(ValueError):
    pass


GUARD_MARGIN = 1e-6
CANDIDATE_TOL = 1e-8


@dataclass(frozen=True)
class Automorphism:
    """(x, y) -> (phi(x), psi(x, y)) on R x M."""

    phi: Expr
    psi: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "phi", as_expr(self.phi))
        object.__setattr__(self, "psi", tuple(as_expr(e) for e in self.psi))
        if not self.psi:
            raise ValueError("psi needs at least one component")
        if not self.phi.free <= {"x"}:
            raise ValueError("phi may depend on x only")
        allowed = set(base_names(self.m))
        for e in self.psi:
            if not e.free <= allowed:
                raise ValueError(f"psi may depend on x and y only, found {sorted(e.free - allowed)}")
        if self.dphi == ZERO:
            raise GuardViolation("phi' vanishes identically")

    @classmethod
    def parse(cls, phi: str, psi: Sequence[str]) -> Automorphism:
        return cls(parse(phi), tuple(parse(s) for s in psi))

    @classmethod
    def identity(cls, m: int) -> Automorphism:
        return cls(Var("x"), tuple(Var(f"y{i}") for i in range(1, m + 1)))

    @property
    def m(self) -> int:
        return len(self.psi)

    @property
    def vertical(self) -> bool:
        return self.phi == Var("x")

    @cached_property
    def dphi(self) -> Expr:
        return diff(self.phi, "x")

    @cached_property
    def prolonged_exprs(self) -> dict[str, Expr]:
        """Coordinates of the first prolongation as expressions on J^1."""
        out = {"x": self.phi}
        dys = velocity_names(self.m)
        for a, e in enumerate(self.psi, 1):
            out[f"y{a}"] = e
        for a, e in enumerate(self.psi, 1):
            total = add(diff(e, "x"), *(mul(diff(e, f"y{b}"), Var(dys[b - 1]))
                                        for b in range(1, self.m + 1)))
            out[f"dy{a}"] = div(total, self.dphi)
        return out

    @cached_property
    def _numeric(self):
        m = self.m
        exprs = [self.dphi] + [diff(e, f"y{b}") for e in self.psi for b in range(1, m + 1)]
        exprs += list(self.prolonged_exprs.values())
        return compile_expressions(exprs, j1_names(m))

    def _eval(self, p: Mapping[str, float]):
        m = self.m
        binding = {n: float(p.get(n, 0.0)) for n in j1_names(m)}
        try:
            with np.errstate(all="raise"):
                out = [float(v) for v in self._numeric(binding)]
        except (ZeroDivisionError, FloatingPointError, OverflowError, ValueError) as exc:
            raise GuardViolation(f"automorphism not defined at {binding}: {exc}") from None
        dphi = out[0]
        jac = np.array(out[1:1 + m * m]).reshape(m, m)
        image = dict(zip(j1_names(m), out[1 + m * m:]))
        return dphi, jac, image

    def check_guards(self, p: Mapping[str, float], margin: float = GUARD_MARGIN):
        dphi, jac, _ = self._eval(p)
        if abs(dphi) <= margin:
            raise GuardViolation(f"phi'(x) = {dphi:.3g} is too close to zero")
        if abs(np.linalg.det(jac)) <= margin:
            raise GuardViolation("d(psi)/dy is not invertible at the point")

    def dphi_at(self, p: Mapping[str, float]) -> float:
        return self._eval(p)[0]

    def fiber_jacobian(self, p: Mapping[str, float]) -> np.ndarray:
        """d(dy-bar)/d(dy) = (d psi / dy) / phi' at the point."""
        dphi, jac, _ = self._eval(p)
        return jac / dphi


def compose(outer: Automorphism, inner: Automorphism) -> Automorphism:
    """outer o inner: first apply inner, then outer."""
    if outer.m != inner.m:
        raise ValueError("fiber dimensions differ")
    repl = {"x": inner.phi, **{f"y{a}": e for a, e in enumerate(inner.psi, 1)}}
    return Automorphism(substitute(outer.phi, {"x": inner.phi}),
                        tuple(substitute(e, repl) for e in outer.psi))


def prolong_automorphism(Phi: Automorphism, p: Mapping[str, float]) -> dict[str, float]:
    """Image of a J^1 point under the first prolongation of Phi."""
    Phi.check_guards(p)
    return Phi._eval(p)[2]


def pullback_lagrangian(L: Lagrangian, Phi: Automorphism) -> Lagrangian:
    """L o Phi^(1), without the density factor."""
    if L.m != Phi.m:
        raise ValueError("fiber dimensions differ")
    return Lagrangian(substitute(L.expr, Phi.prolonged_exprs), L.m)


def transform_lagrangian(L: Lagrangian, Phi: Automorphism) -> Lagrangian:
    """L-bar = (L o Phi^(1)) / phi'."""
    return Lagrangian(div(pullback_lagrangian(L, Phi).expr, Phi.dphi), L.m)


@dataclass
class CandidateReport:
    residual: float
    residuals: list
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def check_candidate(L: Lagrangian, Lbar: Lagrangian, Phi: Automorphism,
                    points: Sequence[Mapping[str, float]],
                    tolerance: float = CANDIDATE_TOL) -> CandidateReport:
    """Does L-bar(p) = L(Phi^(1) p) / phi'(x) hold at every point?

    The residual at a point is |a - b| / max(|a|, |b|, 1).
    """
    if not points:
        raise EmptyGridError("no points to check")
    res = []
    for p in points:
        image = prolong_automorphism(Phi, p)
        a = Lbar.value(p)
        b = L.value(image) / Phi.dphi_at(p)
        res.append(abs(a - b) / max(abs(a), abs(b), 1.0))
    return CandidateReport(max(res), res, tolerance)


STATUSES = ("equivalent-under-given-map", "distinguished", "inconclusive")


@dataclass
class EquivalenceVerdict:
    status: str
    witnesses: list = field(default_factory=list)
    max_discrepancy: float = 0.0
    tolerances: dict = field(default_factory=dict)
    ranges: dict = field(default_factory=dict)
    candidate_residual: float | None = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")


def grid_points(grid: Mapping[str, Sequence[float]], m: int) -> list[dict[str, float]]:
    """Cartesian product of per-variable values over x, y1..ym, dy1..dym."""
    names = j1_names(m)
    missing = [n for n in names if n not in grid]
    if missing:
        raise ValueError(f"grid has no values for {missing}")
    extra = sorted(set(grid) - set(names))
    if extra:
        raise ValueError(f"grid names unknown variables {extra}")
    axes = [list(grid[n]) for n in names]
    if any(not ax for ax in axes):
        raise EmptyGridError("grid has an empty axis")
    return [dict(zip(names, map(float, combo))) for combo in itertools.product(*axes)]


def _sample(fn, L, points):
    out = []
    for k, p in enumerate(points):
        try:
            out.append((k, fn(L, p)))
        except (DomainError, EvaluationDomainError):
            continue
    return out


def _disjoint(a, b, tol_abs, tol_rel):
    va = [v for _, v in a]
    vb = [v for _, v in b]
    scale = max(max(map(abs, va)), max(map(abs, vb)))
    tol = tol_abs + tol_rel * scale
    lo_a, hi_a, lo_b, hi_b = min(va), max(va), min(vb), max(vb)
    disjoint = hi_a + tol < lo_b - tol or hi_b + tol < lo_a - tol
    return disjoint, tol, (lo_a, hi_a), (lo_b, hi_b)


def distinguish(L1: Lagrangian, L2: Lagrangian, points: Sequence[Mapping[str, float]],
                vertical: bool = False, tol_abs: float = 1e-6, tol_rel: float = 1e-6,
                candidate: Automorphism | None = None) -> EquivalenceVerdict:
    """Compare sampled ranges of I (and K for m = 2 when ``vertical``).

    Disjoint ranges certify that no automorphism maps one density to the other
    on the sampled region; overlapping ranges prove nothing.
    """
    if L1.m != L2.m:
        raise ValueError("Lagrangians have different fiber dimensions")
    if not points:
        raise EmptyGridError("empty grid")
    tolerances = {"abs": tol_abs, "rel": tol_rel, "candidate": CANDIDATE_TOL}
    residual = None
    if candidate is not None:
        report = check_candidate(L1, L2, candidate, points)
        residual = report.residual
        if report.passed:
            return EquivalenceVerdict("equivalent-under-given-map", [], report.residual,
                                      tolerances, {}, residual)
    tests = [("I", invariant_I)]
    if vertical and L1.m == 2:
        tests.append(("K", gaussian_K))
    status, witnesses, ranges, discrepancy = "inconclusive", [], {}, 0.0
    for name, fn in tests:
        a, b = _sample(fn, L1, points), _sample(fn, L2, points)
        if not a or not b:
            raise EmptyGridError(f"no grid point lies in the domain of {name} for both Lagrangians")
        disjoint, tol, ra, rb = _disjoint(a, b, tol_abs, tol_rel)
        ranges[name] = {"L1": list(ra), "L2": list(rb), "tol": tol}
        common = dict(a).keys() & dict(b).keys()
        da, db = dict(a), dict(b)
        if common:
            discrepancy = max(discrepancy, max(abs(da[k] - db[k]) for k in common))
        if disjoint:
            status = "distinguished"
            ka = min(a, key=lambda kv: kv[1]) if ra[0] > rb[1] else max(a, key=lambda kv: kv[1])
            kb = max(b, key=lambda kv: kv[1]) if ra[0] > rb[1] else min(b, key=lambda kv: kv[1])
            witnesses.append({"invariant": name,
                              "L1": {"point": dict(points[ka[0]]), "value": ka[1]},
                              "L2": {"point": dict(points[kb[0]]), "value": kb[1]}})
    return EquivalenceVerdict(status, witnesses, discrepancy, tolerances, ranges, residual)


def random_automorphism(m: int, rng: np.random.Generator, vertical: bool = False,
                        reverse: bool | None = None) -> Automorphism:
    """Polynomial automorphism, invertible on [-1, 1] x [-1, 1]^m.

    phi' stays within [0.5, 2.5] in absolute value there and d(psi)/dy is a
    perturbation of a signed diagonal matrix with entries of size >= 1.
    """
    from fractions import Fraction

    def q(lo, hi):
        return Fraction(round(rng.uniform(lo, hi), 3)).limit_denominator(1000)

    x = Var("x")
    ys = [Var(f"y{i}") for i in range(1, m + 1)]
    if vertical:
        phi = x
    else:
        sign = (-1 if rng.random() < 0.5 else 1) if reverse is None else (-1 if reverse else 1)
        phi = add(q(-0.5, 0.5), mul(sign * q(1.0, 2.0), x), mul(q(-0.1, 0.1), x, x),
                  mul(q(-0.1, 0.1), x, x, x))
    psi = []
    for a in range(m):
        lin_sign = -1 if rng.random() < 0.3 else 1
        terms = [q(-0.5, 0.5), mul(q(-0.5, 0.5), x), mul(lin_sign * q(1.0, 1.5), ys[a])]
        for b in range(m):
            if b != a:
                terms.append(mul(q(-0.2, 0.2) / m, ys[b]))
            terms.append(mul(q(-0.1, 0.1) / m, x, ys[b]))
            terms.append(mul(q(-0.05, 0.05) / m, ys[a], ys[b]))
        terms.append(mul(q(-0.1, 0.1), x, x))
        psi.append(add(*terms))
    return Automorphism(phi, tuple(psi))
