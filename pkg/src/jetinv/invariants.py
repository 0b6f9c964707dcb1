"""Hessian metric of a Lagrangian and the invariants V, I and (for m = 2) K."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .expr import Expr, as_expr, compile_expressions, diff, parse
from .expr.evaluate import EvaluationDomainError, UnboundVariableError
from .jetcalc import JetCoordinateSystem
from .prolong import base_names, velocity_names


class DomainError(ArithmeticError):
    """A point lies outside the open set where an invariant is defined."""

    def __init__(self, message: str, locus: str):
        super().__init__(message)
        self.locus = locus


SINGULAR_TOL = 1e-10
VALUE_TOL = 1e-12
EIGEN_TOL = 1e-9


def j1_names(m: int) -> tuple[str, ...]:
    return base_names(m) + velocity_names(m)


@dataclass(frozen=True)
class Lagrangian:
    expr: Expr
    m: int

    def __post_init__(self):
        object.__setattr__(self, "expr", as_expr(self.expr))
        if self.m < 1:
            raise ValueError("m must be positive")
        extra = self.expr.free - set(j1_names(self.m))
        if extra:
            raise ValueError(f"Lagrangian may only use x, y, dy variables; found {sorted(extra)}")

    @classmethod
    def parse(cls, text: str, m: int) -> Lagrangian:
        return cls(parse(text), m)

    @cached_property
    def gradient(self) -> list[Expr]:
        return [diff(self.expr, v) for v in velocity_names(self.m)]

    @cached_property
    def hessian_exprs(self) -> dict[tuple[int, int], Expr]:
        dy = velocity_names(self.m)
        return {(a, b): diff(self.gradient[a], dy[b])
                for a in range(self.m) for b in range(a, self.m)}

    @cached_property
    def third_exprs(self) -> dict[tuple[int, int, int], Expr]:
        dy = velocity_names(self.m)
        return {(a, b, c): diff(self.hessian_exprs[(a, b)], dy[c])
                for a, b, c in itertools.combinations_with_replacement(range(self.m), 3)}

    @cached_property
    def _value_fn(self):
        return compile_expressions([self.expr, *self.gradient], j1_names(self.m))

    @cached_property
    def _hess_fn(self):
        return compile_expressions(list(self.hessian_exprs.values()), j1_names(self.m))

    @cached_property
    def _third_fn(self):
        return compile_expressions(list(self.third_exprs.values()), j1_names(self.m))

    def value(self, p: Mapping[str, float]) -> float:
        return self.value_and_gradient(p)[0]

    def value_and_gradient(self, p) -> tuple[float, np.ndarray]:
        out = _call(self._value_fn, p, j1_names(self.m))
        return out[0], np.array(out[1:])

    def hessian_matrix(self, p) -> np.ndarray:
        vals = _call(self._hess_fn, p, j1_names(self.m))
        g = np.empty((self.m, self.m))
        for (a, b), val in zip(self.hessian_exprs, vals):
            g[a, b] = g[b, a] = val
        return g

    def third_derivatives(self, p) -> np.ndarray:
        vals = _call(self._third_fn, p, j1_names(self.m))
        t = np.empty((self.m,) * 3)
        for idx, val in zip(self.third_exprs, vals):
            for perm in itertools.permutations(idx):
                t[perm] = val
        return t


def _call(fn, p, names) -> list[float]:
    for n in names:
        if n not in p:
            raise UnboundVariableError(n)
    binding = {n: float(p[n]) for n in names}
    try:
        with np.errstate(all="raise"):
            out = [float(v) for v in fn(binding)]
    except (ZeroDivisionError, FloatingPointError, OverflowError, ValueError) as exc:
        raise EvaluationDomainError(f"evaluation failed: {exc}") from None
    if not all(np.isfinite(out)):
        raise EvaluationDomainError("non-finite value")
    return out


@dataclass(frozen=True)
class HessianAtPoint:
    g: np.ndarray
    det: float
    signature: tuple[int, int] | None  # None when degenerate


@dataclass(frozen=True)
class InvariantValue:
    V: float
    I: float
    K: float | None
    point: dict


def signature_of(g: np.ndarray, tol: float = EIGEN_TOL) -> tuple[int, int]:
    lam = np.linalg.eigvalsh(np.asarray(g, dtype=float))
    scale = np.max(np.abs(lam)) if lam.size else 0.0
    if scale == 0.0 or np.min(np.abs(lam)) <= tol * scale:
        raise DomainError("Hessian has a near-zero eigenvalue; signature undefined", "O2")
    return int(np.sum(lam > 0)), int(np.sum(lam < 0))


def signature(h: HessianAtPoint) -> tuple[int, int]:
    return signature_of(h.g)


def hessian(L: Lagrangian, p: Mapping[str, float]) -> HessianAtPoint:
    g = L.hessian_matrix(p)
    det = float(np.linalg.det(g))
    try:
        sig = signature_of(g)
    except DomainError:
        sig = None
    return HessianAtPoint(g, det, sig)


def _check_nonsingular(g: np.ndarray):
    m = g.shape[0]
    norm = np.linalg.norm(g, 2)
    if norm == 0.0 or abs(np.linalg.det(g)) < SINGULAR_TOL * norm ** m:
        raise DomainError("Hessian metric is singular: point outside O2", "O2")


def invariant_V(L: Lagrangian, p: Mapping[str, float]) -> float:
    """V = g^{ab} L_a L_b with g the dy-Hessian and L_a the dy-gradient."""
    g = L.hessian_matrix(p)
    _check_nonsingular(g)
    _, w = L.value_and_gradient(p)
    return float(w @ np.linalg.solve(g, w))


def invariant_I(L: Lagrangian, p: Mapping[str, float]) -> float:
    """I = V / L, defined where the Hessian is regular and L does not vanish."""
    V = invariant_V(L, p)
    value = L.value(p)
    if abs(value) < VALUE_TOL:
        raise DomainError("Lagrangian vanishes: point outside O'2", "O'2")
    return V / value


def gaussian_K(L: Lagrangian, p: Mapping[str, float]) -> float:
    """Gaussian curvature of the dy-Hessian metric of a Lagrangian with m = 2."""
    if L.m != 2:
        raise ValueError("Gaussian curvature is defined here for m = 2 only")
    g = L.hessian_matrix(p)
    _check_nonsingular(g)
    L11, L12, L22 = g[0, 0], g[0, 1], g[1, 1]
    t = L.third_derivatives(p)
    L111, L112, L122, L222 = t[0, 0, 0], t[0, 0, 1], t[0, 1, 1], t[1, 1, 1]
    det = L11 * L22 - L12 ** 2
    num = (-L22 * (L111 * L122 - L112 ** 2)
           + L12 * (L111 * L222 - L112 * L122)
           - L11 * (L112 * L222 - L122 ** 2))
    return float(num / (4.0 * det ** 2))


def invariant_values(L: Lagrangian, p: Mapping[str, float]) -> InvariantValue:
    V = invariant_V(L, p)
    value = L.value(p)
    if abs(value) < VALUE_TOL:
        raise DomainError("Lagrangian vanishes: point outside O'2", "O'2")
    K = gaussian_K(L, p) if L.m == 2 else None
    return InvariantValue(V, V / value, K, dict(p))


# I as a function on J^2(q): z_dy plays L_a and z_dydy plays g_ab.

def _jet_parts(m: int, p: Mapping[str, float]):
    sys = JetCoordinateSystem.lagrangian(m, 2)
    dy = velocity_names(m)
    w = np.array([p[sys.canonical("z_" + a)] for a in dy])
    g = np.array([[p[sys.canonical("z_" + a + b)] for b in dy] for a in dy])
    return sys, dy, float(p["z"]), w, g


def invariant_I_jet(m: int, p: Mapping[str, float]) -> float:
    _, _, z, w, g = _jet_parts(m, p)
    _check_nonsingular(g)
    if abs(z) < VALUE_TOL:
        raise DomainError("z vanishes: point outside O'2", "O'2")
    return float(w @ np.linalg.solve(g, w)) / z


def grad_invariant_I_jet(m: int, p: Mapping[str, float]) -> np.ndarray:
    """Gradient of I on J^2(q), ordered like the coordinates of the system."""
    sys, dy, z, w, g = _jet_parts(m, p)
    _check_nonsingular(g)
    if abs(z) < VALUE_TOL:
        raise DomainError("z vanishes: point outside O'2", "O'2")
    s = np.linalg.solve(g, w)
    value = float(w @ s) / z
    grad = np.zeros(sys.dimension)
    pos = sys.position
    grad[pos["z"]] = -value / z
    for a in range(m):
        grad[pos[sys.canonical("z_" + dy[a])]] = 2 * s[a] / z
        for b in range(a, m):
            factor = 1.0 if a == b else 2.0
            grad[pos[sys.canonical("z_" + dy[a] + dy[b])]] = -factor * s[a] * s[b] / z
    return grad
