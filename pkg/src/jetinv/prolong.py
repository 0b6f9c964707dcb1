"""Lifts of projectable vector fields on R x M to J^1 x R and its jet bundles.

A projectable field ``X = u(x) d/dx + v^a(x, y) d/dy^a`` lifts to J^1(R, M)
through the first prolongation, then to ``J^1 x R`` by letting it act on the
extra coordinate ``z`` with weight ``-u'``. The lifts to J^1(q) and J^2(q) are
computed two ways: through the generic prolongation machinery in ``jetcalc``
and through hand-expanded coefficient formulas (``coefficients_explicit``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Mapping, Sequence

import numpy as np

from .expr import Expr, Var, add, as_expr, compile_expressions, diff, mul, neg, parse
from .expr import evaluate as eval_expr
from .expr.evaluate import UnboundVariableError
from .jetcalc import FunctionJets, JetCoordinateSystem, JetError, JetFunction, prolong_vector_field


def base_names(m: int) -> tuple[str, ...]:
    return ("x",) + tuple(f"y{i}" for i in range(1, m + 1))


def velocity_names(m: int) -> tuple[str, ...]:
    return tuple(f"dy{i}" for i in range(1, m + 1))


@dataclass(frozen=True)
class ProjectableField:
    """``u(x) d/dx + v^a(x, y) d/dy^a``."""

    u: Expr
    v: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "u", as_expr(self.u))
        object.__setattr__(self, "v", tuple(as_expr(e) for e in self.v))
        if not self.v:
            raise JetError("need at least one fiber component v")
        if not self.u.free <= {"x"}:
            raise JetError(f"u may depend on x only, found {sorted(self.u.free)}")
        allowed = set(base_names(self.m))
        for a, e in enumerate(self.v, 1):
            if not e.free <= allowed:
                extra = sorted(e.free - allowed)
                raise JetError(f"v{a} may depend on x and y only, found {extra}")

    @classmethod
    def parse(cls, u: str, v: Sequence[str]) -> ProjectableField:
        return cls(parse(u), tuple(parse(s) for s in v))

    @property
    def m(self) -> int:
        return len(self.v)

    @property
    def vertical(self) -> bool:
        return self.u == as_expr(0)


@lru_cache(maxsize=None)
def field_jets(m: int) -> FunctionJets:
    """Symbols ``u, u_x, ...`` and ``v1, v1_x, v1_y2, ...`` for a generic field."""
    vs = base_names(m)
    return FunctionJets({"u": ("x",), **{f"v{a}": vs for a in range(1, m + 1)}})


@lru_cache(maxsize=None)
def data_symbols(m: int) -> tuple[str, ...]:
    """Every derivative of (u, v) up to order three, symmetric slots once."""
    return tuple(field_jets(m).symbols_up_to(3))


class VectorFieldJetData:
    """Values of the derivatives of (u, v^a) at one base point, up to order three.

    Values may be floats or equally shaped arrays (a batch of field data).
    """

    def __init__(self, m: int, values: Mapping[str, object]):
        names = data_symbols(m)
        unknown = set(values) - set(names)
        if unknown:
            raise JetError(f"unknown field-data symbols {sorted(unknown)}")
        self.m = m
        self.values = {n: values.get(n, 0.0) for n in names}
        for n, val in self.values.items():
            if not np.all(np.isfinite(val)):
                raise JetError(f"non-finite value for {n}")

    @classmethod
    def zeros(cls, m: int) -> VectorFieldJetData:
        return cls(m, {})

    @classmethod
    def random(cls, m: int, rng: np.random.Generator, size=None) -> VectorFieldJetData:
        names = data_symbols(m)
        draws = rng.uniform(-1.0, 1.0, size=(len(names),) + (() if size is None else (size,)))
        return cls(m, dict(zip(names, draws)))

    @classmethod
    def from_field(cls, X: ProjectableField, base_point: Mapping[str, float]) -> VectorFieldJetData:
        """Evaluate the derivatives of a concrete field at (x, y)."""
        fj = field_jets(X.m)
        values = {}
        for name in data_symbols(X.m):
            head, counts = fj.parse(name)
            e = X.u if head == "u" else X.v[int(head[1:]) - 1]
            for var, c in zip(fj.functions[head], counts):
                for _ in range(c):
                    e = diff(e, var)
            values[name] = eval_expr(e, base_point)
        return cls(X.m, values)

    def __getitem__(self, name: str):
        return self.values[name]

    def scaled(self, c: float) -> VectorFieldJetData:
        return VectorFieldJetData(self.m, {k: c * v for k, v in self.values.items()})

    def __add__(self, other: VectorFieldJetData) -> VectorFieldJetData:
        return VectorFieldJetData(self.m, {k: v + other.values[k] for k, v in self.values.items()})

    def arrays(self) -> dict[str, np.ndarray]:
        """Dense arrays u1..u3, v, vx, vy[a,b], ..., vyyy[a,b,c,d] (a = component)."""
        m, fj = self.m, field_jets(self.m)
        val = self.values
        ys = [f"y{i}" for i in range(1, m + 1)]

        def get(a, xs, yidx):
            return val[fj.symbol(f"v{a + 1}", ["x"] * xs + [ys[i] for i in yidx])]

        out = {f"u{k}": val[fj.symbol("u", ["x"] * k)] for k in range(4)}
        shapes = {"v": (0, 0), "vx": (1, 0), "vxx": (2, 0), "vxxx": (3, 0),
                  "vy": (0, 1), "vxy": (1, 1), "vxxy": (2, 1),
                  "vyy": (0, 2), "vxyy": (1, 2), "vyyy": (0, 3)}
        for key, (xs, ny) in shapes.items():
            arr = np.empty((m,) * (1 + ny), dtype=object)
            for a in range(m):
                for yidx in itertools.product(range(m), repeat=ny):
                    arr[(a,) + yidx] = get(a, xs, yidx)
            out[key] = np.array(arr.tolist(), dtype=float)
        return out


@dataclass(frozen=True)
class LiftedField:
    """Coefficients of a lifted vector field on J^r(q), ordered like the system."""

    system: JetCoordinateSystem
    coefficients: dict = field(compare=False)
    params: FunctionJets | None = field(default=None, compare=False)

    def __post_init__(self):
        if list(self.coefficients) != list(self.system.coordinates):
            raise JetError("coefficients must follow the coordinate order of the system")

    @property
    def order(self) -> int:
        return self.system.order

    def __getitem__(self, alias: str) -> Expr:
        return self.coefficients[self.system.canonical(alias) if alias not in
                                 self.coefficients else alias]

    @cached_property
    def _compiled(self):
        exprs = list(self.coefficients.values())
        args = sorted(set().union(*(e.free for e in exprs)))
        return compile_expressions(exprs, args), args


def first_prolong(X: ProjectableField) -> list[Expr]:
    """v1^a = dv^a/dx - u' dy^a + dv^a/dy^b dy^b on J^1(R, M)."""
    du = diff(X.u, "x")
    out = []
    for a, va in enumerate(X.v, 1):
        terms = [diff(va, "x"), neg(mul(du, Var(f"dy{a}")))]
        for b in range(1, X.m + 1):
            terms.append(mul(diff(va, f"y{b}"), Var(f"dy{b}")))
        out.append(add(*terms))
    return out


def _tilde_components(X: ProjectableField) -> tuple[list[Expr], Expr]:
    xi = [X.u, *X.v, *first_prolong(X)]
    eta = neg(mul(diff(X.u, "x"), Var("z")))
    return xi, eta


def lift_tilde(X: ProjectableField) -> LiftedField:
    """Order-zero lift to J^1(R, M) x R with coefficient ``-u' z`` on z."""
    return lift_order(X, 0)


def lift_order(X: ProjectableField, r: int) -> LiftedField:
    """Prolongation of the tilde lift to J^r(q), r in {0, 1, 2}."""
    if r not in (0, 1, 2):
        raise JetError("lift order must be 0, 1 or 2")
    system = JetCoordinateSystem.lagrangian(X.m, r)
    xi, eta = _tilde_components(X)
    return _prolong(system, xi, eta, None)


def _prolong(system, xi, eta, params) -> LiftedField:
    xi = [JetFunction(e, system, params) for e in xi]
    eta = JetFunction(eta, system, params)
    coeffs = {alias: f.expr for alias, f in prolong_vector_field(xi, eta, system.order)}
    return LiftedField(system, coeffs, params)


def generic_field(m: int) -> tuple[list[Expr], Expr]:
    """Tilde-lift components for a field known only through its derivative symbols."""
    fj = field_jets(m)
    ux = Var(fj.symbol("u", ["x"]))
    xi = [Var("u")] + [Var(f"v{a}") for a in range(1, m + 1)]
    for a in range(1, m + 1):
        terms = [Var(fj.symbol(f"v{a}", ["x"])), neg(mul(ux, Var(f"dy{a}")))]
        for b in range(1, m + 1):
            terms.append(mul(Var(fj.symbol(f"v{a}", [f"y{b}"])), Var(f"dy{b}")))
        xi.append(add(*terms))
    return xi, neg(mul(ux, Var("z")))


@lru_cache(maxsize=None)
def generic_lift(m: int, r: int) -> LiftedField:
    """Lift to J^r(q) of the generic field; coefficients are linear in field data."""
    if m < 1 or r not in (0, 1, 2):
        raise JetError("generic lift needs m >= 1 and r in {0, 1, 2}")
    system = JetCoordinateSystem.lagrangian(m, r)
    xi, eta = generic_field(m)
    return _prolong(system, xi, eta, field_jets(m))


def evaluate_lift(L: LiftedField, data: VectorFieldJetData | None,
                  p: Mapping[str, float]) -> np.ndarray:
    """Numeric tangent vector of ``L`` at ``p``.

    ``data`` supplies the field-derivative symbols of a generic lift and is
    ignored by a lift of a concrete field. Batched data (arrays of length n)
    give an array of shape (n, dim).
    """
    fn, args = L._compiled
    binding = dict(p)
    if data is not None:
        binding.update(data.values)
    for a in args:
        if a not in binding:
            raise UnboundVariableError(a)
    cols = fn(binding)
    shape = np.broadcast(*[np.asarray(c) for c in cols]).shape
    return np.stack([np.broadcast_to(np.asarray(c, dtype=float), shape) for c in cols], axis=-1)


evaluate = evaluate_lift


def _point_arrays(m: int, p: Mapping[str, float]) -> dict[str, np.ndarray]:
    sys = JetCoordinateSystem.lagrangian(m, 2)
    y = [f"y{i}" for i in range(1, m + 1)]
    dy = [f"dy{i}" for i in range(1, m + 1)]

    def z(*names):
        return p[sys.canonical("z_" + "".join(names))]

    return {
        "dy": np.array([p[n] for n in dy]),
        "z": p["z"],
        "zx": z("x"),
        "zy": np.array([z(a) for a in y]),
        "zdy": np.array([z(a) for a in dy]),
        "zxx": z("x", "x"),
        "zxy": np.array([z("x", a) for a in y]),
        "zxdy": np.array([z("x", a) for a in dy]),
        "zyy": np.array([[z(a, b) for b in y] for a in y]),
        "zydy": np.array([[z(a, b) for b in dy] for a in y]),
        "zdydy": np.array([[z(a, b) for b in dy] for a in dy]),
    }


def coefficients_explicit(data: VectorFieldJetData, p: Mapping[str, float]) -> np.ndarray:
    """Coefficient vector of the second-order lift from the expanded closed formulas.

    Independent of the generic prolongation route; ordered like
    ``JetCoordinateSystem.lagrangian(m, 2).coordinates``.
    """
    m = data.m
    d = data.arrays()
    q = _point_arrays(m, p)
    u, u1, u2, u3 = d["u0"], d["u1"], d["u2"], d["u3"]
    v, vx, vy, vxx = d["v"], d["vx"], d["vy"], d["vxx"]
    vxy, vyy, vxxx, vxxy, vxyy, vyyy = (d[k] for k in ("vxy", "vyy", "vxxx", "vxxy", "vxyy", "vyyy"))
    dy, z, zx, zy, zdy = q["dy"], q["z"], q["zx"], q["zy"], q["zdy"]
    zxx, zxy, zxdy, zyy, zydy, zdydy = (q[k] for k in ("zxx", "zxy", "zxdy", "zyy", "zydy", "zdydy"))
    ein = np.einsum

    v1 = vx - u1 * dy + vy @ dy
    # vxy + vyy.dy, the x-total derivative of vy along the curve: [b, a]
    wy = vxy + ein("bag,g->ba", vyy, dy)
    A = (-u2 * z - 2 * u1 * zx - vx @ zy - vxx @ zdy + u2 * (dy @ zdy)
         - ein("ab,b,a->", vxy, dy, zdy))
    B = -u1 * zy - vy.T @ zy - ein("ba,b->a", wy, zdy)
    C = -vy.T @ zdy

    Dxx = (-3 * u1 * zxx - 2 * vx @ zxy - 3 * u2 * zx + 2 * u2 * (dy @ zxdy)
           - vxx @ zy - 2 * vxx @ zxdy - 2 * ein("ab,b,a->", vxy, dy, zxdy)
           - u3 * z + u3 * (dy @ zdy) - vxxx @ zdy - ein("ab,b,a->", vxxy, dy, zdy))
    E = (-2 * u1 * zxy - zyy @ vx - vy.T @ zxy - u2 * zy + u2 * (zydy @ dy)
         - zydy @ vxx - vxy.T @ zy - vxy.T @ zxdy - zydy @ (vxy @ dy)
         - ein("bag,g,b->a", vyy, dy, zxdy) - vxxy.T @ zdy
         - ein("bag,g,b->a", vxyy, dy, zdy))
    F = (-u1 * zxdy - zydy.T @ vx - vy.T @ zxdy + u2 * (zdydy @ dy) - zdydy @ vxx
         - zdydy @ (vxy @ dy) - vxy.T @ zdy)
    # second y-derivative of v along the curve: [s, a, b]
    wyy = vxyy + ein("sabg,g->sab", vyyy, dy)
    G = (-ein("sab,s->ab", vyy, zy) - ein("sab,s->ab", wyy, zdy) - u1 * zyy
         - zyy @ vy - (zyy @ vy).T - zydy @ wy - (zydy @ wy).T)
    H = (-ein("sab,s->ab", vyy, zdy) - zydy @ vy - vy.T @ zydy - (zdydy @ wy).T)
    K = u1 * zdydy - zdydy @ vy - (zdydy @ vy).T

    sys = JetCoordinateSystem.lagrangian(m, 2)
    y = [f"y{i}" for i in range(1, m + 1)]
    dyn = [f"dy{i}" for i in range(1, m + 1)]
    vals = {"x": u, "z": -u1 * z, "z_x": A, "z_xx": Dxx}
    for a in range(m):
        vals[y[a]] = v[a]
        vals[dyn[a]] = v1[a]
        vals[sys.canonical("z_" + y[a])] = B[a]
        vals[sys.canonical("z_" + dyn[a])] = C[a]
        vals[sys.canonical("z_x" + y[a])] = E[a]
        vals[sys.canonical("z_x" + dyn[a])] = F[a]
        for b in range(m):
            vals[sys.canonical("z_" + y[a] + dyn[b])] = H[a, b]
            if a <= b:
                vals[sys.canonical("z_" + y[a] + y[b])] = G[a, b]
                vals[sys.canonical("z_" + dyn[a] + dyn[b])] = K[a, b]
    return np.array([vals[c] for c in sys.coordinates], dtype=float)
