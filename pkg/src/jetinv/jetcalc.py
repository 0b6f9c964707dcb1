"""Jet coordinates on J^r(q), total derivatives and prolongation of vector fields.

Here ``q: N x R -> N`` with coordinates ``(t^1, ..., t^nu)`` on ``N`` and the
fiber coordinate ``z``. A jet coordinate ``z_I`` is named by concatenating the
base names in nondecreasing slot order, e.g. ``z_xdy1`` or ``z_y1y2``.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .expr import ZERO, Expr, Var, add, diff, expand, mul, sub
from .expr.nodes import IDENTIFIER


class JetError(ValueError):
    pass


@dataclass(frozen=True)
class MultiIndex:
    """I = (i_1, ..., i_nu) with nonnegative entries."""

    entries: tuple[int, ...]

    def __post_init__(self):
        if len(self.entries) < 1:
            raise JetError("multi-index needs at least one slot")
        if any(i < 0 for i in self.entries):
            raise JetError(f"negative entry in multi-index {self.entries}")

    @classmethod
    def zero(cls, nu: int) -> MultiIndex:
        return cls((0,) * nu)

    @classmethod
    def unit(cls, nu: int, a: int) -> MultiIndex:
        return cls.zero(nu).plus(a)

    @classmethod
    def from_slots(cls, nu: int, slots: Iterable[int]) -> MultiIndex:
        entries = [0] * nu
        for a in slots:
            entries[a] += 1
        return cls(tuple(entries))

    @property
    def nu(self) -> int:
        return len(self.entries)

    @property
    def order(self) -> int:
        return sum(self.entries)

    def plus(self, a: int) -> MultiIndex:
        if not 0 <= a < self.nu:
            raise JetError(f"slot {a} out of range for nu={self.nu}")
        e = list(self.entries)
        e[a] += 1
        return MultiIndex(tuple(e))

    def __add__(self, other: MultiIndex) -> MultiIndex:
        return MultiIndex(tuple(i + j for i, j in zip(self.entries, other.entries)))

    def __sub__(self, other: MultiIndex) -> MultiIndex:
        return MultiIndex(tuple(i - j for i, j in zip(self.entries, other.entries)))

    def dominates(self, other: MultiIndex) -> bool:
        """Componentwise ``other <= self``."""
        return all(j <= i for i, j in zip(self.entries, other.entries))

    def binom(self, other: MultiIndex) -> int:
        if not self.dominates(other):
            raise JetError(f"{other.entries} is not below {self.entries}")
        return math.prod(math.comb(i, j) for i, j in zip(self.entries, other.entries))

    def below(self) -> Iterator[MultiIndex]:
        """All J <= I componentwise, I itself included."""
        for e in itertools.product(*(range(i + 1) for i in self.entries)):
            yield MultiIndex(e)

    def slots(self) -> tuple[int, ...]:
        return tuple(a for a, i in enumerate(self.entries) for _ in range(i))


def _tokenizer(names: Sequence[str]) -> re.Pattern:
    alternatives = sorted(names, key=len, reverse=True)
    return re.compile("|".join(re.escape(n) for n in alternatives))


def _split_names(text: str, pattern: re.Pattern, what: str) -> list[str]:
    out, pos = [], 0
    while pos < len(text):
        m = pattern.match(text, pos)
        if m is None:
            raise JetError(f"cannot split {text!r} into {what}")
        out.append(m.group())
        pos = m.end()
    return out


@dataclass(frozen=True)
class JetCoordinateSystem:
    """Coordinates ``(t^a, z_I)``, ``|I| <= order``, on J^order(q)."""

    base: tuple[str, ...]
    order: int
    fiber: str = "z"

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        if not self.base:
            raise JetError("need at least one base coordinate")
        if self.order < 0:
            raise JetError("jet order must be nonnegative")
        for name in self.base + (self.fiber,):
            if not IDENTIFIER.match(name):
                raise JetError(f"invalid coordinate name {name!r}")
        if len(set(self.base)) != len(self.base) or self.fiber in self.base:
            raise JetError("coordinate names must be distinct")

    @classmethod
    def lagrangian(cls, m: int, order: int) -> JetCoordinateSystem:
        """J^order(q) over J^1(R, M), base ``(x, y1..ym, dy1..dym)``."""
        if m < 1:
            raise JetError("fiber dimension m must be positive")
        base = ("x",) + tuple(f"y{i}" for i in range(1, m + 1)) + tuple(
            f"dy{i}" for i in range(1, m + 1))
        system = cls(base, order)
        if order == 2 and system.dimension != 2 * m * m + 7 * m + 4:
            raise JetError("coordinate count on J^2(q) differs from 2m^2+7m+4")
        return system

    @property
    def nu(self) -> int:
        return len(self.base)

    def with_order(self, order: int) -> JetCoordinateSystem:
        return JetCoordinateSystem(self.base, order, self.fiber)

    @cached_property
    def _pattern(self) -> re.Pattern:
        return _tokenizer(self.base)

    @cached_property
    def multi_indices(self) -> tuple[MultiIndex, ...]:
        """Fiber multi-indices ordered by order, then by slot sequence."""
        out = []
        for k in range(self.order + 1):
            for slots in itertools.combinations_with_replacement(range(self.nu), k):
                out.append(MultiIndex.from_slots(self.nu, slots))
        return tuple(out)

    @cached_property
    def fiber_coordinates(self) -> tuple[str, ...]:
        return tuple(self.alias(I) for I in self.multi_indices)

    @cached_property
    def coordinates(self) -> tuple[str, ...]:
        return self.base + self.fiber_coordinates

    @cached_property
    def position(self) -> dict[str, int]:
        return {name: k for k, name in enumerate(self.coordinates)}

    @property
    def dimension(self) -> int:
        return len(self.coordinates)

    def alias(self, index: MultiIndex) -> str:
        if index.nu != self.nu:
            raise JetError(f"multi-index has {index.nu} slots, expected {self.nu}")
        if index.order == 0:
            return self.fiber
        return self.fiber + "_" + "".join(self.base[a] for a in index.slots())

    def index(self, alias: str) -> MultiIndex:
        """Multi-index of a fiber coordinate; base names may come in any order."""
        if alias == self.fiber:
            return MultiIndex.zero(self.nu)
        prefix = self.fiber + "_"
        if not alias.startswith(prefix):
            raise JetError(f"{alias!r} is not a jet coordinate of {self.fiber!r}")
        names = _split_names(alias[len(prefix):], self._pattern, "base coordinates")
        return MultiIndex.from_slots(self.nu, (self.base.index(n) for n in names))

    def canonical(self, alias: str) -> str:
        return self.alias(self.index(alias))

    def is_fiber(self, name: str) -> bool:
        try:
            self.index(name)
        except JetError:
            return False
        return True

    def fiber_order(self, name: str) -> int | None:
        """Order |I| of a fiber coordinate name, None for other names."""
        try:
            return self.index(name).order
        except JetError:
            return None


class FunctionJets:
    """Arbitrary functions of some base coordinates, known through their jets.

    Each function ``head`` depending on variables ``(w1, w2, ...)`` has partial
    derivatives represented by fresh symbols ``head_<w...>`` with the variables
    listed in declaration order, e.g. ``v1_xy1y2``.
    """

    def __init__(self, functions: Mapping[str, Sequence[str]]):
        self.functions = {h: tuple(vs) for h, vs in functions.items()}
        for h in self.functions:
            if "_" in h or not IDENTIFIER.match(h):
                raise JetError(f"invalid function head {h!r}")
        self._patterns = {h: _tokenizer(vs) for h, vs in self.functions.items()}
        self._cache: dict[str, tuple[str, tuple[int, ...]] | None] = {}

    def symbol(self, head: str, derivatives: Sequence[str] = ()) -> str:
        vs = self.functions[head]
        counts = [0] * len(vs)
        for w in derivatives:
            counts[vs.index(w)] += 1
        return self._name(head, counts)

    def _name(self, head: str, counts) -> str:
        if not any(counts):
            return head
        vs = self.functions[head]
        return head + "_" + "".join(v * 1 for v, c in zip(vs, counts) for _ in range(c))

    def parse(self, name: str) -> tuple[str, tuple[int, ...]] | None:
        """(head, derivative counts) for a symbol of this family, else None."""
        if name in self._cache:
            return self._cache[name]
        head, _, suffix = name.partition("_")
        out = None
        if head in self.functions:
            vs = self.functions[head]
            if not suffix:
                out = (head, (0,) * len(vs))
            else:
                try:
                    parts = _split_names(suffix, self._patterns[head], "variables")
                except JetError:
                    parts = None
                if parts is not None:
                    counts = [0] * len(vs)
                    for p in parts:
                        counts[vs.index(p)] += 1
                    if self._name(head, counts) == name:
                        out = (head, tuple(counts))
        self._cache[name] = out
        return out

    def derivative(self, name: str, var: str) -> str | None:
        """Symbol for d(name)/d(var), or None when it vanishes identically."""
        parsed = self.parse(name)
        if parsed is None:
            raise JetError(f"{name!r} is not a function-jet symbol")
        head, counts = parsed
        vs = self.functions[head]
        if var not in vs:
            return None
        counts = list(counts)
        counts[vs.index(var)] += 1
        return self._name(head, counts)

    def symbols_in(self, e: Expr) -> list[str]:
        return sorted(n for n in e.free if self.parse(n) is not None)

    def symbols_up_to(self, order: int) -> list[str]:
        out = []
        for head, vs in self.functions.items():
            for k in range(order + 1):
                for combo in itertools.combinations_with_replacement(range(len(vs)), k):
                    counts = [0] * len(vs)
                    for i in combo:
                        counts[i] += 1
                    out.append(self._name(head, counts))
        return out


def partial(e: Expr, var: str, params: FunctionJets | None = None) -> Expr:
    """Partial derivative, applying the chain rule through function-jet symbols."""
    out = diff(e, var)
    if params is None:
        return out
    extra = []
    for s in params.symbols_in(e):
        ds = params.derivative(s, var)
        if ds is not None:
            extra.append(mul(diff(e, s), Var(ds)))
    return add(out, *extra) if extra else out


@dataclass(frozen=True)
class JetFunction:
    """An expression over the coordinates of a jet coordinate system."""

    expr: Expr
    system: JetCoordinateSystem
    params: FunctionJets | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in self.expr.free:
            if name in self.system.base:
                continue
            k = self.system.fiber_order(name)
            if k is not None:
                if k > self.system.order:
                    raise JetError(
                        f"{name} has order {k} > {self.system.order} of the host system")
                if name != self.system.canonical(name):
                    raise JetError(f"non-canonical jet coordinate {name!r}")
                continue
            if self.params is not None and self.params.parse(name) is not None:
                continue
            raise JetError(f"{name!r} is not a coordinate of the jet system")

    def depends_on_fiber(self) -> bool:
        return any(self.system.fiber_order(n) is not None for n in self.expr.free)


def jet_function(expr: Expr, system: JetCoordinateSystem,
                 params: FunctionJets | None = None) -> JetFunction:
    """Build a JetFunction, canonicalizing any non-canonical jet aliases."""
    from .expr import substitute

    renames = {}
    for name in expr.free:
        if name not in system.base and system.fiber_order(name) is not None:
            c = system.canonical(name)
            if c != name:
                renames[name] = Var(c)
    if renames:
        expr = substitute(expr, renames)
    return JetFunction(expr, system, params)


def total_derivative(f: JetFunction, a: int) -> JetFunction:
    """D_{t^a} f = df/dt^a + sum_I z_{I+(a)} df/dz_I, hosted one order higher."""
    sys = f.system
    if not 0 <= a < sys.nu:
        raise JetError(f"slot index {a} out of range 0..{sys.nu - 1}")
    target = sys.with_order(sys.order + 1)
    terms = [partial(f.expr, sys.base[a], f.params)]
    for name in sorted(f.expr.free):
        if name in sys.base:
            continue
        k = sys.fiber_order(name)
        if k is None:
            continue
        shifted = target.alias(sys.index(name).plus(a))
        terms.append(mul(Var(shifted), diff(f.expr, name)))
    return JetFunction(expand(add(*terms)), target, f.params)


def apply_DI(f: JetFunction, index: MultiIndex) -> JetFunction:
    """D^I = (D_{t^1})^{i_1} o ... o (D_{t^nu})^{i_nu} applied to f."""
    if index.nu != f.system.nu:
        raise JetError("multi-index length differs from the base dimension")
    for a in reversed(range(index.nu)):
        for _ in range(index.entries[a]):
            f = total_derivative(f, a)
    return f


def _check_field(xi: Sequence[JetFunction], eta: JetFunction):
    sys = eta.system
    if len(xi) != sys.nu:
        raise JetError(f"expected {sys.nu} base components, got {len(xi)}")
    for k, comp in enumerate(xi):
        if comp.system.base != sys.base:
            raise JetError("xi and eta live on different base coordinates")
        if comp.depends_on_fiber():
            raise JetError(f"xi[{k}] must depend on base coordinates only")
    allowed = {sys.fiber}
    for name in eta.expr.free:
        if name not in sys.base and sys.fiber_order(name) is not None and name not in allowed:
            raise JetError("eta may depend on the base coordinates and z only")


def _host(eta: JetFunction, index: MultiIndex) -> JetCoordinateSystem:
    sys = eta.system
    if index.order > sys.order:
        raise JetError(
            f"|I| = {index.order} exceeds the order {sys.order} of the host system")
    return sys


def _assert_truncated(result: Expr, sys: JetCoordinateSystem, order: int):
    for name in result.free:
        k = sys.fiber_order(name) if name not in sys.base else None
        if k is not None and k > order:
            raise JetError(f"coordinate {name} of order {k} survived in eta_I, |I|={order}")


def eta_I_direct(xi: Sequence[JetFunction], eta: JetFunction,
                 index: MultiIndex) -> JetFunction:
    """eta_I = D^I(eta - xi^a z_a) + xi^a z_{I+(a)}."""
    _check_field(xi, eta)
    sys = _host(eta, index)
    params = eta.params
    if index.order == 0:
        return JetFunction(eta.expr, sys, params)
    z1 = sys.with_order(max(sys.order, 1))
    zplus = sys.with_order(index.order + 1)
    char = sub(eta.expr, add(*(mul(xi[a].expr, Var(z1.alias(MultiIndex.unit(sys.nu, a))))
                              for a in range(sys.nu))))
    d = apply_DI(JetFunction(char, z1, params), index).expr
    tail = add(*(mul(xi[a].expr, Var(zplus.alias(index.plus(a)))) for a in range(sys.nu)))
    result = expand(add(d, tail))
    _assert_truncated(result, sys, index.order)
    return JetFunction(result, sys, params)


def _partial_multi(e: Expr, index: MultiIndex, base: Sequence[str],
                   params: FunctionJets | None) -> Expr:
    for a, n in enumerate(index.entries):
        for _ in range(n):
            e = partial(e, base[a], params)
    return e


def eta_I_leibniz(xi: Sequence[JetFunction], eta: JetFunction,
                  index: MultiIndex) -> JetFunction:
    """eta_I = D^I(eta) - sum_{J<I} binom(I,J) d^{I-J} xi^a / dt^{I-J} z_{J+(a)}."""
    _check_field(xi, eta)
    sys = _host(eta, index)
    params = eta.params
    terms = [apply_DI(JetFunction(eta.expr, sys.with_order(0), params), index).expr]
    for J in index.below():
        if J == index:
            continue
        c = index.binom(J)
        K = index - J
        for a in range(sys.nu):
            dxi = _partial_multi(xi[a].expr, K, sys.base, params)
            if dxi == ZERO:
                continue
            terms.append(mul(-c, dxi, Var(sys.alias(J.plus(a)))))
    result = expand(add(*terms))
    _assert_truncated(result, sys, index.order)
    return JetFunction(result, sys, params)


def prolong_vector_field(xi: Sequence[JetFunction], eta: JetFunction,
                         r: int) -> list[tuple[str, JetFunction]]:
    """Coefficients of Y^(r): xi^a on base slots, eta on z, eta_I for 1 <= |I| <= r."""
    if r < 0:
        raise JetError("prolongation order must be nonnegative")
    _check_field(xi, eta)
    sys = eta.system.with_order(r)
    params = eta.params
    xi = [JetFunction(c.expr, sys, params) for c in xi]
    eta = JetFunction(eta.expr, sys, params)
    out = [(sys.base[a], xi[a]) for a in range(sys.nu)]
    for index in sys.multi_indices:
        out.append((sys.alias(index), eta_I_direct(xi, eta, index)))
    return out
