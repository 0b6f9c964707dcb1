"""Immutable expression tree nodes.

Nodes are hashable and compare structurally. Every node carries a sort key
(nested tuples), a hash built from its children's hashes, and the frozen set
of free variable names, all computed once at construction.
"""

from __future__ import annotations

import re
from fractions import Fraction

FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt")

IDENTIFIER = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


class Expr:
    __slots__ = ("_key", "_hash", "free")

    def __init__(self, key, hash_parts, free):
        self._key = key
        self.free = free
        self._hash = hash(hash_parts)

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr) or self._hash != other._hash:
            return False
        return self._key == other._key

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return self._hash

    def __setattr__(self, name, value):
        if hasattr(self, "_hash"):
            raise AttributeError(f"{type(self).__name__} is immutable")
        object.__setattr__(self, name, value)

    @property
    def sort_key(self):
        return self._key

    def children(self) -> tuple[Expr, ...]:
        return ()

    # Arithmetic sugar routes through the simplifying constructors.
    def __add__(self, other):
        from .algebra import add
        return add(self, other)

    def __radd__(self, other):
        from .algebra import add
        return add(other, self)

    def __sub__(self, other):
        from .algebra import sub
        return sub(self, other)

    def __rsub__(self, other):
        from .algebra import sub
        return sub(other, self)

    def __mul__(self, other):
        from .algebra import mul
        return mul(self, other)

    def __rmul__(self, other):
        from .algebra import mul
        return mul(other, self)

    def __truediv__(self, other):
        from .algebra import div
        return div(self, other)

    def __rtruediv__(self, other):
        from .algebra import div
        return div(other, self)

    def __neg__(self):
        from .algebra import neg
        return neg(self)

    def __pow__(self, n):
        from .algebra import power
        return power(self, n)

    def __str__(self):
        from .printer import to_string
        return to_string(self)


_EMPTY = frozenset()


class Const(Expr):
    __slots__ = ("value", "fvalue")

    def __init__(self, value):
        value = Fraction(value)
        self.value = value
        self.fvalue = float(value)
        super().__init__(("c", value), ("c", value), _EMPTY)

    def __repr__(self):
        return f"Const({self.value})"


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if not IDENTIFIER.match(name):
            raise ValueError(f"invalid identifier {name!r}")
        self.name = name
        super().__init__(("v", name), ("v", name), frozenset((name,)))

    def __repr__(self):
        return f"Var({self.name!r})"


def _union(nodes):
    if len(nodes) == 1:
        return nodes[0].free
    return frozenset().union(*(n.free for n in nodes))


class Add(Expr):
    __slots__ = ("args",)

    def __init__(self, args):
        args = tuple(args)
        if len(args) < 2:
            raise ValueError("Add needs at least two terms")
        self.args = args
        super().__init__(("+",) + tuple(a._key for a in args),
                         ("+",) + tuple(a._hash for a in args), _union(args))

    def children(self):
        return self.args

    def __repr__(self):
        return f"Add{self.args!r}"


class Mul(Expr):
    __slots__ = ("args",)

    def __init__(self, args):
        args = tuple(args)
        if len(args) < 2:
            raise ValueError("Mul needs at least two factors")
        self.args = args
        super().__init__(("*",) + tuple(a._key for a in args),
                         ("*",) + tuple(a._hash for a in args), _union(args))

    def children(self):
        return self.args

    def __repr__(self):
        return f"Mul{self.args!r}"


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp):
        exp = Fraction(exp)
        self.base = base
        self.exp = exp
        super().__init__(("^", base._key, exp), ("^", base._hash, exp), base.free)

    def children(self):
        return (self.base,)

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exp})"


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        self.arg = arg
        super().__init__(("-", arg._key), ("-", arg._hash), arg.free)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Neg({self.arg!r})"


class Div(Expr):
    __slots__ = ("num", "den")

    def __init__(self, num: Expr, den: Expr):
        self.num = num
        self.den = den
        super().__init__(("/", num._key, den._key), ("/", num._hash, den._hash),
                         _union((num, den)))

    def children(self):
        return (self.num, self.den)

    def __repr__(self):
        return f"Div({self.num!r}, {self.den!r})"


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        if name not in FUNCTIONS:
            raise ValueError(f"unknown function {name!r}")
        self.name = name
        self.arg = arg
        super().__init__(("f", name, arg._key), ("f", name, arg._hash), arg.free)

    def children(self):
        return (self.arg,)

    def __repr__(self):
        return f"Func({self.name!r}, {self.arg!r})"


ZERO = Const(0)
ONE = Const(1)


def as_expr(value) -> Expr:
    """Coerce ints, Fractions and variable names to expressions."""
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return Var(value)
    if isinstance(value, (int, Fraction)):
        return Const(value)
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("non-finite constant")
        return Const(Fraction(value))
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")
