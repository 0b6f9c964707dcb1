"""Numeric evaluation of expression trees."""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var


class UnboundVariableError(LookupError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class EvaluationDomainError(ArithmeticError):
    pass


Binding = Mapping[str, float]


def evaluate(e: Expr, binding: Binding) -> float:
    """Evaluate ``e`` in double precision with the given variable values."""
    return _eval(e, binding, {})


def _eval(e: Expr, b: Binding, memo: dict) -> float:
    t = type(e)
    if t is Const:
        return e.fvalue
    if t is Var:
        try:
            return float(b[e.name])
        except KeyError:
            raise UnboundVariableError(e.name) from None
    hit = memo.get(id(e))
    if hit is not None:
        return hit
    if t is Add:
        acc = 0.0
        for a in e.args:
            acc += _eval(a, b, memo)
        out = acc
    elif t is Mul:
        acc = 1.0
        for a in e.args:
            acc *= _eval(a, b, memo)
        out = acc
    elif t is Neg:
        out = -_eval(e.arg, b, memo)
    elif t is Div:
        num = _eval(e.num, b, memo)
        den = _eval(e.den, b, memo)
        if den == 0.0:
            raise EvaluationDomainError(f"division by zero in {e}")
        out = num / den
    elif t is Pow:
        out = _pow(_eval(e.base, b, memo), e.exp, e)
    elif t is Func:
        out = _func(e.name, _eval(e.arg, b, memo), e)
    else:
        raise TypeError(f"unexpected node {e!r}")
    if math.isinf(out) or math.isnan(out):
        raise EvaluationDomainError(f"non-finite value in {e}")
    memo[id(e)] = out
    return out


def _pow(x: float, n, e) -> float:
    if n.denominator == 1:
        k = n.numerator
        if x == 0.0 and k < 0:
            raise EvaluationDomainError(f"zero raised to a negative power in {e}")
        try:
            return x ** k
        except OverflowError:
            raise EvaluationDomainError(f"overflow in {e}") from None
    if x < 0.0:
        raise EvaluationDomainError(f"negative base with fractional exponent in {e}")
    if x == 0.0 and n < 0:
        raise EvaluationDomainError(f"zero raised to a negative power in {e}")
    return x ** float(n)


def _func(name: str, x: float, e) -> float:
    if name == "exp":
        try:
            return math.exp(x)
        except OverflowError:
            raise EvaluationDomainError(f"overflow in {e}") from None
    if name == "log":
        if x <= 0.0:
            raise EvaluationDomainError(f"log of non-positive value in {e}")
        return math.log(x)
    if name == "sqrt":
        if x < 0.0:
            raise EvaluationDomainError(f"sqrt of negative value in {e}")
        return math.sqrt(x)
    if name == "sin":
        return math.sin(x)
    return math.cos(x)


# --------------------------------------------------------------------------
# Code generation: many expressions -> one numpy-vectorized callable.

_NP_FUNCS = {"exp": "_np.exp", "log": "_np.log", "sin": "_np.sin",
             "cos": "_np.cos", "sqrt": "_np.sqrt"}


def _py(e: Expr, names: Mapping[str, str]) -> str:
    t = type(e)
    if t is Const:
        return repr(e.fvalue)
    if t is Var:
        return names[e.name]
    if t is Add:
        return "(" + " + ".join(_py(a, names) for a in e.args) + ")"
    if t is Mul:
        return "(" + " * ".join(_py(a, names) for a in e.args) + ")"
    if t is Neg:
        return f"(-{_py(e.arg, names)})"
    if t is Div:
        return f"({_py(e.num, names)} / {_py(e.den, names)})"
    if t is Pow:
        n = e.exp
        exponent = str(n.numerator) if n.denominator == 1 else repr(float(n))
        return f"({_py(e.base, names)} ** {exponent})"
    return f"{_NP_FUNCS[e.name]}({_py(e.arg, names)})"


def compile_expressions(exprs: Sequence[Expr], arguments: Sequence[str]) -> Callable:
    """Compile expressions into ``f(values) -> list`` evaluated with numpy.

    ``values`` maps each argument name to a float or array; arrays broadcast.
    Results for expressions free of array arguments stay scalar.
    """
    arguments = list(arguments)
    free = set().union(*(e.free for e in exprs)) if exprs else set()
    missing = free - set(arguments)
    if missing:
        raise UnboundVariableError(sorted(missing)[0])
    local = {a: f"_a{i}" for i, a in enumerate(arguments)}
    lines = ["def _compiled(values):"]
    for a, py in local.items():
        if a in free:
            lines.append(f"    {py} = values[{a!r}]")
    body = ", ".join(_py(e, local) for e in exprs)
    lines.append(f"    return [{body}]")
    namespace = {"_np": np}
    exec(compile("\n".join(lines), "<jetinv-compiled>", "exec"), namespace)
    return namespace["_compiled"]
