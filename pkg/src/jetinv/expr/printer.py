"""Render expression trees in the DSL syntax.

The output re-parses to the same tree. Two lexical details drive most of
the parenthesization: ``p/q`` without spaces is a single rational literal,
and a unary minus directly in front of a number literal folds into a
negative constant unless ``^`` follows.
"""

from __future__ import annotations

from .nodes import Add, Const, Div, Expr, Func, Mul, Neg, Pow, Var


def _literal(c: Const) -> str:
    v = c.value
    text = str(abs(v.numerator)) if v.denominator == 1 else f"{abs(v.numerator)}/{v.denominator}"
    return "-" + text if v < 0 else text


def to_string(e: Expr) -> str:
    return _sum(e)


def _sum(e: Expr) -> str:
    if type(e) is not Add:
        return _term(e)
    parts = [_term(e.args[0]) if type(e.args[0]) is not Add else f"({_sum(e.args[0])})"]
    for t in e.args[1:]:
        if type(t) is Neg:
            inner = t.arg
            parts.append(" - " + (f"({_sum(inner)})" if type(inner) is Add else _term(inner)))
        elif type(t) is Add:
            parts.append(f" + ({_sum(t)})")
        else:
            parts.append(" + " + _term(t))
    return "".join(parts)


def _term(e: Expr) -> str:
    t = type(e)
    if t is Mul:
        first = e.args[0]
        if type(first) in (Add, Mul):
            out = [f"({_sum(first)})"]
        else:
            out = [_term(first) if type(first) is Div else _factor(first)]
        for f in e.args[1:]:
            if type(f) in (Add, Mul, Div):
                out.append(f"*({_sum(f)})")
            else:
                out.append("*" + _factor(f))
        return "".join(out)
    if t is Div:
        num = e.num
        if type(num) is Add:
            left = f"({_sum(num)})"
        elif type(num) in (Mul, Div):
            left = _term(num)
        else:
            left = _factor(num)
        den = e.den
        if type(den) in (Var, Func) or (type(den) is Pow and type(den.base) in (Var, Func)):
            right = _factor(den)
        else:
            right = f"({_sum(den)})"
        return f"{left}/{right}"
    if t is Add:
        return f"({_sum(e)})"
    return _factor(e)


def _factor(e: Expr) -> str:
    t = type(e)
    if t is Neg:
        a = e.arg
        if type(a) in (Var, Func, Pow, Neg):
            return "-" + _factor(a)
        return f"-({_sum(a)})"
    if t is Pow:
        return _base(e.base) + "^" + _exponent(e.exp)
    if t in (Add, Mul, Div):
        return f"({_sum(e)})"
    return _atom(e)


def _base(e: Expr) -> str:
    if type(e) in (Var, Func):
        return _atom(e)
    if type(e) is Const and e.value >= 0:
        return _literal(e)
    return f"({_sum(e)})"


def _exponent(n) -> str:
    if n.denominator == 1 and n >= 0:
        return str(n.numerator)
    if n.denominator == 1:
        return f"({n.numerator})"
    return f"({n.numerator}/{n.denominator})"


def _atom(e: Expr) -> str:
    t = type(e)
    if t is Const:
        return _literal(e)
    if t is Var:
        return e.name
    if t is Func:
        return f"{e.name}({_sum(e.arg)})"
    return f"({_sum(e)})"
