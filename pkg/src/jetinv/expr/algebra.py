"""Simplifying constructors, differentiation, expansion and substitution.

The constructors apply only local rewrites: flattening, constant folding,
0/1 absorption and collection of like terms and like powers. They never
distribute products over sums; ``expand`` does that on request.

Terms carrying a negative rational coefficient are stored as ``Neg`` of the
positive term so that sums print as differences.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .nodes import (
    ONE,
    ZERO,
    Add,
    Const,
    Div,
    Expr,
    Func,
    Mul,
    Neg,
    Pow,
    Var,
    as_expr,
)


def const(value) -> Const:
    return Const(value)


def _const_value(e: Expr):
    """Rational value of ``Const`` or ``Neg(Const)``, else None."""
    if type(e) is Const:
        return e.value
    if type(e) is Neg and type(e.arg) is Const:
        return -e.arg.value
    return None


def split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    """Split ``e`` into (rational coefficient, remaining term)."""
    sign = 1
    while type(e) is Neg:
        sign = -sign
        e = e.arg
    if type(e) is Mul and type(e.args[0]) is Const:
        c = e.args[0].value
        rest = e.args[1:]
        return sign * c, rest[0] if len(rest) == 1 else Mul(rest)
    if type(e) is Const:
        return sign * e.value, ONE
    return Fraction(sign), e


def _scale(c: Fraction, term: Expr) -> Expr:
    if c == 0:
        return ZERO
    if term is ONE or term == ONE:
        return Const(c)
    if c == 1:
        return term
    if c < 0:
        return Neg(_scale(-c, term))
    factors = term.args if type(term) is Mul else (term,)
    return Mul((Const(c),) + factors)


def add(*terms) -> Expr:
    coeffs: dict[Expr, Fraction] = {}
    constant = Fraction(0)
    stack = [as_expr(t) for t in reversed(terms)]
    while stack:
        t = stack.pop()
        if type(t) is Add:
            stack.extend(reversed(t.args))
            continue
        cv = _const_value(t)
        if cv is not None:
            constant += cv
            continue
        c, rest = split_coeff(t)
        coeffs[rest] = coeffs.get(rest, 0) + c
    items = sorted(((r, c) for r, c in coeffs.items() if c != 0),
                   key=lambda rc: rc[0]._key)
    out = [_scale(c, r) for r, c in items]
    if constant != 0:
        out.append(Const(constant) if constant > 0 or not out else Neg(Const(-constant)))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(out)


def mul(*factors) -> Expr:
    coef = Fraction(1)
    powers: dict[Expr, Fraction] = {}
    stack = [as_expr(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        tf = type(f)
        if tf is Const:
            if f.value == 0:
                return ZERO
            coef *= f.value
        elif tf is Neg:
            coef = -coef
            stack.append(f.arg)
        elif tf is Mul:
            stack.extend(reversed(f.args))
        elif tf is Pow:
            powers[f.base] = powers.get(f.base, 0) + f.exp
        else:
            powers[f] = powers.get(f, 0) + 1
    out = []
    for base, n in powers.items():
        if n == 0:
            continue
        p = power(base, n)
        cv = _const_value(p)
        if cv is not None:
            coef *= cv
            continue
        if type(p) is Mul or type(p) is Neg:
            c, rest = split_coeff(p)
            coef *= c
            out.extend(rest.args if type(rest) is Mul else (rest,))
        else:
            out.append(p)
    if coef == 0:
        return ZERO
    out.sort(key=lambda e: e._key)
    if not out:
        return Const(coef)
    term = out[0] if len(out) == 1 else Mul(out)
    return _scale(coef, term)


def neg(a) -> Expr:
    return mul(-1, a)


def sub(a, b) -> Expr:
    return add(a, neg(b))


def div(a, b) -> Expr:
    b = as_expr(b)
    if type(b) is Const:
        if b.value == 0:
            return Div(as_expr(a), b)
        return mul(Fraction(1) / b.value, a)
    return mul(a, power(b, -1))


def power(base, n) -> Expr:
    base = as_expr(base)
    n = Fraction(n)
    if n == 0:
        return ONE
    if n == 1:
        return base
    integral = n.denominator == 1
    tb = type(base)
    if tb is Const:
        if integral and not (base.value == 0 and n < 0):
            return Const(base.value ** int(n))
        if base.value == 1:
            return ONE
        return Pow(base, n)
    if tb is Neg and integral:
        p = power(base.arg, n)
        return p if n.numerator % 2 == 0 else neg(p)
    if tb is Pow and (integral or base.exp.denominator == 1 and base.exp > 0
                      and base.exp.numerator % 2 == 1):
        return power(base.base, base.exp * n)
    if tb is Mul and integral:
        return mul(*(power(f, n) for f in base.args))
    return Pow(base, n)


def func(name: str, arg) -> Expr:
    arg = as_expr(arg)
    if type(arg) is Const:
        v = arg.value
        if name == "exp" and v == 0:
            return ONE
        if name == "log" and v == 1:
            return ZERO
        if name in ("sin", "sqrt") and v == 0:
            return ZERO
        if name == "cos" and v == 0:
            return ONE
    if name == "log" and type(arg) is Func and arg.name == "exp":
        return arg.arg
    return Func(name, arg)


def exp(a) -> Expr:
    return func("exp", a)


def log(a) -> Expr:
    return func("log", a)


def sin(a) -> Expr:
    return func("sin", a)


def cos(a) -> Expr:
    return func("cos", a)


def sqrt(a) -> Expr:
    return func("sqrt", a)


def diff(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to the variable ``var``."""
    return _diff(as_expr(e), var, {})


def _diff(e: Expr, var: str, memo: dict) -> Expr:
    if var not in e.free:
        return ZERO
    hit = memo.get(e)
    if hit is not None:
        return hit
    t = type(e)
    if t is Var:
        out = ONE
    elif t is Add:
        out = add(*(_diff(a, var, memo) for a in e.args))
    elif t is Mul:
        terms = []
        args = e.args
        for i, a in enumerate(args):
            d = _diff(a, var, memo)
            if d is ZERO or d == ZERO:
                continue
            terms.append(mul(*args[:i], d, *args[i + 1:]))
        out = add(*terms)
    elif t is Pow:
        out = mul(e.exp, power(e.base, e.exp - 1), _diff(e.base, var, memo))
    elif t is Neg:
        out = neg(_diff(e.arg, var, memo))
    elif t is Div:
        dn = _diff(e.num, var, memo)
        dd = _diff(e.den, var, memo)
        out = sub(div(dn, e.den), mul(e.num, dd, power(e.den, -2)))
    elif t is Func:
        inner = _diff(e.arg, var, memo)
        a = e.arg
        if e.name == "exp":
            outer = e
        elif e.name == "log":
            outer = power(a, -1)
        elif e.name == "sin":
            outer = cos(a)
        elif e.name == "cos":
            outer = neg(sin(a))
        else:  # sqrt
            outer = mul(Fraction(1, 2), power(e, -1))
        out = mul(outer, inner)
    else:
        raise TypeError(f"unexpected node {e!r}")
    memo[e] = out
    return out


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the simplifying constructors."""
    return _rebuild(as_expr(e), {})


def _rebuild(e: Expr, memo: dict) -> Expr:
    t = type(e)
    if t is Const or t is Var:
        return e
    hit = memo.get(e)
    if hit is not None:
        return hit
    if t is Add:
        out = add(*(_rebuild(a, memo) for a in e.args))
    elif t is Mul:
        out = mul(*(_rebuild(a, memo) for a in e.args))
    elif t is Pow:
        out = power(_rebuild(e.base, memo), e.exp)
    elif t is Neg:
        out = neg(_rebuild(e.arg, memo))
    elif t is Div:
        out = div(_rebuild(e.num, memo), _rebuild(e.den, memo))
    else:
        out = func(e.name, _rebuild(e.arg, memo))
    memo[e] = out
    return out


def expand(e: Expr) -> Expr:
    """Distribute products and positive integer powers over sums."""
    return _expand(as_expr(e), {})


def _terms(e: Expr):
    return e.args if type(e) is Add else (e,)


def _expand(e: Expr, memo: dict) -> Expr:
    t = type(e)
    if t is Const or t is Var:
        return e
    hit = memo.get(e)
    if hit is not None:
        return hit
    if t is Add:
        out = add(*(_expand(a, memo) for a in e.args))
    elif t is Neg:
        out = add(*(neg(term) for term in _terms(_expand(e.arg, memo))))
    elif t is Mul:
        out = _expand_product([_expand(a, memo) for a in e.args])
    elif t is Div:
        num = _expand(e.num, memo)
        inv = power(_expand(e.den, memo), -1)
        out = add(*(mul(term, inv) for term in _terms(num)))
    elif t is Pow:
        base = _expand(e.base, memo)
        n = e.exp
        if type(base) is Add and n.denominator == 1 and n > 1:
            out = _expand_product([base] * int(n))
        else:
            out = power(base, n)
    else:
        out = func(e.name, _expand(e.arg, memo))
    memo[e] = out
    return out


def _expand_product(factors: list[Expr]) -> Expr:
    acc = [ONE]
    for f in factors:
        fterms = _terms(f)
        if len(fterms) == 1:
            acc = [mul(a, f) for a in acc]
        else:
            acc = [mul(a, b) for a in acc for b in fterms]
    return add(*acc)


def substitute(e: Expr, mapping: Mapping[str, object]) -> Expr:
    """Replace variables by expressions, simultaneously."""
    repl = {k: as_expr(v) for k, v in mapping.items()}
    return _subst(as_expr(e), repl, {})


def _subst(e: Expr, repl: dict, memo: dict) -> Expr:
    if not (e.free & repl.keys()):
        return e
    hit = memo.get(e)
    if hit is not None:
        return hit
    t = type(e)
    if t is Var:
        out = repl[e.name]
    elif t is Add:
        out = add(*(_subst(a, repl, memo) for a in e.args))
    elif t is Mul:
        out = mul(*(_subst(a, repl, memo) for a in e.args))
    elif t is Pow:
        out = power(_subst(e.base, repl, memo), e.exp)
    elif t is Neg:
        out = neg(_subst(e.arg, repl, memo))
    elif t is Div:
        out = div(_subst(e.num, repl, memo), _subst(e.den, repl, memo))
    else:
        out = func(e.name, _subst(e.arg, repl, memo))
    memo[e] = out
    return out


def variables(*names: str) -> tuple[Var, ...]:
    return tuple(Var(n) for n in names)


def linear_coefficients(e: Expr, symbols) -> tuple[dict[str, Expr], Expr]:
    """Split an expanded expression that is linear in ``symbols``.

    Returns ``({symbol: coefficient}, remainder)``. Raises ``ValueError`` if
    some term is nonlinear in the symbols.
    """
    symbols = frozenset(symbols)
    parts: dict[str, list[Expr]] = {}
    rest: list[Expr] = []
    for term in _terms(expand(e)):
        hits = term.free & symbols
        if not hits:
            rest.append(term)
            continue
        if len(hits) > 1:
            raise ValueError(f"term {term} is not linear in the given symbols")
        (s,) = hits
        c = diff(term, s)
        if s in c.free:
            raise ValueError(f"term {term} is not linear in {s}")
        parts.setdefault(s, []).append(c)
    return {s: add(*cs) for s, cs in parts.items()}, add(*rest)
