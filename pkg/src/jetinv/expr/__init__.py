"""Exact symbolic expressions: parse, differentiate, simplify, evaluate."""

from .algebra import (
    add,
    const,
    cos,
    diff,
    div,
    exp,
    expand,
    func,
    linear_coefficients,
    log,
    mul,
    neg,
    power,
    simplify,
    sin,
    sqrt,
    sub,
    substitute,
    variables,
)
from .evaluate import (
    EvaluationDomainError,
    UnboundVariableError,
    compile_expressions,
    evaluate,
)
from .nodes import (
    FUNCTIONS,
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
from .parser import ParseError, parse
from .printer import to_string

__all__ = [
    "FUNCTIONS", "ONE", "ZERO", "Add", "Const", "Div", "Expr", "Func", "Mul",
    "Neg", "Pow", "Var", "as_expr", "add", "const", "cos", "diff", "div", "exp",
    "expand", "func", "linear_coefficients", "log", "mul", "neg", "power",
    "simplify", "sin", "sqrt", "sub", "substitute", "variables",
    "EvaluationDomainError", "UnboundVariableError", "compile_expressions",
    "evaluate", "ParseError", "parse", "to_string",
]
