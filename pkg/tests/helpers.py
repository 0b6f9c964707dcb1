"""Shared builders for tests: random Lagrangians, points and oracles."""

import itertools
from fractions import Fraction

import numpy as np

from jetinv.expr import parse
from jetinv.invariants import DomainError, Lagrangian, hessian, j1_names


def frac(v, den=1000):
    return Fraction(round(float(v), 3)).limit_denominator(den)


def poly_coefficients(m, rng):
    """Random degree-4 polynomial in dy: {exponent tuple: coefficient}.

    The constant and quadratic parts dominate so the Hessian is regular on
    most of [-1, 1]^m; cubic and quartic terms are small but not negligible.
    """
    coeffs = {}
    for k in range(5):
        for combo in itertools.combinations_with_replacement(range(m), k):
            exps = [0] * m
            for a in combo:
                exps[a] += 1
            exps = tuple(exps)
            if k == 0:
                c = rng.uniform(1.0, 2.0)
            elif k == 2 and max(exps) == 2:
                c = rng.uniform(0.5, 1.0) * (1 if rng.random() < 0.7 else -1)
            elif k == 2:
                c = rng.uniform(-0.3, 0.3)
            else:
                c = rng.uniform(-0.2, 0.2)
            coeffs[exps] = frac(c)
    return coeffs


def poly_text(coeffs):
    terms = []
    for exps, c in coeffs.items():
        mono = "*".join(f"dy{a + 1}^{e}" for a, e in enumerate(exps) if e)
        terms.append(f"({c})" + ("*" + mono if mono else ""))
    return " + ".join(terms)


def random_poly_lagrangian(m, rng):
    coeffs = poly_coefficients(m, rng)
    return Lagrangian(parse(poly_text(coeffs)), m), coeffs


def sample_lagrangians(m, rng):
    """Quadratic, exponential and random quartic test Lagrangians for fiber dimension m."""
    quad = Lagrangian.parse("1/2*(" + " + ".join(f"dy{a}^2" for a in range(1, m + 1)) + ")", m)
    if m == 1:
        expo = Lagrangian.parse("exp(dy1)", 1)
    else:
        # exp(dy1) alone has a singular Hessian when m > 1
        rest = " + ".join(f"dy{a}^2" for a in range(2, m + 1))
        expo = Lagrangian.parse(f"exp(dy1) + 1/2*({rest})", m)
    poly, _ = random_poly_lagrangian(m, rng)
    return {"quadratic": quad, "exponential": expo, "quartic": poly}


def regular_at(L, p, margin=1e-2):
    """L is in the domain of I at p with some room to spare."""
    try:
        h = hessian(L, p)
        value = L.value(p)
    except (DomainError, ArithmeticError):
        return False
    scale = max(1.0, np.abs(h.g).max())
    return abs(h.det) > margin * scale ** L.m and abs(value) > margin


def random_j1_point(m, rng, lo=-1.0, hi=1.0):
    return dict(zip(j1_names(m), rng.uniform(lo, hi, 2 * m + 1).tolist()))


def poly_derivative_eval(coeffs, m, orders, dy):
    """Evaluate a partial dy-derivative of the polynomial with plain numpy."""
    total = 0.0
    for exps, c in coeffs.items():
        term = float(c)
        for a in range(m):
            e, k = exps[a], orders[a]
            if k > e:
                term = 0.0
                break
            term *= np.prod(np.arange(e - k + 1, e + 1)) * dy[a] ** (e - k)
        total += term
    return total
