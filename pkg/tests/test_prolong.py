import numpy as np
import pytest

from jetinv.expr import ZERO, evaluate, parse, simplify
from jetinv.expr.evaluate import UnboundVariableError
from jetinv.jetcalc import JetCoordinateSystem, JetError
from jetinv.prolong import (
    ProjectableField,
    VectorFieldJetData,
    coefficients_explicit,
    evaluate_lift,
    first_prolong,
    generic_lift,
    lift_order,
    lift_tilde,
)


def field(u, *v):
    return ProjectableField.parse(u, list(v))


def random_point(system, rng):
    return dict(zip(system.coordinates, rng.uniform(-2, 2, system.dimension).tolist()))


def numerically_equal(e, want, names, rng, count=5):
    for _ in range(count):
        p = dict(zip(names, rng.uniform(-2, 2, len(names))))
        a, b = evaluate(e, p), evaluate(want, p)
        if abs(a - b) > 1e-12 * (1 + abs(b)):
            return False
    return True


def test_field_validation():
    with pytest.raises(JetError):
        field("y1", "0")
    with pytest.raises(JetError):
        field("x", "dy1")
    assert field("0", "x").vertical


@pytest.mark.parametrize("u, v, want", [
    ("x", "0", "-dy1"),
    ("0", "y1", "dy1"),
    ("0", "x", "1"),
])
def test_first_prolong_examples(u, v, want):
    assert first_prolong(field(u, v)) == [parse(want)]


def test_first_prolong_scaling_all_components():
    X = field("x", "0", "0", "0")
    assert first_prolong(X) == [parse(f"-dy{a}") for a in (1, 2, 3)]


@pytest.mark.parametrize("u, want", [("x", "-z"), ("0", "0"), ("x^2/2", "-x*z")])
def test_lift_tilde_z_coefficient(u, want, rng):
    L = lift_tilde(field(u, "y1"))
    assert numerically_equal(L["z"], parse(want), ["x", "z"], rng)


def test_lift_fixes_base_action():
    X = field("x^2 + 1", "x*y1 + y2", "sin(y1)")
    for r in (0, 1, 2):
        L = lift_order(X, r)
        assert L["x"] == X.u
        assert L["y1"] == X.v[0] and L["y2"] == X.v[1]


def test_constant_vertical_field_has_no_first_order_terms():
    L = lift_order(field("0", "3", "-1"), 1)
    sys = L.system
    for name in sys.fiber_coordinates:
        if sys.fiber_order(name) == 1:
            assert L[name] == ZERO


def test_scaling_A_coefficient():
    L = lift_order(field("x", "0"), 1)
    assert L["z_x"] == simplify(parse("-2*z_x"))


def test_scaling_Dxx_coefficient():
    L = lift_order(field("x", "0"), 2)
    assert L["z_xx"] == simplify(parse("-3*z_xx"))


def test_data_from_field_matches_symbolic_derivatives():
    X = field("x^3", "x^2*y1 + y1^3")
    d = VectorFieldJetData.from_field(X, {"x": 2.0, "y1": -1.0})
    assert d["u_xxx"] == 6 and d["u_xx"] == 12 and d["u_x"] == 12
    assert d["v1_xxy1"] == 2 and d["v1_y1y1y1"] == 6 and d["v1_xy1"] == 4


def test_data_rejects_unknown_names():
    with pytest.raises(JetError):
        VectorFieldJetData(1, {"v2_x": 1.0})


def test_data_stores_symmetric_slots_once():
    d = VectorFieldJetData.zeros(2)
    assert "v1_y1y2" in d.values and "v1_y2y1" not in d.values


# evaluation of generic lifts

@pytest.mark.parametrize("r", [0, 1, 2])
def test_zero_data_gives_zero_vector(r, rng):
    L = generic_lift(2, r)
    p = random_point(L.system, rng)
    assert not np.any(evaluate_lift(L, VectorFieldJetData.zeros(2), p))


def test_translation_is_unit_x():
    L = generic_lift(1, 2)
    p = random_point(L.system, np.random.default_rng(0))
    vec = evaluate_lift(L, VectorFieldJetData(1, {"u": 1.0}), p)
    assert vec.tolist() == [1.0] + [0.0] * (L.system.dimension - 1)


def test_unbound_symbol_is_named():
    L = generic_lift(1, 1)
    with pytest.raises(UnboundVariableError) as info:
        evaluate_lift(L, VectorFieldJetData.zeros(1), {"x": 0.0})
    assert info.value.name in L.system.coordinates


@pytest.mark.parametrize("m", [1, 2])
def test_generic_lift_agrees_with_concrete_field(m, rng):
    # the generic route with data from a concrete field equals the concrete lift
    v = ["x*y1^2 - y1" if a == 1 else f"sin(x)*y{a} + y1*y{a}^2" for a in range(1, m + 1)]
    X = field("x^3 - 2*x", *v)
    concrete = lift_order(X, 2)
    generic = generic_lift(m, 2)
    for _ in range(5):
        p = random_point(concrete.system, rng)
        data = VectorFieldJetData.from_field(X, p)
        a = evaluate_lift(concrete, None, p)
        b = evaluate_lift(generic, data, p)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_evaluate_is_linear_in_data(rng):
    L = generic_lift(2, 2)
    p = random_point(L.system, rng)
    d1, d2 = VectorFieldJetData.random(2, rng), VectorFieldJetData.random(2, rng)
    lhs = evaluate_lift(L, d1.scaled(2.5) + d2, p)
    rhs = 2.5 * evaluate_lift(L, d1, p) + evaluate_lift(L, d2, p)
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


def test_batched_data_matches_single(rng):
    L = generic_lift(1, 2)
    p = random_point(L.system, rng)
    batch = VectorFieldJetData.random(1, rng, size=4)
    rows = evaluate_lift(L, batch, p)
    for k in range(4):
        single = VectorFieldJetData(1, {n: v[k] for n, v in batch.values.items()})
        assert np.array_equal(rows[k], evaluate_lift(L, single, p))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_base_slots_equal_field_values(m, rng):
    L = generic_lift(m, 2)
    p = random_point(L.system, rng)
    d = VectorFieldJetData.random(m, rng)
    vec = evaluate_lift(L, d, p)
    assert vec[0] == d["u"]
    assert [vec[a] for a in range(1, m + 1)] == [d[f"v{a}"] for a in range(1, m + 1)]


@pytest.mark.parametrize("m", [1, 2, 3])
def test_vertical_lift_has_no_z_term(m, rng):
    L = generic_lift(m, 1)
    p = random_point(L.system, rng)
    d = VectorFieldJetData.random(m, rng)
    d.values.update(u=0.0, u_x=0.0, u_xx=0.0, u_xxx=0.0)
    assert evaluate_lift(L, d, p)[L.system.position["z"]] == 0.0


# closed formulas versus generic prolongation

def test_explicit_zero_data():
    sys = JetCoordinateSystem.lagrangian(2, 2)
    p = random_point(sys, np.random.default_rng(1))
    assert not np.any(coefficients_explicit(VectorFieldJetData.zeros(2), p))


@pytest.mark.parametrize("m", [1, 2, 3])
def test_explicit_scaling_weights(m, rng):
    sys = JetCoordinateSystem.lagrangian(m, 2)
    p = random_point(sys, rng)
    vec = coefficients_explicit(VectorFieldJetData(m, {"u_x": 1.0}), p)
    pos = sys.position
    assert vec[pos["z"]] == -p["z"]
    assert vec[pos["z_x"]] == -2 * p["z_x"]
    assert vec[pos["z_xx"]] == -3 * p["z_xx"]
    for a in range(1, m + 1):
        for b in range(a, m + 1):
            name = f"z_dy{a}dy{b}"
            assert vec[pos[name]] == pytest.approx(p[name], rel=1e-15)


def explicit_vs_generic(m, rng, pairs):
    L = generic_lift(m, 2)
    worst = 0.0
    for _ in range(pairs):
        d = VectorFieldJetData.random(m, rng)
        p = random_point(L.system, rng)
        a, b = evaluate_lift(L, d, p), coefficients_explicit(d, p)
        worst = max(worst, np.max(np.abs(a - b)) / np.max(np.abs(a)))
    return worst


@pytest.mark.parametrize("m", [1, 2, 3])
def test_explicit_matches_generic(m, rng):
    assert explicit_vs_generic(m, rng, 100) <= 1e-9


def test_explicit_matches_generic_order_one_slots(rng):
    # J^1(q) coefficients are a prefix-compatible subset of the J^2(q) ones
    m = 2
    L1, L2 = generic_lift(m, 1), generic_lift(m, 2)
    p = random_point(L2.system, rng)
    d = VectorFieldJetData.random(m, rng)
    full = dict(zip(L2.system.coordinates, coefficients_explicit(d, p)))
    first = dict(zip(L1.system.coordinates, evaluate_lift(L1, d, p)))
    for k, v in first.items():
        assert v == pytest.approx(full[k], rel=1e-12, abs=1e-12)
