import numpy as np
import pytest

from helpers import poly_derivative_eval, random_j1_point, random_poly_lagrangian, regular_at
from jetinv.distribution import sample_point
from jetinv.equivalence import (
    Automorphism,
    prolong_automorphism,
    random_automorphism,
    transform_lagrangian,
)
from jetinv.invariants import (
    DomainError,
    HessianAtPoint,
    Lagrangian,
    gaussian_K,
    grad_invariant_I_jet,
    hessian,
    invariant_I,
    invariant_I_jet,
    invariant_V,
    invariant_values,
    signature,
)
from jetinv.jetcalc import JetCoordinateSystem

P2 = {"x": 0.3, "y1": -0.2, "y2": 0.7, "dy1": 0.8, "dy2": -1.1}


def lag(text, m):
    return Lagrangian.parse(text, m)


def sig(g):
    return signature(HessianAtPoint(np.asarray(g, float), float(np.linalg.det(g)), None))


# hessian and signature

def test_hessian_of_free_particle():
    h = hessian(lag("1/2*(dy1^2 + dy2^2)", 2), P2)
    assert np.array_equal(h.g, np.eye(2)) and h.signature == (2, 0)


def test_hessian_of_product():
    h = hessian(lag("dy1*dy2", 2), P2)
    assert np.array_equal(h.g, [[0, 1], [1, 0]]) and h.signature == (1, 1)


def test_hessian_of_exponential():
    h = hessian(lag("exp(dy1)", 1), {"x": 0, "y1": 0, "dy1": 0})
    assert h.g.tolist() == [[1.0]]


def test_hessian_is_exactly_symmetric(rng):
    L, _ = random_poly_lagrangian(3, rng)
    g = hessian(L, random_j1_point(3, rng)).g
    assert np.array_equal(g, g.T)


def test_degenerate_hessian_is_representable():
    h = hessian(lag("dy1 + y1", 1), {"x": 0, "y1": 0, "dy1": 1})
    assert h.det == 0 and h.signature is None


def test_signature_examples():
    assert sig(np.eye(3)) == (3, 0)
    assert sig(np.diag([1.0, -1.0])) == (1, 1)
    with pytest.raises(DomainError):
        sig(np.diag([1.0, 1e-13]))


def test_signature_is_congruence_invariant(rng):
    for _ in range(20):
        lam = rng.choice([-1, 1], 4) * rng.uniform(0.5, 2, 4)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        g = q @ np.diag(lam) @ q.T
        s = rng.normal(size=(4, 4)) + 3 * np.eye(4)
        want = (int(np.sum(lam > 0)), int(np.sum(lam < 0)))
        assert sig(g) == want
        assert sig(s.T @ g @ s) == want


# V and I

def test_V_free_particle(rng):
    L = lag("1/2*(dy1^2 + dy2^2 + dy3^2)", 3)
    p = random_j1_point(3, rng)
    v = np.array([p["dy1"], p["dy2"], p["dy3"]])
    assert invariant_V(L, p) == pytest.approx(v @ v, rel=1e-14)


def test_V_exponential(rng):
    p = random_j1_point(1, rng)
    assert invariant_V(lag("exp(dy1)", 1), p) == pytest.approx(np.exp(p["dy1"]), rel=1e-14)


def test_V_vanishes_with_zero_covector():
    p = dict(P2, dy1=0.0, dy2=0.0)
    assert invariant_V(lag("1/2*(dy1^2 + dy2^2)", 2), p) == 0


def test_I_free_particle(rng):
    L = lag("1/2*(dy1^2 + dy2^2)", 2)
    for _ in range(10):
        assert invariant_I(L, random_j1_point(2, rng)) == pytest.approx(2, rel=1e-14)


def test_I_exponential(rng):
    for _ in range(10):
        assert invariant_I(lag("exp(dy1)", 1), random_j1_point(1, rng)) == pytest.approx(1, rel=1e-14)


def test_I_of_rescaled_free_particle():
    p = {"x": 0.4, "y1": 1.0, "dy1": 0.7}
    assert invariant_I(lag("dy1^2/16", 1), p) == pytest.approx(2, rel=1e-14)


def test_I_outside_domain():
    with pytest.raises(DomainError) as info:
        invariant_V(lag("dy1", 1), {"x": 0, "y1": 0, "dy1": 1})
    assert info.value.locus == "O2"
    with pytest.raises(DomainError) as info:
        invariant_I(lag("1/2*dy1^2", 1), {"x": 0, "y1": 0, "dy1": 0})
    assert info.value.locus == "O'2"


def test_invariant_values_bundle():
    val = invariant_values(lag("1/2*(dy1^2 + dy2^2) + 1", 2), P2)
    assert val.I == pytest.approx(val.V / (0.5 * (0.8 ** 2 + 1.1 ** 2) + 1))
    assert val.K == pytest.approx(0, abs=1e-15)


@pytest.mark.parametrize("c", [3.0, -0.5, 1e3])
def test_scaling_weights(c, rng):
    L, coeffs = random_poly_lagrangian(2, rng)
    cL = Lagrangian(L.expr * c, 2)
    for _ in range(10):
        p = random_j1_point(2, rng)
        if not regular_at(L, p):
            continue
        assert invariant_V(cL, p) == pytest.approx(c * invariant_V(L, p), rel=1e-10)
        assert invariant_I(cL, p) == pytest.approx(invariant_I(L, p), rel=1e-10)


# transformation laws

def guarded_pairs(L, Phi, rng, count):
    out = []
    while len(out) < count:
        p = random_j1_point(L.m, rng)
        q = prolong_automorphism(Phi, p)
        if regular_at(L, q):
            out.append((p, q))
    return out


@pytest.mark.parametrize("m", [1, 2])
def test_V_transformation_law(m, rng):
    L, _ = random_poly_lagrangian(m, rng)
    for _ in range(5):
        Phi = random_automorphism(m, rng)
        Lbar = transform_lagrangian(L, Phi)
        for p, q in guarded_pairs(L, Phi, rng, 5):
            lhs = invariant_V(Lbar, p) * Phi.dphi_at(p)
            rhs = invariant_V(L, q)
            assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(rhs))


@pytest.mark.parametrize("reverse", [False, True])
def test_I_invariant_including_orientation_reversal(reverse, rng):
    L, _ = random_poly_lagrangian(2, rng)
    for _ in range(5):
        Phi = random_automorphism(2, rng, reverse=reverse)
        Lbar = transform_lagrangian(L, Phi)
        for p, q in guarded_pairs(L, Phi, rng, 5):
            a, b = invariant_I(Lbar, p), invariant_I(L, q)
            assert abs(a - b) <= 1e-8 * (1 + abs(b))


def test_hessian_covariance(rng):
    from jetinv.equivalence import pullback_lagrangian

    L, _ = random_poly_lagrangian(2, rng)
    for _ in range(5):
        Phi = random_automorphism(2, rng)
        pulled = pullback_lagrangian(L, Phi)
        for p, q in guarded_pairs(L, Phi, rng, 5):
            J = Phi.fiber_jacobian(p)
            g = hessian(L, q).g
            lhs = J.T @ g @ J
            rhs = hessian(pulled, p).g
            assert np.max(np.abs(lhs - rhs)) <= 1e-8 * np.linalg.norm(g, 2)


def test_signature_flips_with_orientation(rng):
    L = lag("1 + 1/2*dy1^2 - 1/2*dy2^2 + 1/10*dy1^3", 2)
    for reverse in (False, True):
        Phi = random_automorphism(2, rng, reverse=reverse)
        Lbar = transform_lagrangian(L, Phi)
        for p, q in guarded_pairs(L, Phi, rng, 5):
            s, sbar = hessian(L, q).signature, hessian(Lbar, p).signature
            assert sbar == (s[::-1] if reverse else s)


# Gaussian curvature

def test_K_requires_m2():
    with pytest.raises(ValueError):
        gaussian_K(lag("1/2*dy1^2", 1), {"x": 0, "y1": 0, "dy1": 1})


def test_K_vanishes_for_quadratic_and_separable(rng):
    for text in ("1/2*(dy1^2 + dy2^2)", "exp(dy1) + exp(dy2)", "3*dy1^2 - dy1*dy2 + dy2^2 + x*y1"):
        for _ in range(5):
            assert abs(gaussian_K(lag(text, 2), random_j1_point(2, rng))) <= 1e-10


def brioschi_K(coeffs, dy, h=1e-3):
    """Curvature of E du^2 + 2F du dv + G dv^2 by finite differences.

    The metric is evaluated from the polynomial coefficients directly, so this
    shares nothing with the symbolic route.
    """
    def metric(u, v):
        pt = (u, v)
        E = poly_derivative_eval(coeffs, 2, (2, 0), pt)
        F = poly_derivative_eval(coeffs, 2, (1, 1), pt)
        G = poly_derivative_eval(coeffs, 2, (0, 2), pt)
        return np.array([E, F, G])

    u, v = dy
    c = metric(u, v)
    du = (metric(u + h, v) - metric(u - h, v)) / (2 * h)
    dv = (metric(u, v + h) - metric(u, v - h)) / (2 * h)
    duu = (metric(u + h, v) - 2 * c + metric(u - h, v)) / h ** 2
    dvv = (metric(u, v + h) - 2 * c + metric(u, v - h)) / h ** 2
    duv = (metric(u + h, v + h) - metric(u + h, v - h) - metric(u - h, v + h)
           + metric(u - h, v - h)) / (4 * h ** 2)
    E, F, G = c
    Eu, Fu, Gu = du
    Ev, Fv, Gv = dv
    Evv, Guu, Fuv = dvv[0], duu[2], duv[1]
    m1 = np.array([[-Evv / 2 + Fuv - Guu / 2, Eu / 2, Fu - Ev / 2],
                   [Fv - Gu / 2, E, F],
                   [Gv / 2, F, G]])
    m2 = np.array([[0, Ev / 2, Gu / 2],
                   [Ev / 2, E, F],
                   [Gu / 2, F, G]])
    return (np.linalg.det(m1) - np.linalg.det(m2)) / (E * G - F * F) ** 2


def brioschi_worst(rng, lagrangians=5, points=10):
    worst = 0.0
    for _ in range(lagrangians):
        L, coeffs = random_poly_lagrangian(2, rng)
        done = 0
        while done < points:
            p = random_j1_point(2, rng)
            if not regular_at(L, p, margin=5e-2):
                continue
            k = gaussian_K(L, p)
            oracle = brioschi_K(coeffs, (p["dy1"], p["dy2"]))
            worst = max(worst, abs(k - oracle) / max(abs(oracle), 1e-3))
            done += 1
    return worst


def test_K_matches_brioschi_oracle(rng):
    assert brioschi_worst(rng) <= 1e-6


def vertical_K_worst(rng, maps=10, points=10):
    L, _ = random_poly_lagrangian(2, rng)
    worst = 0.0
    for _ in range(maps):
        Phi = random_automorphism(2, rng, vertical=True)
        Lbar = transform_lagrangian(L, Phi)
        for p, q in guarded_pairs(L, Phi, rng, points):
            a, b = gaussian_K(Lbar, p), gaussian_K(L, q)
            worst = max(worst, abs(a - b) / max(abs(b), 1e-3))
    return worst


def test_K_invariant_under_vertical_maps(rng):
    assert vertical_K_worst(rng) <= 1e-6


def test_K_weight_under_non_vertical_maps(rng):
    # derived law: K picks up a factor phi' while K*L is unweighted
    L, _ = random_poly_lagrangian(2, rng)
    for reverse in (False, True):
        Phi = random_automorphism(2, rng, reverse=reverse)
        Lbar = transform_lagrangian(L, Phi)
        for p, q in guarded_pairs(L, Phi, rng, 5):
            kbar, k = gaussian_K(Lbar, p), gaussian_K(L, q)
            assert kbar == pytest.approx(Phi.dphi_at(p) * k, rel=1e-7, abs=1e-10)
            assert kbar * Lbar.value(p) == pytest.approx(k * L.value(q), rel=1e-7, abs=1e-10)


def test_identity_map_leaves_K_unchanged(rng):
    L, _ = random_poly_lagrangian(2, rng)
    Phi = Automorphism.identity(2)
    p = random_j1_point(2, rng)
    assert gaussian_K(transform_lagrangian(L, Phi), p) == gaussian_K(L, p)


# I as a function on J^2(q)

@pytest.mark.parametrize("m", [1, 2, 3])
def test_jet_gradient_matches_finite_differences(m, rng):
    sys = JetCoordinateSystem.lagrangian(m, 2)
    p = sample_point(m, 2, None, rng)
    grad = grad_invariant_I_jet(m, p)
    h = 1e-6
    for k, name in enumerate(sys.coordinates):
        up, down = dict(p), dict(p)
        up[name] += h
        down[name] -= h
        fd = (invariant_I_jet(m, up) - invariant_I_jet(m, down)) / (2 * h)
        assert fd == pytest.approx(grad[k], rel=1e-5, abs=1e-6 * np.abs(grad).max())


def test_jet_I_agrees_with_lagrangian_I(rng):
    # the 2-jet of z = L at a point carries the same I
    L, coeffs = random_poly_lagrangian(2, rng)
    p = random_j1_point(2, rng)
    while not regular_at(L, p):
        p = random_j1_point(2, rng)
    dy = (p["dy1"], p["dy2"])
    jet = dict(p, z=L.value(p))
    for name, orders in (("z_dy1", (1, 0)), ("z_dy2", (0, 1)), ("z_dy1dy1", (2, 0)),
                         ("z_dy1dy2", (1, 1)), ("z_dy2dy2", (0, 2))):
        jet[name] = poly_derivative_eval(coeffs, 2, orders, dy)
    assert invariant_I_jet(2, jet) == pytest.approx(invariant_I(L, p), rel=1e-12)
