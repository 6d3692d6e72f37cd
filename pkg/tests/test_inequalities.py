import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from dpkirchhoff.inequalities import (DegenerateCase, audit_homogeneity,
                                      audit_monotone_pairing, audit_orthogonal_invariance,
                                      audit_vector_inequality, homogeneity_check, lambda_ratio,
                                      monotone_pairing, norm_modular_relations,
                                      orthogonal_invariance_check, reduction_check,
                                      young_bound_check)
from dpkirchhoff.mesh import DiscreteFunction, rect_mesh, zero_boundary

vec2 = st.lists(st.floats(-10, 10), min_size=2, max_size=2).map(np.array)


def test_tight_case():
    c = lambda_ratio([1, 0], [0, 1], 2, 2, 2)
    assert c.lhs == pytest.approx(2) and c.rhs == pytest.approx(2) and c.holds


def test_zero_y_case():
    c = lambda_ratio([1, 0], [0, 0], 2, 1, 2)
    assert c.lhs == pytest.approx(2) and c.rhs == pytest.approx(4)


def test_counterexample_outside_unit_regime():
    c = lambda_ratio([10, 0], [9, 0], 2, 1, 2)
    assert c.lhs == pytest.approx(11) and c.rhs == pytest.approx(4)
    assert not c.holds


def test_degenerate_and_bad_input():
    with pytest.raises(DegenerateCase):
        lambda_ratio([1, 0], [1, 0], 1, 2, 3)
    with pytest.raises(ValueError):
        lambda_ratio([1, 0], [0, 1], 0, 1, 2)
    with pytest.raises(ValueError):
        lambda_ratio([1, 0], [0, 1], 1, 1, 0.5)


@given(vec2, vec2, st.floats(0.1, 10), st.floats(1, 4))
def test_equal_weights_give_equality(x, y, a, p):
    try:
        c = lambda_ratio(x, y, a, a, p)
    except DegenerateCase:
        return
    assert c.lhs == pytest.approx(a, rel=1e-9) and c.rhs == a


def test_orthogonal_examples(rng):
    x, y = rng.normal(size=2), rng.normal(size=2)
    th = np.pi / 3
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    for T in (np.eye(2), rot, np.diag([1.0, -1.0])):
        assert orthogonal_invariance_check(x, y, 1.5, 3.0, 2.5, T)
    with pytest.raises(ValueError):
        orthogonal_invariance_check(x, y, 1.5, 3.0, 2.5, np.diag([2.0, 1.0]))


def test_orthogonal_and_homogeneity_audits():
    assert audit_orthogonal_invariance(500) == 0
    assert audit_homogeneity(500) == 0


@given(vec2, vec2, st.floats(0.1, 10), st.floats(0.1, 10), st.floats(1.01, 4),
       st.floats(0.01, 100))
def test_homogeneity_property(x, y, a, b, p, c):
    assume(np.linalg.norm(x) > 1e-3 and np.linalg.norm(y) > 1e-3)
    try:
        lambda_ratio(x, y, a, b, p)
        lambda_ratio(c * x, c * y, a, b, p)
    except DegenerateCase:
        return
    assert homogeneity_check(x, y, a, b, p, c)


def test_reduction_examples(rng):
    assert reduction_check(np.zeros(3), 2.0, 0.5, 2.5)
    c = lambda_ratio([1, 0, 0], [0, 0, 0], 2.0, 0.5, 2.5)
    assert c.lhs <= 2.0 + 2 * 1.5 + 1e-12
    with pytest.raises(DegenerateCase):
        reduction_check(np.array([1.0, 0.0]), 1.0, 2.0, 3.0)
    for _ in range(200):
        n = rng.choice([2, 5])
        assert reduction_check(rng.normal(size=n) * 10 ** rng.uniform(-2, 2),
                               rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(1, 4))


def test_audit_failures_confined_to_large_X():
    rep = audit_vector_inequality(20_000, seed=7)
    assert rep.cases == 20_000
    assert rep.failures_with_unit_X == 0
    assert rep.triangle_bound_failures == 0
    for ex in rep.failure_examples:
        p = ex["p"]
        assert np.linalg.norm(ex["x"]) ** (p - 1) > 1


def test_audit_unit_regime_passes():
    rep = audit_vector_inequality(20_000, seed=3, magnitude_range=(1e-2, 1.0))
    assert rep.failures == 0


def test_audit_reproducible():
    a = audit_vector_inequality(5000, seed=11).to_dict()
    b = audit_vector_inequality(5000, seed=11).to_dict()
    assert a == b


def test_monotone_pairing():
    assert audit_monotone_pairing(10_000) == 0
    assert monotone_pairing(np.array([[1.0, 2.0]]), np.array([[1.0, 2.0]]), 1.5)[0] == 0.0


def test_young_bound(fields, rng):
    p, q, mu = fields
    m = rect_mesh(3)
    z = DiscreteFunction(m, np.zeros(m.n_vertices))
    assert young_bound_check(z, z, p, q, mu)
    for _ in range(50):
        u = DiscreteFunction(m, zero_boundary(m, 10 ** rng.uniform(-2, 3) * rng.normal(
            size=m.n_vertices)))
        v = DiscreteFunction(m, zero_boundary(m, 10 ** rng.uniform(-2, 3) * rng.normal(
            size=m.n_vertices)))
        assert young_bound_check(u, v, p, q, mu)


def test_young_bound_fails_at_unit_shift(fields):
    # the constant is too small for Theta(u + v) on some random pairs
    p, q, mu = fields
    m = rect_mesh(3)
    r = np.random.default_rng(0)
    fails = 0
    for _ in range(200):
        u = DiscreteFunction(m, zero_boundary(m, 10 ** r.uniform(-2, 2) * r.normal(
            size=m.n_vertices)))
        v = DiscreteFunction(m, zero_boundary(m, 10 ** r.uniform(-2, 2) * r.normal(
            size=m.n_vertices)))
        assert young_bound_check(u, v, p, q, mu)
        fails += not young_bound_check(u, v, p, q, mu, shifts=(1.0,))
    assert fails > 0


def test_norm_relations_suite(fields, rng):
    p, q, mu = fields
    m = rect_mesh(3)
    for _ in range(20):
        u = DiscreteFunction(m, zero_boundary(m, 10 ** rng.uniform(-2, 2) * rng.normal(
            size=m.n_vertices)))
        rel = norm_modular_relations(u, p, q, mu, q)
        assert all(v for k, v in rel.items() if isinstance(v, (bool, np.bool_))), rel
