import json
import math

import numpy as np
import pytest

from dpkirchhoff.config import ProblemConfig, build_problem
from dpkirchhoff.energy import KirchhoffModel
from dpkirchhoff.exponents import ExponentField, WeightField
from dpkirchhoff.mesh import MeshError, rect_mesh
from dpkirchhoff.theorem import (K_ubar_sandwich, build_cutoff, coercivity_certificate,
                                 embedding_ratios, estimate_c_H, omega_ball, sandwich_study,
                                 sigma_bounds, sigma_lower_terms, sigma_upper_value)

from oracles import omega_recursive, sigma_oracle

ZERO_MU = WeightField(lambda x: np.zeros(x.shape[:-1]), 0.0, 0.0)


def test_omega_closed_forms():
    assert omega_ball(1) == pytest.approx(2.0, rel=1e-12)
    assert omega_ball(2) == pytest.approx(math.pi, rel=1e-12)
    assert omega_ball(3) == pytest.approx(4 * math.pi / 3, rel=1e-12)
    for N in (3, 4, 5):
        assert omega_ball(N) == pytest.approx(omega_recursive(N), rel=1e-12)
    with pytest.raises(ValueError):
        omega_ball(0)


def test_cutoff_nodal_values():
    m = rect_mesh(4)
    c = build_cutoff(m, 0.5, (0.5, 0.5), 0.1)
    V = m.vertices
    at = lambda x, y: c.values[np.flatnonzero((V[:, 0] == x) & (V[:, 1] == y))[0]]
    assert at(0.5, 0.5) == 0.1
    assert at(0.875, 0.5) == pytest.approx(0.05, rel=1e-14)   # |x - x0| = 3R/4
    assert at(0.0625, 0.0625) == 0.0                           # outside the ball
    assert not np.any(c.values[m.boundary])


def test_cutoff_ball_must_fit():
    with pytest.raises(MeshError):
        build_cutoff(rect_mesh(3), 0.6, (0.5, 0.5), 0.1)
    with pytest.raises(MeshError):
        build_cutoff(rect_mesh(3), 0.5, (0.4, 0.5), 0.1)


@pytest.mark.xfail(strict=True, reason="a P1 interpolant of a cone is not exactly radial")
def test_cutoff_gradient_exact_on_annulus():
    c = build_cutoff(rect_mesh(5), 0.5, (0.5, 0.5), 0.1)
    g = c.u.grad_norm()[c.annulus_elements()]
    assert np.allclose(g, 0.4, rtol=1e-10, atol=0)


def test_cutoff_gradient_converges_linearly():
    errs = []
    for lev in (3, 4, 5, 6):
        c = build_cutoff(rect_mesh(lev), 0.5, (0.5, 0.5), 0.1)
        g = c.u.grad_norm()[c.annulus_elements()]
        errs.append(np.abs(g / 0.4 - 1).max())
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 1.7)


def test_sandwich_closed_form_limit():
    p = ExponentField.constant(1.5)
    q = ExponentField.constant(1.7)
    model = KirchhoffModel.power(1.0, 1.2)
    exact = ((0.4 ** 1.5 / 1.5) * math.pi * (0.25 - 0.0625)) ** 1.2 / 1.2
    errs = []
    for lev in (4, 5, 6):
        s = K_ubar_sandwich(build_cutoff(rect_mesh(lev), 0.5, (0.5, 0.5), 0.1), model, p, q,
                            ZERO_MU)
        errs.append(abs(s.K_value / exact - 1))
        assert s.holds
    assert errs[0] > errs[1] > errs[2] and errs[2] < 0.015


def test_sandwich_vanishes_with_delta(problem):
    m = problem.mesh
    vals = []
    for d in (1e-1, 1e-3, 1e-6):
        s = K_ubar_sandwich(build_cutoff(m, 0.5, (0.5, 0.5), d), problem.model, problem.p,
                            problem.q, problem.mu)
        vals.append(max(s))
    assert vals[0] > vals[1] > vals[2] and vals[2] < 1e-6


def test_sandwich_refinement(problem):
    rows = sandwich_study(problem, levels=(2, 3, 4, 5))
    assert all(r["slack"] == 0.0 for r in rows)


def test_certificate_default(problem):
    c = sigma_bounds(problem)
    assert c.hypothesis_f4_holds and c.interval_nonempty
    assert c.r_param < c.r_cap
    lo, hi = c.lambda_interval
    assert lo == pytest.approx(1 / c.sigma_upper) and hi == pytest.approx(1 / c.sigma_lower)
    assert c.sigma_lower == pytest.approx(c.sigma_lower_raw * 2.0 ** c.s_plus, rel=1e-12)
    json.dumps(c.to_dict(), allow_nan=False)


def test_certificate_matches_high_precision(problem):
    c = sigma_bounds(problem).to_dict()
    lo, hi, cap = sigma_oracle(c)
    assert c["sigma_lower"] == pytest.approx(lo, rel=1e-12)
    assert c["sigma_upper"] == pytest.approx(hi, rel=1e-12)
    assert c["r_cap"] == pytest.approx(cap, rel=1e-12)


def test_r_param_above_cap(problem):
    c = sigma_bounds(problem, r_param=0.06)
    assert c.r_param >= c.r_cap
    assert not c.hypothesis_f4_holds and c.lambda_interval is None


def test_zero_inf_F_gives_empty_interval():
    d = ProblemConfig().to_dict()
    d["nonlinearity"]["c2bar"] = 0.0
    d["domain"]["mesh_level"] = 3
    c = sigma_bounds(build_problem(ProblemConfig.from_dict(d)))
    assert c.sigma_upper == 0.0 and not c.hypothesis_f4_holds and c.lambda_interval is None


def test_sigma_lower_linear_in_c2bar():
    args = (1.7, 1.3, 1.2, 1.0, 1.1, 1.1, 0.002)
    t1 = sigma_lower_terms(0.3, 0.5, 0.29, *args)
    t2 = sigma_lower_terms(0.3, 1.0, 0.29, *args)
    assert t2[1] == pytest.approx(2 * t1[1], rel=1e-15) and t2[0] == t1[0]


def test_sigma_upper_monotone_in_inf_F():
    model = KirchhoffModel.power(1.0, 1.2)
    vals = [sigma_upper_value(f, model, 1.3, 1.7, 1.0, 0.5, 0.1) for f in (0.01, 0.02, 0.05)]
    assert vals[0] < vals[1] < vals[2]
    assert sigma_upper_value(0.0, model, 1.3, 1.7, 1.0, 0.5, 0.1) == 0.0


@pytest.mark.parametrize("r_param", [1e-4, 5e-4, 2e-3, 1e-2, 4e-2])
def test_certificate_consistency(problem, r_param):
    c = sigma_bounds(problem, r_param=r_param, c_H=0.144)
    assert c.hypothesis_f4_holds == (c.sigma_lower < c.sigma_upper and c.r_param < c.r_cap)
    assert c.interval_nonempty == c.hypothesis_f4_holds


def test_c_H_scale_invariance_and_prefix_monotone(problem):
    m, p, q, mu, s = problem.mesh, problem.p, problem.q, problem.mu, problem.nl.s
    small = estimate_c_H(problem, trials=8)
    large = estimate_c_H(problem, trials=32)
    assert small <= large
    r = embedding_ratios(m, p, q, mu, s, 20)
    assert np.array_equal(r[:8], embedding_ratios(m, p, q, mu, s, 8))

    # homogeneity: the ratio of 3u equals the ratio of u
    from dpkirchhoff.exponents import DoublePhaseSpace, LebesgueSpace, l1_norm, luxemburg_norm
    from dpkirchhoff.mesh import DiscreteFunction
    from dpkirchhoff.theorem import _sample_values
    u = DiscreteFunction(m, _sample_values(m, 17, 0))
    ratio = lambda w: max(luxemburg_norm(w, LebesgueSpace(s)), l1_norm(w)) / luxemburg_norm(
        w, DoublePhaseSpace(p, q, mu), use_gradient=True)
    assert ratio(u.scaled(3.0)) == pytest.approx(ratio(u), rel=1e-10)


def test_c_H_poincare_oracle():
    m = rect_mesh(4)
    two = ExponentField.constant(2.0)
    r = embedding_ratios(m, two, ExponentField.constant(2.5), ZERO_MU, two, 40,
                         include_l1=False)
    bound = 1 / (math.pi * math.sqrt(2))
    assert r.max() <= bound
    assert r.max() >= 0.99 * bound


def test_coercivity(problem):
    c = sigma_bounds(problem)
    assert coercivity_certificate(problem, 0.0, directions=4)
    assert coercivity_certificate(problem, c.lambda_mid, directions=4)
    big = 1e6 * c.lambda_mid
    assert not coercivity_certificate(problem, big, directions=4)          # grid 2^0..2^8 too short
    assert coercivity_certificate(problem, big, directions=4, max_doublings=128)
