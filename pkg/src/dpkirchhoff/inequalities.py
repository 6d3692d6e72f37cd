"""Numerical audits of the inequalities the existence argument relies on.

The centrepiece is the vector-ratio bound

    |a |x|^(p-2) x - b |y|^(p-2) y| / ||x|^(p-2) x - |y|^(p-2) y|
        <= (a + |a-b|) + |a-b| / ||x|^(p-2) x - |y|^(p-2) y|.

The audit also evaluates two reference bounds that follow from the triangle
inequality alone, ``a + |a-b| |Y| / |X-Y|`` with ``X = |x|^(p-2) x`` and
``Y = |y|^(p-2) y``, and records which cases sit in the regime ``|X| <= 1``.
These make any failure of the bound above easy to classify.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .exponents import (DoublePhaseSpace, LebesgueSpace, luxemburg_norm,
                        luxemburg_samples, modular, modular_H, modular_samples)
from .mesh import DiscreteFunction

DEGENERATE_DENOM = 1e-14
SMALL_NORM = 1e-6
REL_TOL = 1e-12


def _phi(x, p):
    """``|x|^(p-2) x`` row-wise, with the value 0 at x = 0."""
    x = np.asarray(x, dtype=float)
    n = np.linalg.norm(x, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(n > 0, n ** (np.asarray(p)[..., None] - 2.0) * x, 0.0)
    return out


class DegenerateCase(ValueError):
    pass


@dataclass
class LambdaRatioCase:
    x: np.ndarray
    y: np.ndarray
    a: float
    b: float
    p: float
    lhs: float
    rhs: float
    denom: float

    @property
    def holds(self):
        return self.lhs <= self.rhs + REL_TOL * (1 + abs(self.rhs))


def lambda_ratio(x, y, a, b, p):
    """Evaluate both sides of the vector-ratio bound for one case."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if p < 1:
        raise ValueError("p must be >= 1")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    X, Y = _phi(x, p), _phi(y, p)
    denom = float(np.linalg.norm(X - Y))
    if denom < DEGENERATE_DENOM:
        raise DegenerateCase(f"||x|^(p-2)x - |y|^(p-2)y| = {denom:.3e}")
    lhs = float(np.linalg.norm(a * X - b * Y)) / denom
    rhs = (a + abs(a - b)) + abs(a - b) / denom
    return LambdaRatioCase(x, y, float(a), float(b), float(p), lhs, rhs, denom)


def lambda_value(x, y, a, b, p):
    return lambda_ratio(x, y, a, b, p).lhs


def orthogonal_invariance_check(x, y, a, b, p, T, tol=1e-9):
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or \
            np.abs(T.T @ T - np.eye(len(T))).max() > 1e-12:
        raise ValueError("T is not orthogonal")
    base = lambda_value(x, y, a, b, p)
    moved = lambda_value(T @ np.asarray(x, float), T @ np.asarray(y, float), a, b, p)
    return abs(moved - base) <= tol * (1 + base)


def homogeneity_check(x, y, a, b, p, c, tol=1e-10):
    """Degree-0 homogeneity of the ratio under ``(x, y) -> (c x, c y)``."""
    base = lambda_value(x, y, a, b, p)
    scaled = lambda_value(c * np.asarray(x, float), c * np.asarray(y, float), a, b, p)
    return abs(scaled - base) <= tol * (1 + base)


def reduction_check(y, a, b, p):
    """The bound with ``x = e_1``, where ``|x|^(p-2) x = e_1`` has unit length."""
    y = np.asarray(y, dtype=float)
    e1 = np.zeros_like(y)
    e1[0] = 1.0
    case = lambda_ratio(e1, y, a, b, p)
    return case.holds


def monotone_pairing(xi, eta, h):
    """``(|xi|^(h-2) xi - |eta|^(h-2) eta) . (xi - eta)``, row-wise."""
    xi = np.asarray(xi, float)
    eta = np.asarray(eta, float)
    return np.sum((_phi(xi, h) - _phi(eta, h)) * (xi - eta), axis=-1)


@dataclass
class AuditReport:
    cases: int
    failures: int
    degenerate_skipped: int
    max_lhs_over_rhs: float
    seed: int
    dims: tuple
    p_range: tuple
    ab_max: float
    magnitude_range: tuple
    failures_with_unit_X: int
    triangle_bound_failures: int
    worst_case: dict | None = None
    failure_examples: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["dims"] = list(self.dims)
        d["p_range"] = list(self.p_range)
        d["magnitude_range"] = list(self.magnitude_range)
        return d


def _draw(rng, n, dim, p_range, ab_max, mag_range):
    p = rng.uniform(*p_range, size=n)
    a = ab_max * (1.0 - rng.random(n))          # (0, ab_max]
    b = ab_max * (1.0 - rng.random(n))
    lo, hi = np.log10(mag_range[0]), np.log10(mag_range[1])
    x = rng.normal(size=(n, dim))
    y = rng.normal(size=(n, dim))
    x *= (10 ** rng.uniform(lo, hi, n) / np.linalg.norm(x, axis=1))[:, None]
    y *= (10 ** rng.uniform(lo, hi, n) / np.linalg.norm(y, axis=1))[:, None]
    return x, y, a, b, p


def audit_vector_inequality(n_cases=100_000, seed=0, dims=(2, 5), p_range=(1.0, 4.0),
                            ab_max=10.0, magnitude_range=(1e-2, 1e2), keep_examples=10):
    """Random audit of the vector-ratio bound.

    Directions are Gaussian and lengths log-uniform on ``magnitude_range``;
    the dimension alternates over ``dims``.  Cases with denominator below
    1e-14, or with ``|x|`` or ``|y|`` below 1e-6 when ``p < 2``, are skipped
    and counted.  Evaluation is vectorised; the result depends only on the
    arguments.
    """
    rng = np.random.default_rng(seed)
    per_dim = [n_cases // len(dims) + (i < n_cases % len(dims)) for i in range(len(dims))]
    failures = degenerate = unit_fail = tri_fail = total = 0
    worst_ratio, worst, examples = -np.inf, None, []
    for dim, need in zip(dims, per_dim):
        while need > 0:
            x, y, a, b, p = _draw(rng, need, dim, p_range, ab_max, magnitude_range)
            nx, ny = np.linalg.norm(x, axis=1), np.linalg.norm(y, axis=1)
            X, Y = _phi(x, p), _phi(y, p)
            denom = np.linalg.norm(X - Y, axis=1)
            bad = (denom < DEGENERATE_DENOM) | ((p < 2) & ((nx < SMALL_NORM) | (ny < SMALL_NORM)))
            degenerate += int(bad.sum())
            ok = ~bad
            x, y, a, b, p, X, Y, denom = (v[ok] for v in (x, y, a, b, p, X, Y, denom))
            lhs = np.linalg.norm(a[:, None] * X - b[:, None] * Y, axis=1) / denom
            dab = np.abs(a - b)
            rhs = (a + dab) + dab / denom
            tri = a + dab * np.linalg.norm(Y, axis=1) / denom
            fail = lhs > rhs + REL_TOL * (1 + np.abs(rhs))
            unit = np.linalg.norm(X, axis=1) <= 1.0
            failures += int(fail.sum())
            unit_fail += int((fail & unit).sum())
            tri_fail += int((lhs > tri + REL_TOL * (1 + tri)).sum())
            ratio = lhs / rhs
            k = int(np.argmax(ratio))
            if ratio[k] > worst_ratio:
                worst_ratio = float(ratio[k])
                worst = _case_dict(x[k], y[k], a[k], b[k], p[k], lhs[k], rhs[k], denom[k])
            for k in np.flatnonzero(fail)[:max(0, keep_examples - len(examples))]:
                examples.append(_case_dict(x[k], y[k], a[k], b[k], p[k], lhs[k], rhs[k], denom[k]))
            total += int(ok.sum())
            need -= int(ok.sum())
    return AuditReport(cases=total, failures=failures, degenerate_skipped=degenerate,
                       max_lhs_over_rhs=worst_ratio, seed=seed, dims=tuple(dims),
                       p_range=tuple(p_range), ab_max=ab_max,
                       magnitude_range=tuple(magnitude_range), failures_with_unit_X=unit_fail,
                       triangle_bound_failures=tri_fail, worst_case=worst,
                       failure_examples=examples)


def _case_dict(x, y, a, b, p, lhs, rhs, denom):
    return {"x": [float(v) for v in x], "y": [float(v) for v in y], "a": float(a),
            "b": float(b), "p": float(p), "lhs": float(lhs), "rhs": float(rhs),
            "denom": float(denom)}


def audit_orthogonal_invariance(n_cases=2000, seed=1, dims=(2, 5), tol=1e-9):
    """Fraction-free count of invariance failures under random orthogonal maps."""
    rng = np.random.default_rng(seed)
    failures = 0
    for i in range(n_cases):
        dim = dims[i % len(dims)]
        Q, R = np.linalg.qr(rng.normal(size=(dim, dim)))
        Q = Q * np.sign(np.diag(R))
        if rng.random() < 0.5:
            Q[:, 0] *= -1.0   # include reflections
        x, y = rng.normal(size=dim), rng.normal(size=dim)
        a, b, p = rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(1, 4)
        try:
            if not orthogonal_invariance_check(x, y, a, b, p, Q, tol):
                failures += 1
        except DegenerateCase:
            continue
    return failures


def audit_homogeneity(n_cases=2000, seed=2, dims=(2, 5), tol=1e-10):
    rng = np.random.default_rng(seed)
    failures = 0
    for i in range(n_cases):
        dim = dims[i % len(dims)]
        x, y = rng.normal(size=dim), rng.normal(size=dim)
        a, b, p = rng.uniform(0.1, 10), rng.uniform(0.1, 10), rng.uniform(1, 4)
        c = 10 ** rng.uniform(-2, 2)
        try:
            if not homogeneity_check(x, y, a, b, p, c, tol):
                failures += 1
        except DegenerateCase:
            continue
    return failures


def audit_monotone_pairing(n_cases=10_000, seed=3, exponents=(1.2, 1.5, 2.0, 3.0)):
    """Count of pairs in R^2 where the monotone pairing is not strictly positive."""
    rng = np.random.default_rng(seed)
    h = np.asarray(exponents)[np.arange(n_cases) % len(exponents)]
    xi = rng.normal(size=(n_cases, 2))
    eta = rng.normal(size=(n_cases, 2))
    return int(np.sum(~(monotone_pairing(xi, eta, h) > 0)))


# --- pointwise Young-type bound on the double-phase flux -------------------------------

def young_constant(q_min, q_max):
    return (2 ** q_max * (q_max - 1) + 1) / (2 * q_min)


def young_bound_check(u: DiscreteFunction, v: DiscreteFunction, p, q, mu,
                      shifts=(0.0,), tol=1e-10):
    """Pointwise check of ``|Theta(u + s v)| <= c_hat (...)`` at every quadrature point.

    ``Theta(w) = (|grad w|^(p-2) grad w + mu |grad w|^(q-2) grad w) . grad v``
    and the right-hand side uses ``|grad u|``, ``|grad v|``, ``|mu|_inf^(q+)``
    and ``c_hat = (2^(q+) (q+ - 1) + 1) / (2 q-)``.  By default ``Theta`` is
    evaluated at ``u`` itself; pass ``shifts`` to test ``u + s v`` as well.
    With ``s = 1`` and aligned gradients the constant can be too small by a
    few percent.
    """
    m = u.mesh
    pts = m.qpoints
    pp, qq, mm = p(pts), q(pts), mu(pts)
    Gu, Gv = u.gradient(), v.gradient()
    A = np.linalg.norm(Gu, axis=1)[:, None]
    B = np.linalg.norm(Gv, axis=1)[:, None]
    chat = young_constant(q.min_value, q.max_value)
    bound = chat * (A ** pp + B ** pp + mu.sup_norm ** q.max_value * A ** qq + B ** qq)
    for s in shifts:
        Gw = Gu + s * Gv
        W = np.linalg.norm(Gw, axis=1)[:, None]
        dot = np.sum(Gw * Gv, axis=1)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(W > 0, W ** (pp - 2) + mm * W ** (qq - 2), 0.0)
        if np.any(np.abs(coef * dot) > bound * (1 + tol)):
            return False
    return True


def midpoint_convexity_gap(fun, U, V, eps=0.5):
    """``fun((1-eps) U + eps V) - ((1-eps) fun(U) + eps fun(V))``; <= 0 for convex fun."""
    return fun((1 - eps) * U + eps * V) - ((1 - eps) * fun(U) + eps * fun(V))


# --- norm / modular relations over the exponent core ------------------------------------

def norm_modular_relations(u: DiscreteFunction, p, q, mu, h, rtol=1e-8):
    """Evaluate the unit-ball and power-sandwich relations for one function.

    Returns a dict of named booleans plus the underlying numbers.  The
    double-phase relations are checked for ``u`` itself and for ``|grad u|``
    (with the ``1/p``, ``1/q`` weighted energy for the latter).
    """
    from .energy import EnergyFunctional, KirchhoffModel

    out = {}
    # variable Lebesgue space
    nh = luxemburg_norm(u, LebesgueSpace(h))
    rh = modular(u, h)
    out["Lh_norm"], out["Lh_modular"] = nh, rh
    out["Lh_unit_ball"] = _unit_ball(nh, rh)
    out["Lh_sandwich"] = _sandwich(nh, rh, h.min_value, h.max_value, rtol)
    # double phase, values
    sp = DoublePhaseSpace(p, q, mu)
    nH = luxemburg_norm(u, sp)
    rH = modular_H(u, p, q, mu)
    out["LH_norm"], out["LH_modular"] = nH, rH
    out["LH_unit_ball"] = _unit_ball(nH, rH)
    out["LH_sandwich"] = _sandwich(nH, rH, p.min_value, q.max_value, rtol)
    out["LH_postcondition"] = _post(u, sp, nH, False)
    # double phase, gradients
    nG = luxemburg_norm(u, sp, use_gradient=True)
    rG = modular_H(u, p, q, mu, use_gradient=True)
    vr = EnergyFunctional(u.mesh, p, q, mu, KirchhoffModel.constant()).varrho(u.values)
    out["grad_norm"], out["grad_modular"], out["varrho"] = nG, rG, vr
    out["grad_sandwich"] = _sandwich(nG, rG, p.min_value, q.max_value, rtol)
    out["grad_postcondition"] = _post(u, sp, nG, True)
    pm, qp = p.min_value, q.max_value
    if nG > 1:
        lo, hi = nG ** pm / qp, nG ** qp / pm
    else:
        lo, hi = nG ** qp / qp, nG ** pm / pm
    out["varrho_sandwich"] = lo * (1 - rtol) <= vr <= hi * (1 + rtol)
    return out


def _unit_ball(norm, mod, gap=1e-8):
    if abs(mod - 1.0) <= gap:
        return True
    return np.sign(norm - 1.0) == np.sign(mod - 1.0)


def _sandwich(norm, mod, e_small, e_large, rtol):
    if norm == 0:
        return mod == 0
    if norm > 1:
        lo, hi = norm ** e_small, norm ** e_large
    else:
        lo, hi = norm ** e_large, norm ** e_small
    return lo * (1 - rtol) <= mod <= hi * (1 + rtol)


def _post(u, space, zeta, use_gradient):
    from .exponents import samples
    if zeta == 0:
        return True
    vals, w = samples(u, use_gradient)
    pts = u.mesh.qpoints
    r = np.sum(w * ((vals / zeta) ** space.p(pts) + space.mu(pts) * (vals / zeta) ** space.q(pts)))
    return abs(r - 1.0) <= 1e-10


def nested_exponent_gap(u: DiscreteFunction, h_const, h2):
    """Relative gap in ``| |u|^h |_{h2} = |u|_{h h2}^h`` for constant ``h``."""
    vals = np.abs(u.at_quadrature())
    w = u.mesh.qweights
    e2 = h2(u.mesh.qpoints)
    left = luxemburg_samples(vals ** h_const, e2, w)
    right = luxemburg_samples(vals, h_const * e2, w) ** h_const
    return abs(left - right) / max(abs(right), 1e-300)


def run_lab(n_cases=100_000, seed=0, **kw):
    """Full inequality audit as a JSON-ready dict."""
    rep = audit_vector_inequality(n_cases=n_cases, seed=seed, **kw).to_dict()
    rep["orthogonal_invariance_failures"] = audit_orthogonal_invariance(seed=seed + 1)
    rep["homogeneity_failures"] = audit_homogeneity(seed=seed + 2)
    rep["monotone_pairing_failures"] = audit_monotone_pairing(seed=seed + 3)
    return rep


__all__ = [
    "LambdaRatioCase", "DegenerateCase", "AuditReport", "lambda_ratio", "lambda_value",
    "orthogonal_invariance_check", "homogeneity_check", "reduction_check", "monotone_pairing",
    "audit_vector_inequality", "audit_orthogonal_invariance", "audit_homogeneity",
    "audit_monotone_pairing", "young_constant", "young_bound_check", "midpoint_convexity_gap",
    "norm_modular_relations", "nested_exponent_gap", "run_lab", "modular_samples",
]
