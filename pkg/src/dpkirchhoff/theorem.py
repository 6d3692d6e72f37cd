"""Explicit objects behind the three-solutions result.

This module builds the radial cutoff test function, evaluates the two-sided
bound on ``K`` at that function, computes ``sigma_r`` and ``sigma^r`` and the
admissible lambda interval, estimates the embedding constant ``c_H`` by
sampling, and probes coercivity of ``I_lambda`` along rays.

Exponents written with a wedge or vee (``a ^ b`` / ``a v b``) switch branch
at base 1; see :func:`dpkirchhoff.exponents.bracket_exponent`.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .exponents import (DoublePhaseSpace, ExponentField, LebesgueSpace, bracket_exponent,
                        l1_norm, luxemburg_norm)
from .mesh import DiscreteFunction, Mesh, MeshError, zero_boundary

N_DIM = 2
BALL_TOL = 1e-12


def omega_ball(N: int) -> float:
    """Volume of the unit ball in R^N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return math.pi ** (N / 2) / ((N / 2) * math.gamma(N / 2))


# --- cutoff -------------------------------------------------------------------------------

@dataclass
class CutoffFunction:
    u: DiscreteFunction
    R: float
    x0: tuple
    delta: float

    @property
    def values(self):
        return self.u.values

    @property
    def mesh(self):
        return self.u.mesh

    def annulus_elements(self):
        """Triangles whose three vertices lie in ``R/2 <= |x - x0| <= R``."""
        d = np.linalg.norm(self.mesh.vertices - np.asarray(self.x0), axis=1)
        dt = d[self.mesh.triangles]
        return np.flatnonzero(np.all((dt >= self.R / 2) & (dt <= self.R), axis=1))


def cutoff_profile(d, R, delta):
    d = np.asarray(d, dtype=float)
    return np.where(d <= R / 2, delta, np.where(d < R, (2 * delta / R) * (R - d), 0.0))


def build_cutoff(mesh: Mesh, R, x0, delta) -> CutoffFunction:
    """Nodal interpolant of the plateau/cone/zero cutoff centred at ``x0``."""
    if R <= 0 or delta <= 0:
        raise ValueError("R and delta must be positive")
    x0 = tuple(float(v) for v in x0)
    xmin, xmax, ymin, ymax = mesh.bounding_box()
    if (x0[0] - R < xmin - BALL_TOL or x0[0] + R > xmax + BALL_TOL
            or x0[1] - R < ymin - BALL_TOL or x0[1] + R > ymax + BALL_TOL):
        raise MeshError(f"ball B({x0}, {R}) is not contained in the domain")
    if mesh.rect is None and not math.isclose(mesh.total_area, (xmax - xmin) * (ymax - ymin),
                                              rel_tol=1e-12):
        raise MeshError("ball containment can only be checked on rectangular meshes")
    d = np.linalg.norm(mesh.vertices - np.asarray(x0), axis=1)
    vals = zero_boundary(mesh, cutoff_profile(d, R, delta))
    return CutoffFunction(DiscreteFunction(mesh, vals), float(R), x0, float(delta))


# --- the K(u_bar) sandwich ------------------------------------------------------------------

def sandwich_lower(model, p_minus, p_plus, q_plus, R, delta, N=N_DIM):
    """Lower bound for ``K(u_bar)``; also the cap on ``r_param``."""
    a1, k1 = model.alpha1, model.kappa1
    t = 2 * delta / R
    e = bracket_exponent(t, p_minus, p_plus, "wedge")
    w = omega_ball(N)
    return (k1 / (a1 * q_plus ** a1) * w ** a1 * R ** (N * a1) * (2 ** N - 1) ** a1
            * 2.0 ** (-N * a1) * t ** (a1 * e))


def sandwich_upper(model, p_minus, q_plus, mu_sup, R, delta, N=N_DIM):
    a2, k2 = model.alpha2, model.kappa2
    t = 2 * delta / R
    e = bracket_exponent(t, p_minus, q_plus, "vee")
    w = omega_ball(N)
    return (k2 * (1 + mu_sup) ** a2 / (a2 * p_minus ** a2) * w ** a2
            * (R ** N - (R / 2) ** N) ** a2 * t ** (a2 * e))


@dataclass
class Sandwich:
    lower: float
    K_value: float
    upper: float

    @property
    def holds(self):
        return self.lower <= self.K_value <= self.upper

    def __iter__(self):
        return iter((self.lower, self.K_value, self.upper))


def K_ubar_sandwich(cutoff: CutoffFunction, model, p, q, mu) -> Sandwich:
    from .energy import EnergyFunctional
    ef = EnergyFunctional(cutoff.mesh, p, q, mu, model)
    K = ef.K(cutoff.values)
    lo = sandwich_lower(model, p.min_value, p.max_value, q.max_value, cutoff.R, cutoff.delta)
    hi = sandwich_upper(model, p.min_value, q.max_value, mu.sup_norm, cutoff.R, cutoff.delta)
    return Sandwich(lo, K, hi)


def sandwich_study(problem, levels=(2, 3, 4, 5), delta=None):
    """The sandwich on successively finer meshes.

    Returns rows ``{"level", "h", "lower", "K", "upper", "slack"}`` where
    ``slack`` is the relative amount by which ``K`` leaves ``[lower, upper]``
    (0 when inside).
    """
    from .mesh import rect_mesh
    cfg = problem.cfg
    delta = cfg.theorem.delta if delta is None else delta
    rows = []
    for lev in levels:
        mesh = rect_mesh(lev, cfg.domain.width, cfg.domain.height)
        R, x0 = problem.with_mesh(mesh).ball
        cut = build_cutoff(mesh, R, x0, delta)
        s = K_ubar_sandwich(cut, problem.model, problem.p, problem.q, problem.mu)
        slack = max(0.0, (s.lower - s.K_value) / s.lower, (s.K_value - s.upper) / s.upper)
        rows.append({"level": lev, "h": mesh.h, "lower": s.lower, "K": s.K_value,
                     "upper": s.upper, "slack": slack})
    return rows


# --- sigma bounds ---------------------------------------------------------------------------

def sigma_lower_terms(c1bar, c2bar, c_H, q_plus, p_minus, alpha1, kappa1, s_minus, s_plus,
                      r_param):
    """The two addends of ``sigma_r`` (brackets resolved at base ``r_param``)."""
    e = bracket_exponent(r_param, p_minus, q_plus, "wedge")
    es = bracket_exponent(r_param, s_minus, s_plus, "wedge")
    g = alpha1 / kappa1
    t1 = c1bar * c_H * q_plus ** (1 / p_minus) * g ** (1 / (alpha1 * e)) \
        * r_param ** (1 / (alpha1 * e))
    t2 = c2bar * c_H ** s_plus * q_plus ** (s_plus / p_minus) * g ** (es / (alpha1 * e)) \
        * r_param ** (es / (alpha1 * e))
    return t1, t2


def sigma_upper_value(inf_F, model, p_minus, q_plus, mu_sup, R, delta, N=N_DIM):
    a2, k2 = model.alpha2, model.kappa2
    t = 2 * delta / R
    e = bracket_exponent(t, p_minus, q_plus, "vee")
    w = omega_ball(N)
    num = 2.0 ** (N * (a2 - 1)) * a2 * p_minus ** a2 * inf_F
    den = (k2 * (1 + mu_sup) ** a2 * w ** (a2 - 1) * (2 ** N - 1) ** a2
           * R ** (N * (a2 - 1)) * t ** (a2 * e))
    return num / den


def inf_F_at(problem, delta, n_grid=64):
    """``inf_x F(x, delta)`` over a grid of the domain and the mesh quadrature points."""
    x0, x1, y0, y1 = problem.domain
    X, Y = np.meshgrid(np.linspace(x0, x1, n_grid), np.linspace(y0, y1, n_grid))
    pts = np.concatenate([np.stack([X.ravel(), Y.ravel()], -1),
                          problem.mesh.qpoints.reshape(-1, 2)])
    return float(np.min(problem.nl.F(pts, np.full(len(pts), float(delta)))))


@dataclass
class TheoremCertificate:
    R: float
    x0: tuple
    delta: float
    r_param: float
    N: int
    omega_N: float
    sigma_lower: float
    sigma_upper: float
    lambda_interval: tuple | None
    r_cap: float
    c_H: float
    hypothesis_f4_holds: bool
    c_H_raw: float
    c_H_safety: float
    sigma_lower_raw: float
    sigma_lower_terms: tuple
    inf_F: float
    p_minus: float
    p_plus: float
    q_plus: float
    s_minus: float
    s_plus: float
    mu_sup: float
    kappa1: float
    alpha1: float
    kappa2: float
    alpha2: float
    c1bar: float
    c2bar: float
    K_ubar: float | None = None
    J_ubar: float | None = None

    @property
    def interval_nonempty(self):
        return self.lambda_interval is not None

    @property
    def lambda_mid(self):
        if self.lambda_interval is None:
            raise ValueError("lambda interval is empty")
        lo, hi = self.lambda_interval
        return 0.5 * (lo + hi)

    def to_dict(self):
        d = asdict(self)
        d["x0"] = list(self.x0)
        d["lambda_interval"] = None if self.lambda_interval is None else list(self.lambda_interval)
        d["sigma_lower_terms"] = list(self.sigma_lower_terms)
        d["lambda_mid"] = None if self.lambda_interval is None else self.lambda_mid
        return d


def sigma_bounds(problem, r_param=None, delta=None, c_H=None) -> TheoremCertificate:
    """Certificate for one ``(r_param, delta)``; ``c_H`` is estimated when omitted."""
    th = problem.cfg.theorem
    r_param = th.r_param if r_param is None else float(r_param)
    delta = th.delta if delta is None else float(delta)
    if r_param <= 0 or delta <= 0:
        raise ValueError("r_param and delta must be positive")
    R, x0 = problem.ball
    p, q, mu, model, nl = problem.p, problem.q, problem.mu, problem.model, problem.nl
    if c_H is None:
        c_H_raw = estimate_c_H(problem, nl.s, th.c_H_trials, seed=th.c_H_seed)
    else:
        c_H_raw = float(c_H)
    safety = float(th.c_H_safety)
    c_H_used = c_H_raw * safety
    args = (nl.c1bar, nl.c2bar)
    rest = (q.max_value, p.min_value, model.alpha1, model.kappa1, nl.s.min_value,
            nl.s.max_value, r_param)
    terms = sigma_lower_terms(*args, c_H_used, *rest)
    s_lo = sum(terms)
    s_lo_raw = sum(sigma_lower_terms(*args, c_H_raw, *rest))
    infF = inf_F_at(problem, delta)
    s_hi = sigma_upper_value(infF, model, p.min_value, q.max_value, mu.sup_norm, R, delta)
    r_cap = sandwich_lower(model, p.min_value, p.max_value, q.max_value, R, delta)
    holds = bool(s_lo < s_hi and r_param < r_cap)
    interval = (1.0 / s_hi, 1.0 / s_lo) if holds else None
    cut = build_cutoff(problem.mesh, R, x0, delta)
    from .energy import EnergyFunctional
    ef = EnergyFunctional(problem.mesh, p, q, mu, model, nl)
    return TheoremCertificate(
        R=R, x0=tuple(x0), delta=delta, r_param=r_param, N=N_DIM, omega_N=omega_ball(N_DIM),
        sigma_lower=s_lo, sigma_upper=s_hi, lambda_interval=interval, r_cap=r_cap,
        c_H=c_H_used, hypothesis_f4_holds=holds, c_H_raw=c_H_raw, c_H_safety=safety,
        sigma_lower_raw=s_lo_raw, sigma_lower_terms=tuple(terms), inf_F=infF,
        p_minus=p.min_value, p_plus=p.max_value, q_plus=q.max_value,
        s_minus=nl.s.min_value, s_plus=nl.s.max_value, mu_sup=mu.sup_norm,
        kappa1=model.kappa1, alpha1=model.alpha1, kappa2=model.kappa2, alpha2=model.alpha2,
        c1bar=nl.c1bar, c2bar=nl.c2bar, K_ubar=ef.K(cut.values), J_ubar=ef.J(cut.values))


# --- embedding constant ----------------------------------------------------------------------

def _sample_values(mesh: Mesh, i, seed, n_modes=4):
    """The i-th test state: sine modes first, then seeded random states."""
    x0, x1, y0, y1 = mesh.bounding_box()
    X = (mesh.vertices[:, 0] - x0) / (x1 - x0)
    Y = (mesh.vertices[:, 1] - y0) / (y1 - y0)
    if i < n_modes * n_modes:
        k, l = divmod(i, n_modes)
        vals = np.sin((k + 1) * np.pi * X) * np.sin((l + 1) * np.pi * Y)
    else:
        rng = np.random.default_rng([seed, i])
        if i % 2 == 0:
            vals = rng.normal(size=mesh.n_vertices)
        else:
            vals = np.zeros(mesh.n_vertices)
            for _ in range(int(rng.integers(1, 4))):
                c = rng.uniform(0.1, 0.9, 2)
                w = rng.uniform(0.05, 0.4)
                vals += rng.normal() * np.exp(-((X - c[0]) ** 2 + (Y - c[1]) ** 2) / w ** 2)
    return zero_boundary(mesh, vals)


def embedding_ratios(mesh, p, q, mu, target: ExponentField | None, trials, seed=0,
                     include_l1=True):
    """``max(|u|_target, |u|_1) / ||grad u||_H`` for the first ``trials`` test states."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    space = DoublePhaseSpace(p, q, mu)
    out = []
    for i in range(trials):
        vals = _sample_values(mesh, i, seed)
        if not np.any(vals):
            continue
        u = DiscreteFunction(mesh, vals)
        num = luxemburg_norm(u, LebesgueSpace(target)) if target is not None else 0.0
        if include_l1:
            num = max(num, l1_norm(u))
        out.append(num / luxemburg_norm(u, space, use_gradient=True))
    return np.array(out)


def estimate_c_H(problem, target_exponent=None, trials=64, seed=0, include_l1=True):
    """Sampled lower estimate of the embedding constant (no safety factor applied)."""
    target = problem.nl.s if target_exponent is None else target_exponent
    r = embedding_ratios(problem.mesh, problem.p, problem.q, problem.mu, target, trials,
                         seed, include_l1)
    return float(r.max())


# --- coercivity -------------------------------------------------------------------------------

def random_unit_directions(problem, n, seed=0):
    """Random interior states normalised to ``||grad v||_H = 1``."""
    mesh = problem.mesh
    space = DoublePhaseSpace(problem.p, problem.q, problem.mu)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        v = zero_boundary(mesh, rng.normal(size=mesh.n_vertices))
        out.append(v / luxemburg_norm(DiscreteFunction(mesh, v), space, use_gradient=True))
    return out


def ray_profile(problem, lam, v, max_doublings=8):
    """``I_lambda(t v)`` for ``t = 2^0, ..., 2^max_doublings``."""
    ef = problem.energy
    ts = 2.0 ** np.arange(max_doublings + 1)
    return ts, np.array([ef.K(t * v) - lam * ef.J(t * v) if lam else ef.K(t * v) for t in ts])


def eventually_increasing(values, base, min_tail=3, margin=1.0):
    """Strictly increasing over at least ``min_tail`` final steps and ending above ``base + margin``."""
    v = np.asarray(values)
    if len(v) < min_tail + 1 or not np.all(np.isfinite(v)):
        return False
    inc = np.diff(v) > 0
    tail = 0
    for ok in inc[::-1]:
        if not ok:
            break
        tail += 1
    return tail >= min_tail and v[-1] > base + margin


def coercivity_certificate(problem, lam, directions=16, max_doublings=8, seed=0):
    """True iff every random ray shows eventually increasing ``I_lambda``."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    base = 0.0  # I_lambda(0) = K(0) - lambda J(0) = 0
    for v in random_unit_directions(problem, directions, seed):
        _, vals = ray_profile(problem, lam, v, max_doublings)
        if not eventually_increasing(vals, base):
            return False
    return True
