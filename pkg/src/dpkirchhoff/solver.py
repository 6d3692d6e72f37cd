"""Critical points of the discrete ``I_lambda`` by descent, deflation and multistart.

Descent direction: ``d = -A(u)^{-1} g(u)`` where ``g`` is the interior
gradient and ``A(u)`` the secant (frozen-coefficient) stiffness matrix from
:meth:`EnergyFunctional.secant_matrix`.  Since ``K'(u) = A(u) u`` the unit step
is the classical fixed-point update ``A(u) u_new = lambda J'(u)``; backtracking
(halving, sufficient decrease 1e-4) on ``I_lambda`` keeps every accepted step
energy-nonincreasing.  ``metric="identity"`` gives plain gradient descent.

Deflation against known points ``u_k`` uses the factor
``m(u) = prod_k (1 + rho / |u - u_k|_inf^2)``.  Applying Newton's rule to the
deflated residual ``m g`` rescales the undeflated direction by
``tau = 1 / (1 - grad(log m) . d)``; here ``tau`` only sets the first trial
step of the line search, so the energy contract is unaffected.  Returned points
are always judged on the plain residual.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .mesh import DiscreteFunction, zero_boundary

ARMIJO_C = 1e-4
MIN_STEP = 2.0 ** -40
METRIC_FLOOR = 1e-8
STAGNATION_WINDOW = 500  # accepted steps without a 0.1% residual gain before giving up
MAX_TRIAL_STEP = 8.0


class SolverError(RuntimeError):
    pass


@dataclass
class CriticalPoint:
    u: DiscreteFunction
    residual_norm: float
    energy: float
    iterations: int
    classification: str          # "minimizer" | "saddle-candidate" | "trivial" | "unconverged"
    converged: bool
    max_residual: float
    start: str = ""
    status: str = ""
    trace: list = field(default_factory=list, repr=False)

    @property
    def values(self):
        return self.u.values

    def to_dict(self, with_values=True):
        d = {"residual_norm": self.residual_norm, "max_residual": self.max_residual,
             "energy": self.energy, "iterations": self.iterations,
             "classification": self.classification, "converged": self.converged,
             "start": self.start, "status": self.status,
             "sup_norm": float(np.max(np.abs(self.u.values))),
             "trace": [[int(i), float(e), float(r)] for i, e, r in self.trace]}
        if with_values:
            d["values"] = [float(v) for v in self.u.values]
        return d


@dataclass
class SolveOutcome:
    points: list
    pairwise_distances: np.ndarray
    distinct_count: int
    lam: float
    threshold: float
    attempts: list = field(default_factory=list)

    def to_dict(self, with_values=True):
        return {"lambda": self.lam, "distinct_threshold": self.threshold,
                "distinct_count": self.distinct_count,
                "pairwise_sup_distances": [[float(v) for v in row]
                                           for row in self.pairwise_distances],
                "points": [p.to_dict(with_values) for p in self.points],
                "attempts": self.attempts}


def sup_distance(U, V):
    return float(np.max(np.abs(np.asarray(U) - np.asarray(V))))


def residual_tolerance(problem):
    return problem.cfg.solver.tol_scale * np.sqrt(len(problem.mesh.interior))


def _deflation_tau(U, d, known, rho):
    """Step rescaling from Newton's rule on the deflated residual."""
    if not known:
        return 1.0
    glog = np.zeros_like(U)
    for K in known:
        diff = U - K
        j = int(np.argmax(np.abs(diff)))
        dist2 = diff[j] ** 2
        if dist2 == 0.0:
            return 1.0
        # d/du log(1 + rho / |u-u_k|^2) = -rho / (dist2 (dist2 + rho)) * 2 diff_j e_j
        glog[j] += -2.0 * rho * diff[j] / (dist2 * (dist2 + rho))
    denom = 1.0 - float(glog @ d)
    if denom <= 0.0:
        return MAX_TRIAL_STEP
    return float(min(MAX_TRIAL_STEP, max(1.0, 1.0 / denom)))


def descend(u0, lam, problem, known=(), rho=None, tol=None, max_iter=None, metric=None,
            trace_every=None, start="") -> CriticalPoint:
    """Energy-decreasing descent from ``u0`` to a critical point of ``I_lambda``."""
    sc = problem.cfg.solver
    rho = sc.deflation_rho if rho is None else rho
    tol = residual_tolerance(problem) if tol is None else tol
    max_iter = sc.max_iter if max_iter is None else max_iter
    metric = sc.metric if metric is None else metric
    trace_every = sc.trace_every if trace_every is None else trace_every
    if metric not in ("secant", "identity"):
        raise ValueError(f"unknown metric {metric!r}")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    mesh = problem.mesh
    ef = problem.energy
    idx = mesh.interior
    U0 = u0.values if isinstance(u0, DiscreteFunction) else np.asarray(u0, dtype=float)
    U = zero_boundary(mesh, U0)
    known = [np.asarray(k.values if isinstance(k, CriticalPoint) else k, dtype=float)
             for k in known]

    E = ef.energy(U, lam)
    g = ef.gradient(U, lam)[idx]
    res = float(np.linalg.norm(g))
    trace = [(0, E, res)]
    status, it = "converged", 0
    best_res = window_res = res
    while res > tol:
        if not np.isfinite(E) or not np.all(np.isfinite(g)):
            raise SolverError("non-finite energy or gradient; check exponent and weight fields")
        if it >= max_iter:
            status = "iteration cap reached"
            break
        if metric == "secant":
            A = ef.secant_matrix(U, floor=METRIC_FLOOR)
            d_int = -spla.spsolve(A, g)
        else:
            d_int = -g
        slope = float(g @ d_int)
        if not slope < 0:
            d_int, slope = -g, -float(g @ g)
        d = np.zeros_like(U)
        d[idx] = d_int
        t = _deflation_tau(U, d, known, rho)
        accepted = None
        while t >= MIN_STEP:
            # energy_change resolves decreases far below eps * |E|
            dE = ef.energy_change(U, t * d, lam)
            if np.isfinite(dE) and dE <= ARMIJO_C * t * slope:
                accepted = (U + t * d, dE)
                break
            t *= 0.5
        if accepted is None:
            status = "line search stalled"
            break
        U, dE = accepted
        E += dE
        g = ef.gradient(U, lam)[idx]
        res = float(np.linalg.norm(g))
        it += 1
        if it % trace_every == 0:
            trace.append((it, E, res))
        best_res = min(best_res, res)
        if it % STAGNATION_WINDOW == 0:
            if best_res > (1.0 - 1e-3) * window_res:
                status = "stagnated"
                break
            window_res = best_res
    if trace[-1][0] != it:
        trace.append((it, E, res))
    converged = bool(res <= tol)
    E = ef.energy(U, lam)
    u = DiscreteFunction(mesh, U)
    cls = classify(u, lam, problem, converged)
    return CriticalPoint(u=u, residual_norm=res, energy=E, iterations=it, classification=cls,
                         converged=converged, max_residual=float(np.max(np.abs(g), initial=0.0)),
                         start=start, status=status, trace=trace)


def classify(u, lam, problem, converged, threshold=None, eps=1e-4, probes=8, seed=12345):
    """Trivial / minimizer / saddle-candidate from a cheap perturbation probe.

    No second-order information is used, so "minimizer" only means that no
    sampled perturbation of relative size ``eps`` lowered the energy.
    """
    if not converged:
        return "unconverged"
    threshold = problem.cfg.solver.distinct_threshold if threshold is None else threshold
    U = u.values
    sup = float(np.max(np.abs(U)))
    if sup <= threshold:
        return "trivial"
    ef = problem.energy
    E = ef.energy(U, lam)
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        v = zero_boundary(problem.mesh, rng.normal(size=len(U)))
        v *= eps * sup / np.max(np.abs(v))
        for s in (1.0, -1.0):
            if ef.energy(U + s * v, lam) < E - 1e-14 * (1 + abs(E)):
                return "saddle-candidate"
    return "minimizer"


def trivial_point(lam, problem):
    """``u = 0`` as a critical point (valid when ``f(x, 0) = 0``)."""
    return descend(np.zeros(problem.mesh.n_vertices), lam, problem, start="zero")


def start_states(problem, n_starts=None, seed=None):
    """Labelled initial states: scaled cutoffs ``+-c u_bar`` then seeded bumps."""
    from .theorem import build_cutoff
    sc = problem.cfg.solver
    n_starts = sc.starts if n_starts is None else n_starts
    seed = sc.seed if seed is None else seed
    mesh = problem.mesh
    R, x0 = problem.ball
    ub = build_cutoff(mesh, R, x0, problem.cfg.theorem.delta).values
    out = []
    for c in (0.25, 0.5, 1.0, 2.0):
        out.append((f"+{c}*ubar", c * ub))
        out.append((f"-{c}*ubar", -c * ub))
    rng = np.random.default_rng(seed)
    x0b, x1b, y0b, y1b = mesh.bounding_box()
    X, Y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    k = 0
    while len(out) < n_starts:
        c = (rng.uniform(x0b, x1b), rng.uniform(y0b, y1b))
        w = rng.uniform(0.1, 0.4) * min(x1b - x0b, y1b - y0b)
        amp = rng.normal() * problem.cfg.theorem.delta * 2
        bump = amp * np.exp(-((X - c[0]) ** 2 + (Y - c[1]) ** 2) / w ** 2)
        out.append((f"bump{k}", zero_boundary(mesh, bump)))
        k += 1
    return out[:n_starts]


def _is_new(U, known, threshold):
    return all(sup_distance(U, K) > threshold for K in known)


def deflated_search(lam, problem, known, threshold=None, starts=None):
    """One deflation round over all starts.

    Returns the list of new validated points (possibly empty) and a record of
    every attempt.  Each start sees only ``known``; duplicates among the new
    finds are merged in start order.
    """
    sc = problem.cfg.solver
    threshold = sc.distinct_threshold if threshold is None else threshold
    starts = start_states(problem) if starts is None else starts
    known_vals = [k.values if isinstance(k, CriticalPoint) else np.asarray(k) for k in known]
    tol = residual_tolerance(problem)
    found, attempts = [], []
    for label, U0 in starts:
        cp = descend(U0, lam, problem, known=known_vals, start=label)
        ok_res = cp.residual_norm <= tol
        new = _is_new(cp.values, known_vals + [f.values for f in found], threshold)
        attempts.append({"start": label, "iterations": cp.iterations, "status": cp.status,
                         "residual_norm": cp.residual_norm, "energy": cp.energy,
                         "accepted": bool(ok_res and new)})
        if ok_res and new:
            found.append(cp)
    return found, attempts


def pairwise_sup(points):
    n = len(points)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = sup_distance(points[i].values, points[j].values)
    return D


def count_distinct(D, threshold):
    """Greedy count of points at sup distance > threshold from all earlier kept ones."""
    kept = []
    for i in range(len(D)):
        if all(D[i, j] > threshold for j in kept):
            kept.append(i)
    return len(kept)


def three_solutions_experiment(problem, lam=None, cert=None, rounds=None, threshold=None):
    """Collect ``u = 0`` (if critical) plus all deflated finds within the budget."""
    sc = problem.cfg.solver
    threshold = sc.distinct_threshold if threshold is None else threshold
    rounds = sc.rounds if rounds is None else rounds
    if lam is None:
        if cert is None:
            from .theorem import sigma_bounds
            cert = sigma_bounds(problem)
        lam = resolve_lambda(problem.cfg.lam, cert)
    points, attempts = [], []
    zero = trivial_point(lam, problem)
    if zero.converged:
        points.append(zero)
    starts = start_states(problem)
    for rnd in range(rounds):
        found, att = deflated_search(lam, problem, points, threshold, starts)
        for a in att:
            a["round"] = rnd
        attempts.extend(att)
        if not found:
            break
        points.extend(found)
    D = pairwise_sup(points)
    return SolveOutcome(points=points, pairwise_distances=D,
                        distinct_count=count_distinct(D, threshold), lam=float(lam),
                        threshold=threshold, attempts=attempts)


def resolve_lambda(rule, cert):
    """``"mid"`` -> midpoint of the certified interval; numbers pass through."""
    if isinstance(rule, str):
        if rule == "mid":
            return cert.lambda_mid
        try:
            return float(rule)
        except ValueError:
            raise ValueError(f"lambda rule must be 'mid' or a number, got {rule!r}") from None
    return float(rule)


def monotonicity_probe(problem, U, V):
    """``<K'(u) - K'(v), u - v>`` on the discrete space."""
    ef = problem.energy
    U, V = np.asarray(U, float), np.asarray(V, float)
    return float((ef.K_gradient(U) - ef.K_gradient(V)) @ (U - V))


def energy_trace_csv(points):
    """CSV text with columns start, iteration, energy, residual."""
    lines = ["start,iteration,energy,residual"]
    for p in points:
        for it, E, r in p.trace:
            lines.append(f"{p.start},{it},{E!r},{r!r}")
    return "\n".join(lines) + "\n"
