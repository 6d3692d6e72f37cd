"""Kirchhoff model, nonlinearity and the discrete energy ``I = K - lambda * J``.

``K(u) = M_hat(varrho(u))`` with the double-phase gradient energy

    varrho(u) = int |grad u|^p / p + mu |grad u|^q / q,

and ``J(u) = int F(x, u)``.  Gradients are the exact derivatives of the
discrete (quadrature) functionals with respect to the nodal values, so a
finite-difference check can be held to tight tolerances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad

from .exponents import ExponentField, WeightField
from .mesh import QUAD_BARY, DiscreteFunction, Mesh, gradient_of


class AssumptionError(ValueError):
    """A structural hypothesis on the problem data does not hold.

    ``assumption`` names it, e.g. ``"(H1)"``, ``"(M)"`` or ``"(f2)"``.
    """

    def __init__(self, assumption, message):
        super().__init__(f"{assumption} violated: {message}")
        self.assumption = assumption


@dataclass
class KirchhoffModel:
    """The nonlocal coefficient ``M`` and its antiderivative ``M_hat``.

    The bounds ``kappa1 t^(alpha1-1) <= M(t) <= kappa2 t^(alpha2-1)`` and the
    range ``[m0, m_sup]`` are only checked on ``t_range``; see :meth:`validate`.
    """

    M: Callable[[float], float]
    M_hat: Callable[[float], float]
    kappa1: float
    kappa2: float
    alpha1: float
    alpha2: float
    m0: float
    m_sup: float
    t_range: tuple = (1e-3, 1e3)
    family: str = "custom"
    params: dict = field(default_factory=dict)

    @classmethod
    def power(cls, kappa=1.0, alpha=1.2, t_range=(1e-3, 1e3)):
        """``M(t) = kappa t^(alpha-1)``, so ``M_hat(t) = kappa t^alpha / alpha``."""
        kappa, alpha = float(kappa), float(alpha)
        lo, hi = t_range
        return cls(
            M=lambda t: kappa * t ** (alpha - 1.0),
            M_hat=lambda t: kappa * t ** alpha / alpha,
            kappa1=kappa, kappa2=kappa, alpha1=alpha, alpha2=alpha,
            m0=kappa * lo ** (alpha - 1.0), m_sup=kappa * hi ** (alpha - 1.0),
            t_range=tuple(t_range), family="power",
            params={"kappa": kappa, "alpha": alpha})

    @classmethod
    def bounded(cls, m0, m_sup, alpha, kappa1, alpha1, kappa2, alpha2, t_range=(1e-2, 1e2)):
        """``M(t) = m0 + (m_sup - m0) t^a / (1 + t^a)`` with ``a = alpha - 1``."""
        a = float(alpha) - 1.0
        dm = float(m_sup) - float(m0)

        def M(t):
            s = t ** a
            return m0 + dm * s / (1.0 + s)

        def M_hat(t):
            if t <= 0.0:
                return 0.0
            tail, _ = quad(lambda s: s ** a / (1.0 + s ** a), 0.0, t, epsabs=1e-15, epsrel=1e-13,
                           limit=200)
            return m0 * t + dm * tail

        return cls(M=M, M_hat=M_hat, kappa1=kappa1, kappa2=kappa2, alpha1=alpha1,
                   alpha2=alpha2, m0=float(m0), m_sup=float(m_sup), t_range=tuple(t_range),
                   family="bounded",
                   params={"m0": m0, "m_sup": m_sup, "alpha": alpha, "kappa1": kappa1,
                           "alpha1": alpha1, "kappa2": kappa2, "alpha2": alpha2})

    @classmethod
    def constant(cls, value=1.0):
        """``M`` constant.  Handy for classical (non-Kirchhoff) checks; fails (M)."""
        value = float(value)
        return cls(M=lambda t: value, M_hat=lambda t: value * t, kappa1=value, kappa2=value,
                   alpha1=1.0, alpha2=1.0, m0=value, m_sup=value, family="constant",
                   params={"value": value})

    def M_hat_diff(self, a, da):
        """``M_hat(a + da) - M_hat(a)`` without cancellation for small ``da``."""
        b = a + da
        if self.family == "power" and a > 0 and b > 0:
            kappa, alpha = self.params["kappa"], self.params["alpha"]
            return kappa / alpha * a ** alpha * math.expm1(alpha * math.log1p(da / a))
        if self.family == "constant":
            return self.params["value"] * da
        if self.family == "bounded" and a > 0 and b > 0:
            val, _ = quad(lambda s: self.M(a + s), 0.0, da, epsabs=0.0, epsrel=1e-13, limit=200)
            return val
        return self.M_hat(b) - self.M_hat(a)

    def validate(self, n=257):
        lo, hi = self.t_range
        if not (self.kappa2 >= self.kappa1 > 0):
            raise AssumptionError("(M)", "need kappa2 >= kappa1 > 0")
        if not (self.alpha2 >= self.alpha1 > 1):
            raise AssumptionError("(M)", "need alpha2 >= alpha1 > 1")
        if not (0 < lo < hi):
            raise AssumptionError("(M)", "operating range must satisfy 0 < t_min < t_max")
        ts = np.geomspace(lo, hi, n)
        Ms = np.array([self.M(t) for t in ts])
        if np.any(np.diff(Ms) < -1e-14 * np.abs(Ms[1:])):
            raise AssumptionError("(M)", "M is not nondecreasing on the operating range")
        low = self.kappa1 * ts ** (self.alpha1 - 1)
        up = self.kappa2 * ts ** (self.alpha2 - 1)
        tol = 1e-12 * np.maximum(1.0, np.abs(Ms))
        if np.any(Ms < low - tol):
            raise AssumptionError("(M)", "kappa1 t^(alpha1-1) <= M(t) fails")
        if np.any(Ms > up + tol):
            raise AssumptionError("(M)", "M(t) <= kappa2 t^(alpha2-1) fails")
        if np.any(Ms < self.m0 - tol) or np.any(Ms > self.m_sup + tol):
            raise AssumptionError("(M)", "M leaves [m0, m_sup] on the operating range")
        if abs(self.M_hat(0.0)) > 0.0:
            raise AssumptionError("(M)", "M_hat(0) must be 0")
        for t in ts[1:-1:16]:
            h = 1e-5 * t
            fd = (self.M_hat(t + h) - self.M_hat(t - h)) / (2 * h)
            if abs(fd - self.M(t)) > 1e-6 * (1 + abs(self.M(t))):
                raise AssumptionError("(M)", f"M_hat' != M at t={t:.3g}")
        return True

    def to_dict(self):
        return {"family": self.family, **self.params, "t_range": list(self.t_range)}


@dataclass
class Nonlinearity:
    """Right-hand side ``f(x, t)`` with primitive ``F(x, t)``, ``F(x, 0) = 0``.

    ``f`` and ``F`` take an array of points ``(..., 2)`` and values ``(...)``.
    """

    f: Callable
    F: Callable
    c1bar: float
    c2bar: float
    c3bar: float
    s: ExponentField
    r: ExponentField
    family: str = "custom"
    params: dict = field(default_factory=dict)
    F_diff: Callable | None = None

    @classmethod
    def power(cls, c2bar, r, c1bar=0.0, c3bar=None):
        """``f = c2bar |t|^(r(x)-2) t``, ``F = c2bar |t|^r(x) / r(x)``, with ``s = r``.

        Odd in ``t`` with ``f(x, 0) = 0``, so ``u = 0`` is always critical.
        """
        c2 = float(c2bar)
        if c3bar is None:
            c3bar = c2 / r.min_value

        def f(pts, t):
            return c2 * np.sign(t) * np.abs(t) ** (r(pts) - 1.0)

        def F(pts, t):
            rr = r(pts)
            return c2 * np.abs(t) ** rr / rr

        def F_diff(pts, t, dt):
            # F(t + dt) - F(t); same-sign pairs go through expm1/log1p
            rr = r(pts)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = dt / t
                same = (t != 0) & (ratio > -1.0)
                fine = c2 * np.abs(t) ** rr / rr * np.expm1(rr * np.log1p(np.where(same, ratio, 0.0)))
            return np.where(same, fine, F(pts, t + dt) - F(pts, t))

        return cls(f=f, F=F, c1bar=float(c1bar), c2bar=c2, c3bar=float(c3bar), s=r, r=r,
                   F_diff=F_diff, family="power", params={"c1bar": float(c1bar), "c2bar": c2,
                                           "c3bar": float(c3bar)})

    def validate(self, p: ExponentField, n_t=41, n_x=16):
        """Sampled checks of the growth conditions (f1)-(f3) against ``p``."""
        if min(self.c1bar, self.c2bar, self.c3bar) < 0:
            raise AssumptionError("(f1)", "c1bar, c2bar, c3bar must be nonnegative")
        x0, x1, y0, y1 = p.domain
        X, Y = np.meshgrid(np.linspace(x0, x1, n_x), np.linspace(y0, y1, n_x))
        pts = np.stack([X.ravel(), Y.ravel()], -1)
        pv, sv = p(pts), self.s(pts)
        # critical Sobolev exponent in 2-D: 2p/(2-p) for p < 2
        pstar = np.where(pv < 2, 2 * pv / np.maximum(2 - pv, 1e-300), np.inf)
        if not (np.all(sv > 1) and np.all(sv < pstar)):
            raise AssumptionError("(f1)", "need 1 < s(x) < p*(x)")
        if not (self.r.min_value > 1 and self.r.max_value < p.min_value):
            raise AssumptionError("(f2)", f"need 1 < r- <= r+ < p- (r+={self.r.max_value}, "
                                          f"p-={p.min_value})")
        ts = np.concatenate([-np.geomspace(1e-3, 1e3, n_t)[::-1], [0.0], np.geomspace(1e-3, 1e3, n_t)])
        P = np.repeat(pts[:, None, :], len(ts), axis=1)
        T = np.broadcast_to(ts[None, :], P.shape[:-1])
        fv, Fv = self.f(P, T), self.F(P, T)
        sP, rP = self.s(P), self.r(P)
        if np.any(self.F(pts, np.zeros(len(pts))) != 0):
            raise AssumptionError("(f3)", "F(x, 0) must vanish")
        bound1 = self.c1bar + self.c2bar * np.abs(T) ** (sP - 1)
        if np.any(np.abs(fv) > bound1 * (1 + 1e-12) + 1e-300):
            raise AssumptionError("(f1)", "|f(x,t)| <= c1 + c2 |t|^(s-1) fails")
        bound2 = self.c3bar * (1 + np.abs(T) ** rP)
        if np.any(Fv > bound2 * (1 + 1e-12)):
            raise AssumptionError("(f2)", "F(x,t) <= c3 (1 + |t|^r) fails")
        if np.any(Fv[:, ts >= 0] < 0):
            raise AssumptionError("(f3)", "F(x,t) >= 0 for t >= 0 fails")
        tt = T[:, np.abs(ts) >= 1e-2]
        PP = P[:, np.abs(ts) >= 1e-2]
        h = 1e-6 * np.abs(tt)
        fd = (self.F(PP, tt + h) - self.F(PP, tt - h)) / (2 * h)
        fe = self.f(PP, tt)
        if np.any(np.abs(fd - fe) > 1e-6 * (np.abs(fe) + 1e-12)):
            raise AssumptionError("(f1)", "dF/dt != f")
        return True

    def to_dict(self):
        return {"family": self.family, **self.params}


@dataclass
class EnergyReport:
    rho_H: float
    K: float
    J: float
    I_lambda: float
    lam: float
    residual: np.ndarray | None = None

    @property
    def residual_norm(self):
        return float(np.linalg.norm(self.residual)) if self.residual is not None else math.nan


class EnergyFunctional:
    """Discrete ``K``, ``J`` and ``I_lambda`` on a fixed mesh and data set.

    Coefficient fields are sampled once at the quadrature points.  Methods
    take raw nodal arrays; boundary entries of every gradient are zero.
    """

    def __init__(self, mesh: Mesh, p: ExponentField | None, q: ExponentField | None,
                 mu: WeightField | None, model: KirchhoffModel | None,
                 nl: Nonlinearity | None = None):
        self.mesh, self.p, self.q, self.mu, self.model, self.nl = mesh, p, q, mu, model, nl
        pts = mesh.qpoints
        if p is not None:
            self._p = np.ascontiguousarray(p(pts))
            self._q = np.ascontiguousarray(q(pts))
            self._mu = np.ascontiguousarray(mu(pts))
        self._w = mesh.qweights
        self._tri = mesh.triangles
        self._nv = mesh.n_vertices
        self._bnd = mesh.boundary

    # -- gradient part -----------------------------------------------------
    def grad_norms(self, U):
        G = gradient_of(self.mesh, U)
        return G, np.sqrt(G[:, 0] ** 2 + G[:, 1] ** 2)

    def varrho(self, U):
        _, g = self.grad_norms(U)
        gq = g[:, None]
        return float(np.sum(self._w * (gq ** self._p / self._p + self._mu * gq ** self._q / self._q)))

    def modular_grad(self, U):
        """``rho_H(|grad u|) = int |grad u|^p + mu |grad u|^q``."""
        _, g = self.grad_norms(U)
        gq = g[:, None]
        return float(np.sum(self._w * (gq ** self._p + self._mu * gq ** self._q)))

    def K(self, U):
        return float(self.model.M_hat(self.varrho(U)))

    def flux_coefficients(self, g, floor=0.0):
        """Per-element ``int (|z|^(p-2) + mu |z|^(q-2))`` at ``|z| = max(g, floor)``.

        With ``floor = 0`` an element with zero gradient gets coefficient 0,
        i.e. ``|z|^(h-2) z := 0`` at ``z = 0``.
        """
        gg = np.maximum(g, floor)[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.sum(self._w * (gg ** (self._p - 2.0) + self._mu * gg ** (self._q - 2.0)), axis=1)
        return np.where(gg[:, 0] > 0, c, 0.0)

    def _scatter(self, local):
        out = np.bincount(self._tri.ravel(), weights=local.ravel(), minlength=self._nv)
        out[self._bnd] = 0.0
        return out

    def varrho_gradient(self, U):
        G, g = self.grad_norms(U)
        c = self.flux_coefficients(g)
        flux = c[:, None] * G
        return self._scatter(np.einsum("td,tkd->tk", flux, self.mesh.basis_grads))

    def K_gradient(self, U):
        return float(self.model.M(self.varrho(U))) * self.varrho_gradient(U)

    def secant_matrix(self, U, floor=0.0):
        """Interior block of ``sum_e M(varrho) c_e grad(phi_i).grad(phi_j)``.

        ``K_gradient(U) = A @ U`` when ``floor = 0``; with a positive floor the
        matrix stays SPD on flat elements and serves as a descent metric.
        """
        _, g = self.grad_norms(U)
        c = self.flux_coefficients(g, floor) * float(self.model.M(self.varrho(U)))
        B = self.mesh.basis_grads
        local = c[:, None, None] * np.einsum("tid,tjd->tij", B, B)
        rows = np.repeat(self._tri, 3, axis=1).ravel()
        cols = np.tile(self._tri, (1, 3)).ravel()
        A = sp.csr_matrix((local.ravel(), (rows, cols)), shape=(self._nv, self._nv))
        idx = self.mesh.interior
        return A[idx][:, idx].tocsc()

    # -- nonlinearity part -----------------------------------------------------
    def values_at_quadrature(self, U):
        return np.asarray(U)[self._tri] @ QUAD_BARY.T

    def J(self, U):
        uq = self.values_at_quadrature(U)
        return float(np.sum(self._w * self.nl.F(self.mesh.qpoints, uq)))

    def J_gradient(self, U):
        uq = self.values_at_quadrature(U)
        fq = self.nl.f(self.mesh.qpoints, uq)
        return self._scatter((self._w * fq) @ QUAD_BARY)

    # -- total -------------------------------------------------------------------
    def energy(self, U, lam):
        return self.K(U) - lam * self.J(U)

    def energy_change(self, U, S, lam):
        """``I(U + S) - I(U)`` computed from differences, accurate for tiny ``S``.

        Subtracting two energies loses everything below ``eps |I|``; here each
        power is differenced as ``b^h expm1(h log1p(delta / b))`` with ``delta``
        the exact change of the gradient norm.
        """
        G, g = self.grad_norms(U)
        D = gradient_of(self.mesh, S)
        Gt = G + D
        gt = np.sqrt(Gt[:, 0] ** 2 + Gt[:, 1] ** 2)
        with np.errstate(divide="ignore", invalid="ignore"):
            dg = (2.0 * np.einsum("td,td->t", G, D) + np.einsum("td,td->t", D, D)) / (g + gt)
            dg = np.where(g + gt > 0, dg, 0.0)
            gq, dq = g[:, None], dg[:, None]
            pos = gq > 0
            lr = np.log1p(np.where(pos, dq / np.where(pos, gq, 1.0), 0.0))

            def dpow(h):
                return np.where(pos, gq ** h * np.expm1(h * lr), (gq + dq) ** h)

            drho = float(np.sum(self._w * (dpow(self._p) / self._p + self._mu * dpow(self._q) / self._q)))
        rho = self.varrho(U)
        dK = float(self.model.M_hat_diff(rho, drho))
        uq = self.values_at_quadrature(U)
        sq = self.values_at_quadrature(S)
        if self.nl.F_diff is not None:
            dF = self.nl.F_diff(self.mesh.qpoints, uq, sq)
        else:
            dF = self.nl.F(self.mesh.qpoints, uq + sq) - self.nl.F(self.mesh.qpoints, uq)
        return dK - lam * float(np.sum(self._w * dF))

    def gradient(self, U, lam):
        return self.K_gradient(U) - lam * self.J_gradient(U)

    def report(self, U, lam, with_residual=True):
        rho = self.varrho(U)
        K = float(self.model.M_hat(rho))
        J = self.J(U)
        res = self.gradient(U, lam)[self.mesh.interior] if with_residual else None
        return EnergyReport(rho_H=rho, K=K, J=J, I_lambda=K - lam * J, lam=lam, residual=res)


# --- function-style front end over DiscreteFunction ---------------------------------------

def _functional(u, p, q, mu, model=None, nl=None):
    if model is None:
        model = KirchhoffModel.constant(1.0)
    return EnergyFunctional(u.mesh, p, q, mu, model, nl)


def varrho_h(u: DiscreteFunction, p, q, mu):
    return _functional(u, p, q, mu).varrho(u.values)


def k_energy(u: DiscreteFunction, model, p, q, mu):
    return _functional(u, p, q, mu, model).K(u.values)


def k_gradient(u: DiscreteFunction, model, p, q, mu):
    return _functional(u, p, q, mu, model).K_gradient(u.values)


def j_energy(u: DiscreteFunction, nl):
    return EnergyFunctional(u.mesh, None, None, None, None, nl).J(u.values)


def j_gradient(u: DiscreteFunction, nl):
    return EnergyFunctional(u.mesh, None, None, None, None, nl).J_gradient(u.values)


def i_lambda(u: DiscreteFunction, lam, model, nl, p, q, mu):
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return EnergyFunctional(u.mesh, p, q, mu, model, nl).report(u.values, lam)
