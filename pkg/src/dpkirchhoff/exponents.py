"""Variable exponents, modulars and Luxemburg norms.

The double-phase integrand is ``H(x, t) = t**p(x) + mu(x) * t**q(x)``.
All integrals are sums over the mesh quadrature; the modular of a
sample array is therefore a positive weighted sum of powers, which is what
makes the norm/modular inequalities hold exactly at the discrete level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .mesh import DiscreteFunction

GRID_CHECK = 64
BOUND_TOL = 1e-12
BISECT_RTOL = 1e-12
BISECT_MAXITER = 200
MAX_DOUBLINGS = 200
NORM_POST_TOL = 1e-10

Domain = tuple  # (x_min, x_max, y_min, y_max)
UNIT_SQUARE = (0.0, 1.0, 0.0, 1.0)


class ConvergenceError(RuntimeError):
    pass


def _grid(domain, n=GRID_CHECK):
    x0, x1, y0, y1 = domain
    X, Y = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    return np.stack([X, Y], axis=-1)


def _sine_range(base, amp, freq, phase, lo, hi):
    """Exact min/max of ``base + amp*sin(freq*pi*s + phase)`` for s in [lo, hi]."""
    a, b = freq * math.pi * lo + phase, freq * math.pi * hi + phase
    if a > b:
        a, b = b, a
    cands = [math.sin(a), math.sin(b)]
    k = math.ceil((a - math.pi / 2) / math.pi)
    while math.pi / 2 + k * math.pi <= b:
        cands.append(math.sin(math.pi / 2 + k * math.pi))
        k += 1
    vals = [base + amp * c for c in cands]
    return min(vals), max(vals)


class ExponentField:
    """A continuous exponent ``h`` on a rectangle with declared bounds.

    ``evaluator`` maps an array of points ``(..., 2)`` to exponent values of
    shape ``(...)``.  ``min_value``/``max_value`` play the role of h-/h+;
    the constructor checks them on a 64x64 grid.
    """

    def __init__(self, evaluator: Callable, min_value: float, max_value: float,
                 domain: Domain = UNIT_SQUARE, name: str = "h", spec: dict | None = None,
                 require_c_plus: bool = True):
        self.evaluator = evaluator
        self.min_value = float(min_value)
        self.max_value = float(max_value)
        self.domain = tuple(float(d) for d in domain)
        self.name = name
        self.spec = spec
        if self.min_value > self.max_value:
            raise ValueError(f"{name}: min_value > max_value")
        if require_c_plus and not self.min_value > 1.0:
            raise ValueError(f"{name}: exponent must exceed 1 everywhere (got min {self.min_value})")
        vals = np.asarray(self(_grid(self.domain)))
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{name}: non-finite exponent values")
        if vals.min() < self.min_value - BOUND_TOL or vals.max() > self.max_value + BOUND_TOL:
            raise ValueError(
                f"{name}: sampled range [{vals.min():.15g}, {vals.max():.15g}] violates "
                f"declared bounds [{self.min_value}, {self.max_value}]")

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.broadcast_to(np.asarray(self.evaluator(pts), dtype=float), pts.shape[:-1])

    @property
    def lo(self):
        return self.min_value

    @property
    def hi(self):
        return self.max_value

    @property
    def is_constant(self):
        return self.min_value == self.max_value

    def __repr__(self):
        return f"ExponentField({self.name}, [{self.min_value}, {self.max_value}])"

    @classmethod
    def constant(cls, value, domain=UNIT_SQUARE, name="h", **kw):
        value = float(value)
        return cls(lambda pts: np.full(np.shape(pts)[:-1], value), value, value, domain, name,
                   spec={"kind": "constant", "value": value}, **kw)

    @classmethod
    def affine(cls, c0, cx, cy, domain=UNIT_SQUARE, name="h", **kw):
        x0, x1, y0, y1 = domain
        corners = [c0 + cx * x + cy * y for x in (x0, x1) for y in (y0, y1)]
        return cls(lambda pts: c0 + cx * pts[..., 0] + cy * pts[..., 1],
                   min(corners), max(corners), domain, name,
                   spec={"kind": "affine", "c0": c0, "cx": cx, "cy": cy}, **kw)

    @classmethod
    def sine(cls, base, amp, freq=1.0, axis=0, phase=0.0, domain=UNIT_SQUARE, name="h", **kw):
        """``base + amp * sin(freq * pi * x_axis + phase)``."""
        lo, hi = (domain[0], domain[1]) if axis == 0 else (domain[2], domain[3])
        mn, mx = _sine_range(base, amp, freq, phase, lo, hi)
        return cls(lambda pts: base + amp * np.sin(freq * np.pi * pts[..., axis] + phase),
                   mn, mx, domain, name,
                   spec={"kind": "sine", "base": base, "amp": amp, "freq": freq,
                         "axis": axis, "phase": phase}, **kw)

    @classmethod
    def from_spec(cls, spec, domain=UNIT_SQUARE, name="h", **kw):
        kind = spec.get("kind")
        args = {k: v for k, v in spec.items() if k != "kind"}
        if kind == "constant":
            return cls.constant(args["value"], domain, name, **kw)
        if kind == "affine":
            return cls.affine(args.get("c0", 0.0), args.get("cx", 0.0), args.get("cy", 0.0),
                              domain, name, **kw)
        if kind == "sine":
            return cls.sine(args["base"], args["amp"], args.get("freq", 1.0), args.get("axis", 0),
                            args.get("phase", 0.0), domain, name, **kw)
        raise ValueError(f"{name}: unknown field kind {kind!r}")


class WeightField(ExponentField):
    """Nonnegative bounded weight (the ``mu`` of the double-phase integrand)."""

    def __init__(self, evaluator, min_value, max_value, domain=UNIT_SQUARE, name="mu",
                 spec=None):
        if min_value < 0:
            raise ValueError(f"{name}: weight must be nonnegative (min {min_value})")
        super().__init__(evaluator, min_value, max_value, domain, name, spec,
                         require_c_plus=False)

    @property
    def sup_norm(self):
        return max(abs(self.min_value), abs(self.max_value))


def field_range(spec, domain=UNIT_SQUARE):
    """Closed-form (min, max) of a parametric field spec without validation."""
    kind = spec.get("kind")
    if kind == "constant":
        return float(spec["value"]), float(spec["value"])
    if kind == "affine":
        x0, x1, y0, y1 = domain
        c = [spec.get("c0", 0.0) + spec.get("cx", 0.0) * x + spec.get("cy", 0.0) * y
             for x in (x0, x1) for y in (y0, y1)]
        return min(c), max(c)
    if kind == "sine":
        axis = spec.get("axis", 0)
        lo, hi = (domain[0], domain[1]) if axis == 0 else (domain[2], domain[3])
        return _sine_range(spec["base"], spec["amp"], spec.get("freq", 1.0),
                           spec.get("phase", 0.0), lo, hi)
    raise ValueError(f"unknown field kind {kind!r}")


# --- bracket exponents --------------------------------------------------------

def bracket_exponent(t, a, b, mode):
    """Exponent selected by ``t^(a vee b)`` or ``t^(a wedge b)``.

    vee: min{a,b} for t < 1, max{a,b} for t >= 1; wedge is the reverse.
    """
    if t < 0:
        raise ValueError("bracket exponents need t >= 0")
    small = t < 1
    if mode == "vee":
        return min(a, b) if small else max(a, b)
    if mode == "wedge":
        return max(a, b) if small else min(a, b)
    raise ValueError(f"mode must be 'vee' or 'wedge', got {mode!r}")


def bracket_pow(t, a, b, mode):
    return float(t) ** bracket_exponent(t, a, b, mode)


def pow_lower(t, h_min, h_max):
    """``min_x t**h(x)`` from the bounds of h."""
    return t ** h_max if t < 1 else t ** h_min


def pow_upper(t, h_min, h_max):
    """``max_x t**h(x)`` from the bounds of h."""
    return t ** h_min if t < 1 else t ** h_max


# --- modulars on quadrature samples ---------------------------------------------

def modular_samples(values, exponent, weights):
    """``sum w * |v|**h`` over quadrature samples."""
    return float(np.sum(weights * np.abs(values) ** exponent))


def modular_H_samples(values, p, q, mu, weights):
    a = np.abs(values)
    return float(np.sum(weights * (a ** p + mu * a ** q)))


def luxemburg_from_modular(rho, label="norm"):
    """Solve ``rho(zeta) = 1`` for a strictly decreasing ``zeta -> rho(zeta)``.

    ``rho(zeta)`` must be the modular of ``u / zeta``.  The bracket is found by
    geometric doubling/halving from zeta = 1, then bisected until the relative
    width drops below 1e-12.  Returns 0 when ``rho`` vanishes identically.
    """
    r1 = rho(1.0)
    if r1 == 0.0:
        return 0.0
    if r1 == 1.0:
        return 1.0
    lo, hi = 1.0, 1.0
    if r1 > 1.0:
        for _ in range(MAX_DOUBLINGS):
            hi *= 2.0
            if rho(hi) <= 1.0:
                break
        else:
            raise ConvergenceError(f"{label}: no upper bracket after {MAX_DOUBLINGS} doublings")
        lo = hi / 2.0
    else:
        for _ in range(MAX_DOUBLINGS):
            lo *= 0.5
            if rho(lo) >= 1.0:
                break
        else:
            raise ConvergenceError(f"{label}: no lower bracket after {MAX_DOUBLINGS} halvings")
        hi = lo * 2.0
    for _ in range(BISECT_MAXITER):
        mid = 0.5 * (lo + hi)
        if (hi - lo) / mid < BISECT_RTOL:
            break
        if rho(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    zeta = 0.5 * (lo + hi)
    if abs(rho(zeta) - 1.0) > NORM_POST_TOL:
        raise ConvergenceError(f"{label}: |rho(u/zeta) - 1| = {abs(rho(zeta) - 1.0):.3e}")
    return zeta


def luxemburg_samples(values, exponent, weights):
    a = np.abs(values)
    return luxemburg_from_modular(lambda z: modular_samples(a / z, exponent, weights), "L^h")


def luxemburg_H_samples(values, p, q, mu, weights):
    a = np.abs(values)
    return luxemburg_from_modular(lambda z: modular_H_samples(a / z, p, q, mu, weights), "L^H")


# --- DiscreteFunction front end -----------------------------------------------------

@dataclass(frozen=True)
class LebesgueSpace:
    """``L^{h(x)}``."""
    h: ExponentField


@dataclass(frozen=True)
class DoublePhaseSpace:
    """Musielak-Orlicz space of ``H(x,t) = t^p + mu t^q``."""
    p: ExponentField
    q: ExponentField
    mu: WeightField


def samples(u: DiscreteFunction, use_gradient=False):
    """Quadrature samples of ``|u|`` (or of ``|grad u|``) and their weights."""
    m = u.mesh
    if use_gradient:
        vals = np.broadcast_to(u.grad_norm()[:, None], m.qweights.shape)
    else:
        vals = np.abs(u.at_quadrature())
    return vals, m.qweights


def modular(u: DiscreteFunction, h: ExponentField, use_gradient=False):
    vals, w = samples(u, use_gradient)
    return modular_samples(vals, h(u.mesh.qpoints), w)


def modular_H(u: DiscreteFunction, p, q, mu, use_gradient=False):
    vals, w = samples(u, use_gradient)
    pts = u.mesh.qpoints
    return modular_H_samples(vals, p(pts), q(pts), mu(pts), w)


def luxemburg_norm(u: DiscreteFunction, space, use_gradient=False):
    vals, w = samples(u, use_gradient)
    pts = u.mesh.qpoints
    if isinstance(space, LebesgueSpace):
        return luxemburg_samples(vals, space.h(pts), w)
    if isinstance(space, DoublePhaseSpace):
        return luxemburg_H_samples(vals, space.p(pts), space.q(pts), space.mu(pts), w)
    raise TypeError(f"unsupported space {space!r}")


def seminorm_mu(u: DiscreteFunction, q, mu, use_gradient=False):
    """``inf{s > 0 : int mu (|u|/s)^q <= 1}``; zero when ``int mu |u|^q`` is zero."""
    vals, w = samples(u, use_gradient)
    pts = u.mesh.qpoints
    ww = w * mu(pts)
    return luxemburg_samples(vals, q(pts), ww)


def l1_norm(u: DiscreteFunction, use_gradient=False):
    vals, w = samples(u, use_gradient)
    return float(np.sum(w * vals))
