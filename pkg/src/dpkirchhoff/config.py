"""Problem configuration: dataclasses, validation and canonical JSON.

A config is one JSON document tagged with ``"schema": "dpk-config/1"``.
Exponent fields and the weight use the parametric forms understood by
:meth:`ExponentField.from_spec` (constant, affine, sine), so their ranges are
known in closed form and the structural hypotheses can be checked exactly.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from functools import cached_property
from pathlib import Path

from .energy import AssumptionError, EnergyFunctional, KirchhoffModel, Nonlinearity
from .exponents import ExponentField, WeightField, field_range
from .mesh import Mesh, inradius, rect_mesh

SCHEMA = "dpk-config/1"
N_DIM = 2


class ConfigError(ValueError):
    """Malformed configuration (as opposed to a violated hypothesis)."""


@dataclass
class DomainConfig:
    width: float = 1.0
    height: float = 1.0
    mesh_level: int = 4


@dataclass
class KirchhoffConfig:
    family: str = "power"
    params: dict = field(default_factory=lambda: {"kappa": 1.0, "alpha": 1.2})
    t_range: list = field(default_factory=lambda: [1e-3, 1e3])


@dataclass
class NonlinearityConfig:
    family: str = "power"
    c1bar: float = 0.0
    c2bar: float = 0.5
    c3bar: float | None = None
    r: dict = field(default_factory=lambda: {"kind": "constant", "value": 1.1})


@dataclass
class TheoremConfig:
    delta: float = 0.1
    r_param: float = 0.002
    R: float | None = None           # None: largest inscribed ball
    x0: list | None = None
    c_H_trials: int = 64
    c_H_safety: float = 2.0
    c_H_seed: int = 0


@dataclass
class SolverConfig:
    tol_scale: float = 1e-8
    max_iter: int = 100_000
    seed: int = 0
    starts: int = 16
    rounds: int = 3
    distinct_threshold: float = 1e-3
    deflation_rho: float = 1.0
    metric: str = "secant"
    trace_every: int = 10


def _default_p():
    return {"kind": "sine", "base": 1.3, "amp": 0.1, "freq": 1.0, "axis": 0, "phase": 0.0}


def _default_q():
    return {"kind": "affine", "c0": 1.6, "cx": 0.0, "cy": 0.1}


def _default_mu():
    return {"kind": "affine", "c0": 0.0, "cx": 1.0, "cy": 0.0}


@dataclass
class ProblemConfig:
    schema: str = SCHEMA
    domain: DomainConfig = field(default_factory=DomainConfig)
    p: dict = field(default_factory=_default_p)
    q: dict = field(default_factory=_default_q)
    mu: dict = field(default_factory=_default_mu)
    kirchhoff: KirchhoffConfig = field(default_factory=KirchhoffConfig)
    nonlinearity: NonlinearityConfig = field(default_factory=NonlinearityConfig)
    theorem: TheoremConfig = field(default_factory=TheoremConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    lam: str | float = "mid"

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("schema", SCHEMA) != SCHEMA:
            raise ConfigError(f"unsupported schema {d.get('schema')!r}; expected {SCHEMA!r}")
        nested = {"domain": DomainConfig, "kirchhoff": KirchhoffConfig,
                  "nonlinearity": NonlinearityConfig, "theorem": TheoremConfig,
                  "solver": SolverConfig}
        _check_keys(d, cls, "config")
        kw = {}
        for k, v in d.items():
            if k in nested:
                if not isinstance(v, dict):
                    raise ConfigError(f"{k}: expected an object")
                _check_keys(v, nested[k], k)
                kw[k] = nested[k](**v)
            else:
                kw[k] = v
        return cls(**kw)

    def canonical_json(self):
        return canonical_json(self.to_dict())

    def config_hash(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def with_overrides(self, mesh_level=None, seed=None, lam=None):
        d = self.to_dict()
        if mesh_level is not None:
            d["domain"]["mesh_level"] = int(mesh_level)
        if seed is not None:
            d["solver"]["seed"] = int(seed)
        if lam is not None:
            d["lam"] = lam
        return ProblemConfig.from_dict(d)


def _check_keys(d, cls, where):
    allowed = {f.name for f in fields(cls)}
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True,
                      allow_nan=False)


def load_config(path) -> ProblemConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return ProblemConfig.from_dict(data)


def _domain(cfg):
    return (0.0, float(cfg.domain.width), 0.0, float(cfg.domain.height))


def check_hypotheses(cfg: ProblemConfig):
    """Closed-form checks of (H1), (H2) before any field object is built."""
    dom = _domain(cfg)
    try:
        pmin, pmax = field_range(cfg.p, dom)
        qmin, qmax = field_range(cfg.q, dom)
        mmin, _ = field_range(cfg.mu, dom)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed field spec: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if not pmin > 1:
        raise AssumptionError("(H1)", f"p- = {pmin} must exceed 1")
    if not pmax < qmin:
        raise AssumptionError("(H1)", f"need p+ < q- (p+ = {pmax}, q- = {qmin})")
    if not qmax < N_DIM:
        raise AssumptionError("(H1)", f"need q+ < N = {N_DIM} (q+ = {qmax})")
    if mmin < 0:
        raise AssumptionError("(H2)", f"mu must be nonnegative (min {mmin})")


class Problem:
    """A validated problem instance: mesh, fields, model and energy."""

    def __init__(self, cfg: ProblemConfig, mesh: Mesh | None = None):
        if cfg.domain.width <= 0 or cfg.domain.height <= 0:
            raise ConfigError("domain width and height must be positive")
        check_hypotheses(cfg)
        self.cfg = cfg
        dom = _domain(cfg)
        self.domain = dom
        self.p = ExponentField.from_spec(cfg.p, dom, name="p")
        self.q = ExponentField.from_spec(cfg.q, dom, name="q")
        mlo, mhi = field_range(cfg.mu, dom)
        mu_tmp = ExponentField.from_spec(cfg.mu, dom, name="mu", require_c_plus=False)
        self.mu = WeightField(mu_tmp.evaluator, mlo, mhi, dom, "mu", spec=dict(cfg.mu))
        self.model = _build_model(cfg.kirchhoff)
        self.model.validate()
        self.nl = _build_nonlinearity(cfg.nonlinearity, dom)
        self.nl.validate(self.p)
        if cfg.theorem.delta <= 0 or cfg.theorem.r_param <= 0:
            raise ConfigError("theorem.delta and theorem.r_param must be positive")
        self.mesh = mesh if mesh is not None else rect_mesh(
            int(cfg.domain.mesh_level), cfg.domain.width, cfg.domain.height)

    @cached_property
    def energy(self):
        return EnergyFunctional(self.mesh, self.p, self.q, self.mu, self.model, self.nl)

    @property
    def ball(self):
        """``(R, x0)`` of the cutoff ball."""
        th = self.cfg.theorem
        R0, c0 = inradius(self.mesh)
        R = R0 if th.R is None else float(th.R)
        x0 = c0 if th.x0 is None else tuple(float(v) for v in th.x0)
        return R, tuple(float(v) for v in x0)

    def with_mesh(self, mesh):
        return Problem(self.cfg, mesh)


def _build_model(kc: KirchhoffConfig) -> KirchhoffModel:
    try:
        if kc.family == "power":
            return KirchhoffModel.power(t_range=tuple(kc.t_range), **kc.params)
        if kc.family == "bounded":
            return KirchhoffModel.bounded(t_range=tuple(kc.t_range), **kc.params)
    except TypeError as exc:
        raise ConfigError(f"kirchhoff.params: {exc}") from exc
    raise ConfigError(f"kirchhoff.family must be 'power' or 'bounded', got {kc.family!r}")


def _build_nonlinearity(nc: NonlinearityConfig, dom) -> Nonlinearity:
    if nc.family != "power":
        raise ConfigError(f"nonlinearity.family must be 'power', got {nc.family!r}")
    rmin, _ = field_range(nc.r, dom)
    if not rmin > 1:
        raise AssumptionError("(f2)", f"r- = {rmin} must exceed 1")
    r = ExponentField.from_spec(nc.r, dom, name="r")
    return Nonlinearity.power(nc.c2bar, r, c1bar=nc.c1bar, c3bar=nc.c3bar)


def build_problem(cfg: ProblemConfig, mesh: Mesh | None = None) -> Problem:
    return Problem(cfg, mesh)


def default_config() -> ProblemConfig:
    return ProblemConfig()
