"""Discrete double-phase Kirchhoff problems with variable exponents.

Modules: ``mesh`` (P1 meshes and quadrature), ``exponents`` (variable
exponents, modulars, Luxemburg norms), ``energy`` (the functionals and
their gradients), ``inequalities`` (numerical audits), ``theorem``
(certificate objects), ``solver`` (critical points) and ``cli``.
"""
from .config import ProblemConfig, build_problem, default_config, load_config
from .energy import AssumptionError, EnergyFunctional, KirchhoffModel, Nonlinearity
from .exponents import DoublePhaseSpace, ExponentField, LebesgueSpace, WeightField, luxemburg_norm
from .mesh import DiscreteFunction, Mesh, interpolate, rect_mesh

__version__ = "0.1.0"

__all__ = [
    "ProblemConfig", "build_problem", "default_config", "load_config", "AssumptionError",
    "EnergyFunctional", "KirchhoffModel", "Nonlinearity", "DoublePhaseSpace", "ExponentField",
    "LebesgueSpace", "WeightField", "luxemburg_norm", "DiscreteFunction", "Mesh",
    "interpolate", "rect_mesh",
]
