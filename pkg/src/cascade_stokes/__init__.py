"""Steady Stokes flow through one period of a 2D profile cascade.

Taylor-Hood P2/P1 discretization with a Dirichlet inflow, a no-slip blade,
periodic lower/upper curves and a do-nothing outflow.
"""

from .assembly import StokesProblem, TensorForcing, VectorForcing
from .divsolve import CutoffProfile, TensorPotential, build_tensor_potential_L3, build_tensor_potential_L4
from .geometry import CascadeGeometry, CubicCurve, EllipseProfile, SplineProfile, Tag, build_geometry, classify_boundary
from .lift import LiftField, build_lift, compute_flux
from .mesh import Mesh, generate_mesh, read_mesh, structured_mesh, unstructured_mesh, write_mesh
from .solver import MixedField, SolveReport, SolverConfig, recover_pressure_constant, solve
from .verify import ManufacturedCase, NormSpec, convergence_study, error_norm, make_case, remark_r3_inequality_check

__version__ = "0.1.0"
