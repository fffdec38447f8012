"""Discontinuous Galerkin solvers on curved annular meshes.

Poisson (mixed, interior penalty), Euler (weak form, Roe-Pike flux) and
Navier-Stokes (BR2) discretizations with independently chosen solution and
geometry orders, plus a refinement-study driver for convergence tables.
"""
from .reference import ReferenceElement, build_reference_element
from .geometry import (CurvedMesh, FullAnnulus, GeometryMaps, QuarterAnnulus, annulus_map,
                       compute_geometry_maps, generate_tobecurved_annulus)
from .physics import (CouetteParams, GasModel, NonphysicalStateError, VortexParams, primitives,
                      roe_pike_flux, supersonic_vortex_exact, taylor_couette_exact)
from .boundary import (Dirichlet, ExactDirichlet, Neumann, NoSlipAdiabatic, NoSlipIsothermal,
                       RiemannInvariant, SlipWall)
from .assembly import CompressibleSystem, Discretization, JacobianMatrix, PoissonSystem
from .solver import NewtonConfig, NewtonFailure, SolveReport, cg, gmres, newton_solve
from .study import ConvergenceTable, StudyConfig, convergence_orders, load_config, run_study

__version__ = "0.1.0"

__all__ = [
    "ReferenceElement", "build_reference_element",
    "CurvedMesh", "FullAnnulus", "GeometryMaps", "QuarterAnnulus", "annulus_map",
    "compute_geometry_maps", "generate_tobecurved_annulus",
    "CouetteParams", "GasModel", "NonphysicalStateError", "VortexParams", "primitives",
    "roe_pike_flux", "supersonic_vortex_exact", "taylor_couette_exact",
    "Dirichlet", "ExactDirichlet", "Neumann", "NoSlipAdiabatic", "NoSlipIsothermal",
    "RiemannInvariant", "SlipWall",
    "CompressibleSystem", "Discretization", "JacobianMatrix", "PoissonSystem",
    "NewtonConfig", "NewtonFailure", "SolveReport", "cg", "gmres", "newton_solve",
    "ConvergenceTable", "StudyConfig", "convergence_orders", "load_config", "run_study",
]
