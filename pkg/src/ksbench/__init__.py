"""Numerical workbench for stationary chemotaxis states on planar Neumann
domains: finite-element spectra, the mean-field energy functional, barycenter
measures, the concentration test family, existence criteria and a
critical-point solver."""

from .energy import EnergyFunctional, Field, Parameters, project_pi
from .mesh import Mesh, boundary_distance, build_builtin, load_mesh
from .spectrum import SpectralBasis, assemble, bracket_index, eigenpairs

__all__ = [
    "EnergyFunctional", "Field", "Parameters", "project_pi",
    "Mesh", "boundary_distance", "build_builtin", "load_mesh",
    "SpectralBasis", "assemble", "bracket_index", "eigenpairs",
]

__version__ = "0.1.0"
