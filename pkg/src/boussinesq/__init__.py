"""Free-space pseudo-spectral experiments for the 3D Boussinesq system."""

from .fields import Grid3, NormDescriptor, NormSeries, ScalarField, VectorField
from .solver import SolverOptions, State, Trajectory, simulate, step

__version__ = "0.1.0"

__all__ = ["Grid3", "NormDescriptor", "NormSeries", "ScalarField", "SolverOptions", "State",
           "Trajectory", "VectorField", "simulate", "step", "__version__"]
