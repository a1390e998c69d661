"""Spectral simulation and verification tools for the periodic complex mKdV equation."""

from .spectral_core import (SpectralField, FLParams, fl_norm, mass, momentum, project_leq,
                            project_dyadic, resonance, to_physical, from_physical)
from .dynamics import (Model, ModelKind, IntegratorConfig, Trajectory, evolve, gauge_g1,
                       gauge_g2)

__version__ = "0.1.0"

__all__ = [
    "SpectralField", "FLParams", "fl_norm", "mass", "momentum", "project_leq",
    "project_dyadic", "resonance", "to_physical", "from_physical", "Model", "ModelKind",
    "IntegratorConfig", "Trajectory", "evolve", "gauge_g1", "gauge_g2", "__version__",
]
