"""Optimal transport, entropy functionals and dimensional Gaussian inequalities on grids."""

__version__ = "0.1.0"

from .errors import EntropicTransportError
from .functionals import entropy, fisher_information, relative_entropy
from .geometry import Lattice, StarBody2D, body_measure, minkowski_average
from .measures import DiscreteMeasure, GaussianMeasure, GridDensity1D, GridDensity2D, ReferenceMeasure, restrict
from .potentials import ConvexBodySupport, HomogeneousPotential
from .transport import GeodesicPath, interpolate, velocity_potential, w2_1d, w2_gaussian

__all__ = [
    "ConvexBodySupport",
    "DiscreteMeasure",
    "EntropicTransportError",
    "GaussianMeasure",
    "GeodesicPath",
    "GridDensity1D",
    "GridDensity2D",
    "HomogeneousPotential",
    "Lattice",
    "ReferenceMeasure",
    "StarBody2D",
    "body_measure",
    "entropy",
    "fisher_information",
    "interpolate",
    "minkowski_average",
    "relative_entropy",
    "restrict",
    "velocity_potential",
    "w2_1d",
    "w2_gaussian",
]
