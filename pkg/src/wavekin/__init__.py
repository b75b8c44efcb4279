"""Centroid kinematics of scalar wavepackets in momentum space.

Probability and energy centroids, their velocities, angular and boost
momenta of a free wavepacket under an isotropic dispersion relation.
"""

__version__ = "0.1.0"

from .dispersion import (
    CustomIsotropic,
    DispersionRelation,
    Massless,
    Quadratic,
    RelativisticMassive,
    group_velocity,
    omega,
)
from .errors import (
    ConfigError,
    DegenerateFieldError,
    DomainError,
    NumericalConsistencyError,
    SingularityError,
    UsageError,
)
from .field import GaussianComponent, GaussianSuperposition, GridField, amplitude_at, spectral_gradient
from .grid import GridSpec
from .observables import (
    KinematicState,
    boost_momentum,
    decompose_angular_momentum,
    energy_centroid,
    energy_centroid_velocity,
    kinematic_state,
    mean_group_velocity,
    orbital_angular_momentum,
    probability_centroid,
    scalar_moments,
    trajectory,
)
from .quadrature import ConvergenceReport, auto_grid, converge, integrate

__all__ = [
    "ConfigError", "ConvergenceReport", "CustomIsotropic", "DegenerateFieldError", "DispersionRelation",
    "DomainError", "GaussianComponent", "GaussianSuperposition", "GridField", "GridSpec", "KinematicState",
    "Massless", "NumericalConsistencyError", "Quadratic", "RelativisticMassive", "SingularityError",
    "UsageError", "amplitude_at", "auto_grid", "boost_momentum", "converge", "decompose_angular_momentum",
    "energy_centroid", "energy_centroid_velocity", "group_velocity", "integrate", "kinematic_state",
    "mean_group_velocity", "omega", "orbital_angular_momentum", "probability_centroid", "scalar_moments",
    "spectral_gradient", "trajectory",
]
