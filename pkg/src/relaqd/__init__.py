"""Relativistic quantum dynamics: Dirac and Klein-Gordon split-operator
propagators, Kapitza-Dirac mode expansion and WKB tunneling."""

from .core import (
    ALPHA,
    ATOMIC_UNITS,
    BETA,
    PAULI,
    Grid,
    GridMismatchError,
    PairField,
    PhysicalConstants,
    SpinorField,
    inner_product,
    make_grid,
    spectral_transform,
)
from .dirac import DiracPropagatorConfig, NumericalInstabilityError, max_timestep, propagate_dirac
from .fields import Envelope, PotentialSum, SoftCore, StandingWave, StaticUniform, EFGaugeLaser
from .kg import KGPropagatorConfig, fv_plane_wave, kg_charge, propagate_kg

__version__ = "0.1.0"
