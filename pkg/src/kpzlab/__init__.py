"""Desk-scale simulation lab for narrow-wedge KPZ/SHE two-time statistics.

Subpackages by area:

- :mod:`kpzlab.rng` -- deterministic stream-split randomness, Brownian
  bridges, white-noise fields, exact bridge tail formulas.
- :mod:`kpzlab.she` -- positivity-preserving stochastic heat equation
  solver with narrow-wedge initial data and the 3:2:1 scaling map.
- :mod:`kpzlab.compose` -- the finite-t composition map, its
  zero-temperature limit, and the two-time sampler.
- :mod:`kpzlab.ensemble` -- softly non-intersecting Gibbs line ensembles:
  Boltzmann weights, heat-bath resampling, exact monotone couplings.
- :mod:`kpzlab.zerotemp` -- Brownian last passage percolation profiles
  and the zero-temperature two-time construction.
- :mod:`kpzlab.stats` -- estimators and brute-force checkers for the
  tail-to-covariance toolbox.
- :mod:`kpzlab.experiments` / :mod:`kpzlab.cli` -- experiment runner,
  report emitters, and the ``kpzlab`` command line.
"""

from kpzlab.rng import (
    Grid1D,
    NoiseField,
    RngStream,
    SamplePath,
    bridge_min_tail,
    sample_bridge,
    white_noise_field,
)
from kpzlab.she import HeightField, SheConfig, evolve, narrow_wedge_init, scaled_height
from kpzlab.compose import TwoTimePair, compose_finite_t, compose_zero_t, two_time_sample
from kpzlab.ensemble import (
    Ensemble,
    Hamiltonian,
    boltzmann_weight,
    monotone_coupled_sweep,
    resample_sweep,
)
from kpzlab.zerotemp import (
    BlppField,
    ZeroTempPair,
    airy_like_profile,
    blpp_value,
    two_time_zero_temp,
)

__version__ = "0.1.0"

__all__ = [
    "Grid1D",
    "RngStream",
    "SamplePath",
    "NoiseField",
    "sample_bridge",
    "bridge_min_tail",
    "white_noise_field",
    "SheConfig",
    "HeightField",
    "narrow_wedge_init",
    "evolve",
    "scaled_height",
    "TwoTimePair",
    "compose_finite_t",
    "compose_zero_t",
    "two_time_sample",
    "Hamiltonian",
    "Ensemble",
    "boltzmann_weight",
    "resample_sweep",
    "monotone_coupled_sweep",
    "BlppField",
    "ZeroTempPair",
    "blpp_value",
    "airy_like_profile",
    "two_time_zero_temp",
]
