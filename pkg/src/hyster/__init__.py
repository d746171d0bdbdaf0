"""Relay, Preisach and field-level hysteresis simulation."""

from .exceptions import ConfigError, HysterError, NonConvergenceError
from .preisach import (
    EnsembleState,
    LorentzianParams,
    TriangleQuadrature,
    classical_preisach,
    demagnetized_state,
    discretize_triangle,
    dynamic_preisach,
    lorentzian_density,
    preisach_step,
    total_weight,
)
from .relay import (
    RelayConfig,
    RelayTrace,
    Signal,
    ThresholdPair,
    classical_relay,
    dynamic_relay,
    reconstruct_multiplier,
    yosida_relay_oracle,
)

__all__ = [
    "HysterError",
    "ConfigError",
    "NonConvergenceError",
    "ThresholdPair",
    "Signal",
    "RelayTrace",
    "RelayConfig",
    "classical_relay",
    "dynamic_relay",
    "yosida_relay_oracle",
    "reconstruct_multiplier",
    "LorentzianParams",
    "TriangleQuadrature",
    "EnsembleState",
    "lorentzian_density",
    "discretize_triangle",
    "total_weight",
    "demagnetized_state",
    "classical_preisach",
    "preisach_step",
    "dynamic_preisach",
]
