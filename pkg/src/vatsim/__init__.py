"""Vibration-assisted tunneling through a thermally fluctuating barrier.

Phonon-bath trace synthesis, log-domain tunnel amplitudes, two-channel
selection statistics and multi-observer ensembles.
"""

from vatsim.errors import ConfigurationError, EstimationError
from vatsim.phonon_bath import (
    CoherentBath,
    LatticeSpec,
    Mode,
    ModeGrid,
    Trace,
    TraceKind,
    analytic_sigma0,
    build_mode_grid,
    elongation_trace,
    sample_coherent_amplitudes,
)
from vatsim.tunneling import BarrierSpec, derive_kappa
from vatsim.selection import GumbelParams, SelectionOutcome, Winner

__version__ = "0.1.0"

__all__ = [
    "BarrierSpec",
    "CoherentBath",
    "ConfigurationError",
    "EstimationError",
    "GumbelParams",
    "LatticeSpec",
    "Mode",
    "ModeGrid",
    "SelectionOutcome",
    "Trace",
    "TraceKind",
    "Winner",
    "analytic_sigma0",
    "build_mode_grid",
    "derive_kappa",
    "elongation_trace",
    "sample_coherent_amplitudes",
]
