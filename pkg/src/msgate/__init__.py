"""Two-ion gate simulator: exact dynamics, effective model, heating and gate algebra.

Units throughout: frequencies in units of the trap frequency ``nu``,
times in ``1/nu``.
"""

from .dynamics import (
    DetuningSchedule,
    DriveField,
    EvolutionRecord,
    SimParams,
    bichromatic_pair,
    evolve,
    monochromatic_pair,
)
from .effective import EffectiveParams, effective_rabi, gate_time, t_inv
from .errors import (
    ConfigError,
    MSGateError,
    NormDrift,
    PhysicsGuardError,
    TruncationBreach,
)
from .fockspace import BasisSpec, StateVector, make_vib_state, partial_trace_internal, product_state
from .kernels import DEFAULT_BACKEND
from .open_system import HeatingParams, lindblad_oracle, mcwf_trajectory, run_ensemble

__version__ = "0.1.0"

__all__ = [
    "BasisSpec",
    "ConfigError",
    "DEFAULT_BACKEND",
    "DetuningSchedule",
    "DriveField",
    "EffectiveParams",
    "EvolutionRecord",
    "HeatingParams",
    "MSGateError",
    "NormDrift",
    "PhysicsGuardError",
    "SimParams",
    "StateVector",
    "TruncationBreach",
    "bichromatic_pair",
    "effective_rabi",
    "evolve",
    "gate_time",
    "lindblad_oracle",
    "make_vib_state",
    "mcwf_trajectory",
    "monochromatic_pair",
    "partial_trace_internal",
    "product_state",
    "run_ensemble",
    "t_inv",
]
