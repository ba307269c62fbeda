"""Configuration, experiment runners and file output."""

from .config import ExperimentConfig, load_config, parse_config
from .runners import PRESETS, RunResult, preset_config, run_experiment
from .signal import extract_oscillation_frequency, ripple_amplitude

__all__ = [
    "ExperimentConfig",
    "PRESETS",
    "RunResult",
    "extract_oscillation_frequency",
    "load_config",
    "parse_config",
    "preset_config",
    "ripple_amplitude",
    "run_experiment",
]
