"""Readout-pulse optimisation for dispersively coupled qubit-resonator systems."""
from .device import DeviceParams, calibrated, preset, preset_names, uncalibrated
from .langevin import DriveWaveform, Trajectory, integrate, simulate, simulate_batch
from .metrics import ReadoutMetrics, readout_metrics
from .pulses import TransformConfig, to_physical
from .reward import ReadoutEnv, RewardBreakdown, RewardConfig, evaluate

__version__ = "0.1.0"

__all__ = [
    "DeviceParams", "calibrated", "preset", "preset_names", "uncalibrated",
    "DriveWaveform", "Trajectory", "integrate", "simulate", "simulate_batch",
    "ReadoutMetrics", "readout_metrics", "TransformConfig", "to_physical",
    "ReadoutEnv", "RewardBreakdown", "RewardConfig", "evaluate",
]
