"""Raw action -> hardware-feasible drive: clip, smooth, scale."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .device import DeviceParams
from .errors import InvalidParameterError
from .langevin import DT_NS, N_SAMPLES, DriveWaveform

BANDWIDTH_MHZ = 50.0
# Gaussian whose magnitude response is -3 dB at BANDWIDTH_MHZ
SIGMA_NS = math.sqrt(2 * math.log(2)) / (2 * math.pi * BANDWIDTH_MHZ * 1e-3)
KERNEL_HALFWIDTH_SIGMAS = 4.0
DEFAULT_SQUARE_NS = 720.0


@dataclass(frozen=True)
class TransformConfig:
    mu: float
    a0: float
    sigma_ns: float = SIGMA_NS

    def __post_init__(self):
        if not (self.sigma_ns > 0 and self.a0 > 0):
            raise InvalidParameterError("sigma_ns and a0 must be positive")
        if not self.mu > 0:
            raise InvalidParameterError("mu must be positive")

    @classmethod
    def for_device(cls, params: DeviceParams, sigma_ns: float = SIGMA_NS) -> "TransformConfig":
        return cls(mu=params.mu, a0=steady_state_amplitude(params), sigma_ns=sigma_ns)


def steady_state_amplitude(params: DeviceParams) -> float:
    """Drive amplitude (us^-1) whose steady state holds ``n0`` photons."""
    return 0.5 * math.sqrt(params.n0 * (params.kappa**2 + 4 * params.chi**2))


def _raw(wave) -> tuple[np.ndarray, float]:
    if isinstance(wave, DriveWaveform):
        return wave.samples, wave.dt
    return np.asarray(wave, dtype=float), DT_NS


def clip(raw, mu: float) -> DriveWaveform:
    x, dt = _raw(raw)
    return DriveWaveform(np.clip(x, -mu, mu), dt)


def smoothing_kernel(sigma_ns: float, dt: float = DT_NS) -> np.ndarray:
    """Gaussian averaged over each sample cell, truncated at +-4 sigma, unit mass.

    Cell averaging is the limit of supersampling the Gaussian inside each
    sample, which matters because sigma is below one 6 ns sample.
    """
    half = max(1, int(math.floor(KERNEL_HALFWIDTH_SIGMAS * sigma_ns / dt + 0.5)))
    k = np.arange(-half, half + 1)
    edges = (np.append(k - 0.5, half + 0.5)) * dt / (sigma_ns * math.sqrt(2))
    w = 0.5 * np.diff(erf(edges))
    return w / w.sum()


def gaussian_smooth_array(x: np.ndarray, sigma_ns: float, dt: float = DT_NS) -> np.ndarray:
    """Smooth the last axis of ``x`` with zero padding; length preserved."""
    ker = smoothing_kernel(sigma_ns, dt)
    half = ker.size // 2
    x = np.asarray(x, dtype=float)
    pad = [(0, 0)] * (x.ndim - 1) + [(half, half)]
    xp = np.pad(x, pad)
    n = x.shape[-1]
    out = np.zeros_like(x)
    for j, w in enumerate(ker):
        out += w * xp[..., j:j + n]
    return out


def gaussian_smooth(wave, sigma_ns: float = SIGMA_NS) -> DriveWaveform:
    if not sigma_ns > 0:
        raise InvalidParameterError("sigma_ns must be positive")
    x, dt = _raw(wave)
    return DriveWaveform(gaussian_smooth_array(x, sigma_ns, dt), dt)


def to_physical_array(actions, tconf: TransformConfig, dt: float = DT_NS) -> np.ndarray:
    """Batch version of :func:`to_physical` on the last axis."""
    x = np.clip(np.asarray(actions, dtype=float), -tconf.mu, tconf.mu)
    return tconf.a0 * gaussian_smooth_array(x, tconf.sigma_ns, dt)


def to_physical(action, params: DeviceParams | TransformConfig, dt: float = DT_NS) -> DriveWaveform:
    """Clip to +-mu, smooth, and scale by the steady-state amplitude."""
    tconf = params if isinstance(params, TransformConfig) else TransformConfig.for_device(params)
    x, dt = (action.samples, action.dt) if isinstance(action, DriveWaveform) else (action, dt)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidParameterError("action must be finite")
    return DriveWaveform(to_physical_array(x, tconf, dt), dt)


def default_square_action(n_samples: int = N_SAMPLES, dt: float = DT_NS,
                          length_ns: float = DEFAULT_SQUARE_NS) -> np.ndarray:
    """Unit-amplitude square over the first ``length_ns``, zero afterwards."""
    a = np.zeros(n_samples)
    a[: int(round(length_ns / dt))] = 1.0
    return a


def write_waveform(path, wave: DriveWaveform) -> None:
    with open(path, "w") as fh:
        fh.write(f"# dt_ns={wave.dt!r}\n")
        for v in wave.samples:
            fh.write(f"{float(v)!r}\n")


def read_waveform(path) -> DriveWaveform:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise InvalidParameterError(f"{path}: missing '# dt_ns=<value>' header")
    key, _, val = lines[0].lstrip("#").strip().partition("=")
    if key.strip() != "dt_ns":
        raise InvalidParameterError(f"{path}: header must be '# dt_ns=<value>'")
    try:
        samples = [float(v) for v in lines[1:]]
        dt = float(val)
    except ValueError as exc:
        raise InvalidParameterError(f"{path}: {exc}") from None
    return DriveWaveform(samples, dt)
