"""Physical parameters of a qubit-resonator pair and the decay-model fit.

Rates are stored as angular rates in inverse microseconds; times handed to
users are in nanoseconds.
"""
from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import CalibrationError, InvalidParameterError, UnknownPresetError

# erf argument reached by the default square pulse at steady state
SATURATION_ERF_ARG = 2.9
DEFAULT_F0 = 0.999
DEFAULT_MU = 2.5
DEFAULT_N_TARGET = 0.05
DEFAULT_SQUARE_FIDELITY = 0.995


@dataclass(frozen=True)
class DeviceParams:
    kappa: float
    chi: float
    n0: float
    lambda_snr: float
    f0: float = DEFAULT_F0
    gamma0: float = 0.0
    gammaP: float = 0.0
    mu: float = DEFAULT_MU
    n_target: float = DEFAULT_N_TARGET

    def __post_init__(self):
        checks = {
            "kappa > 0": self.kappa > 0,
            "chi > 0": self.chi > 0,
            "n0 > 0": self.n0 > 0,
            "lambda_snr > 0": self.lambda_snr > 0,
            "0 < f0 <= 1": 0 < self.f0 <= 1,
            "gamma0 >= 0": self.gamma0 >= 0,
            "gammaP >= 0": self.gammaP >= 0,
            "mu > 1": self.mu > 1,
            "0 < n_target < n0": 0 < self.n_target < self.n0,
        }
        for name in ("kappa", "chi", "n0", "lambda_snr", "f0", "gamma0", "gammaP", "mu", "n_target"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        failed = [k for k, ok in checks.items() if not ok]
        if failed:
            raise InvalidParameterError("DeviceParams violates: " + ", ".join(failed))

    def replace(self, **changes) -> "DeviceParams":
        return dataclasses.replace(self, **changes)

    @property
    def ratio(self) -> float:
        """kappa / chi."""
        return self.kappa / self.chi

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def from_quoted_rates(kappa_quoted: float, chi_over_2pi: float) -> tuple[float, float]:
    """Convert published rates to the angular us^-1 convention.

    ``kappa_quoted`` is taken to already be an angular rate (the published
    kappa/chi ratios only work out that way); ``chi_over_2pi`` is a linear
    frequency in MHz.
    """
    if not (kappa_quoted > 0 and chi_over_2pi > 0):
        raise InvalidParameterError("quoted rates must be positive")
    return float(kappa_quoted), float(2 * np.pi * chi_over_2pi)


# name -> (kappa as quoted, chi/2pi in MHz, N0, T1 in us)
_PRESETS = {
    "kyoto": (10.4, 0.425, 26.0, 344.0),
    "brisbane": (21.4, 0.155, 59.0, 291.0),
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def steady_state_separation(kappa: float, chi: float, amplitude: float) -> float:
    """|alpha_g - alpha_e| at steady state under a constant real drive."""
    return 2 * chi * abs(amplitude) / (kappa**2 / 4 + chi**2)


def uncalibrated(kappa: float, chi: float, n0: float, t1_us: float | None = None, **extra) -> DeviceParams:
    """Device with lambda pinned by the saturation convention and gamma_P = 0."""
    a0 = 0.5 * math.sqrt(n0 * (kappa**2 + 4 * chi**2))
    lam = SATURATION_ERF_ARG / steady_state_separation(kappa, chi, a0)
    gamma0 = 1.0 / t1_us if t1_us else extra.pop("gamma0", 0.0)
    return DeviceParams(kappa=kappa, chi=chi, n0=n0, lambda_snr=lam, gamma0=gamma0, **extra)


@functools.lru_cache(maxsize=None)
def _calibrated_preset(name: str, mu: float) -> DeviceParams:
    kq, chi2pi, n0, t1 = _PRESETS[name]
    kappa, chi = from_quoted_rates(kq, chi2pi)
    base = uncalibrated(kappa, chi, n0, t1, mu=mu)
    return calibrated(base)


def preset(name: str, mu: float = DEFAULT_MU) -> DeviceParams:
    """Calibrated device preset (``kyoto`` or ``brisbane``)."""
    key = name.lower()
    if key not in _PRESETS:
        raise UnknownPresetError(f"unknown device preset {name!r}; choose from {preset_names()}")
    return _calibrated_preset(key, float(mu))


def calibrated(params: DeviceParams, target: float = DEFAULT_SQUARE_FIDELITY) -> DeviceParams:
    """Return ``params`` with lambda and gamma_P fitted to the default square pulse."""
    from .pulses import default_square_action, to_physical

    lam, gp = calibrate_decay_model(target, to_physical(default_square_action(), params), params)
    return params.replace(lambda_snr=lam, gammaP=gp)


def _square_max_fidelity(params: DeviceParams, square_pulse) -> float:
    from .langevin import integrate, photon_number, separation
    from .metrics import assignment_fidelity

    traj = integrate(params, square_pulse)
    f = assignment_fidelity(separation(traj), photon_number(traj), params, traj.times)
    return float(np.max(f))


def calibrate_decay_model(target_square_fidelity: float, square_pulse, params: DeviceParams,
                          gamma_max: float = 1e6) -> tuple[float, float]:
    """Fit the photon-induced decay rate so that ``square_pulse`` peaks at the target fidelity.

    lambda is pinned so that the steady-state separation of the square drive
    maps to an erf argument of ``SATURATION_ERF_ARG``; only gamma_P is solved
    for (max fidelity is monotone decreasing in gamma_P).

    Returns
    -------
    (lambda_snr, gamma_P)
    """
    if not 0.5 < target_square_fidelity < 1:
        raise CalibrationError(f"target fidelity {target_square_fidelity} outside (0.5, 1)")
    a_ss = float(np.median(np.abs(square_pulse.samples)))
    lam = SATURATION_ERF_ARG / steady_state_separation(params.kappa, params.chi, a_ss)
    probe = params.replace(lambda_snr=lam)

    def excess(gp: float) -> float:
        return _square_max_fidelity(probe.replace(gammaP=gp), square_pulse) - target_square_fidelity

    lo = excess(0.0)
    if lo < 0:
        raise CalibrationError("target fidelity unreachable even with gamma_P = 0",
                               {"max_fidelity_at_zero": lo + target_square_fidelity})
    hi_g = 0.1
    while excess(hi_g) > 0:
        hi_g *= 4
        if hi_g > gamma_max:
            raise CalibrationError("target fidelity unreachable within gamma_P bracket",
                                   {"gamma_max": gamma_max})
    gp = brentq(excess, hi_g / 4 if hi_g > 0.1 else 0.0, hi_g, xtol=1e-14, rtol=1e-12)
    return lam, float(gp)
