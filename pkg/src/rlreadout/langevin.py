"""Coherent Langevin dynamics of the readout resonator for both qubit states.

    d alpha_{g/e} / dt = -(kappa/2 -/+ i chi) alpha_{g/e} - i A(t)

The drive is held constant over each waveform sample and every sample is
split into ``SUBSTEPS`` classical RK4 steps.  Two implementations of the same
discretisation live here: :func:`integrate` steps through the RK4 stages
explicitly, :func:`simulate_batch` applies the equivalent linear propagator
to many waveforms at once.  :func:`analytic_piecewise` is the exact solution
and serves as the oracle for both.
"""
from __future__ import annotations

import csv
import functools
from dataclasses import dataclass, field

import numpy as np

from .device import DeviceParams
from .errors import InvalidParameterError, NumericalBlowupError

DT_NS = 6.0
N_SAMPLES = 121
SUBSTEPS = 4


@dataclass(frozen=True)
class DriveWaveform:
    """Real drive samples on a uniform grid with spacing ``dt`` in ns."""

    samples: np.ndarray
    dt: float = DT_NS

    def __post_init__(self):
        arr = np.array(self.samples, dtype=float).reshape(-1)
        if arr.size == 0:
            raise InvalidParameterError("waveform must have at least one sample")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("waveform samples must be finite")
        if not self.dt > 0:
            raise InvalidParameterError("dt must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.dt * self.samples.size

    def amplitude_at(self, t_ns: float) -> float:
        """Zero-order-hold value at time ``t_ns`` (the last sample past the end)."""
        idx = min(int(np.floor(t_ns / self.dt + 1e-9)), self.samples.size - 1)
        return float(self.samples[max(idx, 0)])

    def with_samples(self, samples) -> "DriveWaveform":
        return DriveWaveform(samples, self.dt)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    alpha_g: np.ndarray
    alpha_e: np.ndarray
    drive: DriveWaveform | None = field(default=None, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if not (t.shape == np.shape(self.alpha_g) == np.shape(self.alpha_e)):
            raise InvalidParameterError("trajectory fields must share one grid")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise InvalidParameterError("trajectory times must be strictly increasing")

    def __len__(self):
        return self.times.size


def decay_rates(params: DeviceParams) -> np.ndarray:
    """Complex rates (g, e) so that d alpha / dt = -rate * alpha - i A."""
    return np.array([params.kappa / 2 - 1j * params.chi, params.kappa / 2 + 1j * params.chi])


def _time_grid(n_samples: int, dt: float, substeps: int) -> np.ndarray:
    return np.arange(n_samples * substeps + 1) * (dt / substeps)


def _as_pair(alpha0_g, alpha0_e) -> np.ndarray:
    return np.array([alpha0_g, alpha0_e], dtype=complex)


def integrate(params: DeviceParams, wave: DriveWaveform, alpha0_g: complex = 0j,
              alpha0_e: complex = 0j, substeps: int = SUBSTEPS) -> Trajectory:
    """Fixed-step RK4 solution; field values on every substep (dt / substeps)."""
    gam = decay_rates(params)
    h = wave.dt / substeps * 1e-3  # us
    out = np.empty((2, len(wave) * substeps + 1), dtype=complex)
    y = _as_pair(alpha0_g, alpha0_e)
    out[:, 0] = y
    col = 1
    for a in wave.samples:
        b = -1j * a
        for _ in range(substeps):
            k1 = -gam * y + b
            k2 = -gam * (y + 0.5 * h * k1) + b
            k3 = -gam * (y + 0.5 * h * k2) + b
            k4 = -gam * (y + h * k3) + b
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            out[:, col] = y
            col += 1
        if not np.all(np.isfinite(y)):
            raise NumericalBlowupError(f"non-finite field at t={col * h * 1e3:.1f} ns")
    return Trajectory(_time_grid(len(wave), wave.dt, substeps), out[0], out[1], wave)


def analytic_piecewise(params: DeviceParams, wave: DriveWaveform, alpha0_g: complex = 0j,
                       alpha0_e: complex = 0j, substeps: int = SUBSTEPS) -> Trajectory:
    """Exact solution for a piecewise-constant drive, on the same grid as :func:`integrate`."""
    gam = decay_rates(params)[:, None]
    tau = np.arange(1, substeps + 1) * (wave.dt / substeps) * 1e-3
    prop = np.exp(-gam * tau)  # (2, substeps)
    out = np.empty((2, len(wave) * substeps + 1), dtype=complex)
    y = _as_pair(alpha0_g, alpha0_e)[:, None]
    out[:, 0] = y[:, 0]
    for k, a in enumerate(wave.samples):
        fixed = -1j * a / gam
        seg = (y - fixed) * prop + fixed
        out[:, 1 + k * substeps: 1 + (k + 1) * substeps] = seg
        y = seg[:, -1:]
    return Trajectory(_time_grid(len(wave), wave.dt, substeps), out[0], out[1], wave)


@functools.lru_cache(maxsize=64)
def _propagator(kappa: float, chi: float, n_samples: int, dt: float, substeps: int):
    gam = np.array([kappa / 2 - 1j * chi, kappa / 2 + 1j * chi])
    h = dt / substeps * 1e-3
    z = -h * gam
    r = 1 + z + z**2 / 2 + z**3 / 6 + z**4 / 24
    phi = 1 + z / 2 + z**2 / 6 + z**3 / 24
    j = np.arange(1, substeps + 1)
    rj = r[:, None] ** j  # (2, substeps) homogeneous part after j substeps
    cj = -1j * h * phi[:, None] * (1 - rj) / (1 - r[:, None])  # driven part per unit amplitude
    p, c = rj[:, -1], cj[:, -1]
    # boundary response: alpha_k = sum_{m<k} p^(k-1-m) c A_m
    lag = np.arange(n_samples + 1)[None, :] - np.arange(n_samples)[:, None] - 1
    powers = p[:, None, None] ** np.clip(lag, 0, None)[None]
    toeplitz = np.where(lag[None] >= 0, c[:, None, None] * powers, 0)  # (2, n, n+1)
    homog = p[:, None] ** np.arange(n_samples + 1)[None, :]  # (2, n+1)
    return toeplitz.real.copy(), toeplitz.imag.copy(), homog, rj, cj


def simulate_batch(params: DeviceParams, samples, dt: float = DT_NS, alpha0=(0j, 0j),
                   substeps: int = SUBSTEPS) -> np.ndarray:
    """RK4 fields for a batch of waveforms.

    Parameters
    ----------
    samples : array (B, n) or (n,)
        Physical drive amplitudes in us^-1.

    Returns
    -------
    complex array (B, 2, n*substeps + 1); axis 1 is (g, e).
    """
    a = np.atleast_2d(np.asarray(samples, dtype=float))
    bsz, n = a.shape
    t_re, t_im, homog, rj, cj = _propagator(float(params.kappa), float(params.chi), n, float(dt), substeps)
    bound = np.einsum("bm,smk->bsk", a, t_re) + 1j * np.einsum("bm,smk->bsk", a, t_im)
    a0 = np.asarray(alpha0, dtype=complex)
    if np.any(a0 != 0):
        bound = bound + a0[None, :, None] * homog[None]
    # bound: (B, 2, n+1); fill substeps inside each sample
    start = bound[:, :, :-1, None]  # (B, 2, n, 1)
    inner = rj[None, :, None, :] * start + cj[None, :, None, :] * a[:, None, :, None]
    out = np.empty((bsz, 2, n * substeps + 1), dtype=complex)
    out[:, :, 0] = bound[:, :, 0]
    out[:, :, 1:] = inner.reshape(bsz, 2, n * substeps)
    if not np.all(np.isfinite(out)):
        raise NumericalBlowupError("non-finite field in batch simulation")
    return out


def simulate(params: DeviceParams, wave: DriveWaveform, alpha0_g: complex = 0j,
             alpha0_e: complex = 0j) -> Trajectory:
    """Propagator-based equivalent of :func:`integrate` for a single waveform."""
    f = simulate_batch(params, wave.samples, wave.dt, (alpha0_g, alpha0_e))[0]
    return Trajectory(_time_grid(len(wave), wave.dt, SUBSTEPS), f[0], f[1], wave)


def photon_number(traj: Trajectory) -> np.ndarray:
    """Larger of the two branch populations at each time."""
    return np.maximum(np.abs(traj.alpha_g) ** 2, np.abs(traj.alpha_e) ** 2)


def separation(traj: Trajectory) -> np.ndarray:
    return np.abs(traj.alpha_g - traj.alpha_e)


TRAJECTORY_COLUMNS = ("t_ns", "re_ag", "im_ag", "re_ae", "im_ae", "n", "s")


def write_trajectory_csv(path, traj: Trajectory) -> None:
    n, s = photon_number(traj), separation(traj)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for i in range(len(traj)):
            ag, ae = traj.alpha_g[i], traj.alpha_e[i]
            w.writerow([repr(float(v)) for v in (traj.times[i], ag.real, ag.imag, ae.real, ae.imag, n[i], s[i])])


def read_trajectory_csv(path) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(data[:, 0], data[:, 1] + 1j * data[:, 2], data[:, 3] + 1j * data[:, 4])
