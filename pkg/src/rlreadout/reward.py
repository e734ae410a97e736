"""Single-step readout environment: action in, reward and per-term breakdown out."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .device import DeviceParams
from .errors import InvalidParameterError, NumericalBlowupError
from .langevin import DT_NS, N_SAMPLES, SUBSTEPS, DriveWaveform, simulate_batch
from .metrics import RESET_SCALE_M, ReadoutMetrics, batch_metrics
from .pulses import SIGMA_NS, TransformConfig, to_physical_array

FAILURE_REWARD = -1e6
TERMS = ("fidelity_term", "time_term", "smoothness_term", "terminal_amp_term", "photon_term", "order_term")


@dataclass(frozen=True)
class RewardConfig:
    k1: float = 10.0
    k2: float = 2.0
    k3: float = 1.0
    k4: float = 100.0
    k5: float = 100.0
    k6: float = 100.0
    n_cap: float | None = None  # defaults to the device N0
    m: float = RESET_SCALE_M

    def __post_init__(self):
        for k in ("k1", "k2", "k3", "k4", "k5"):
            if getattr(self, k) < 0:
                raise InvalidParameterError(f"{k} must be non-negative")
        if not self.k6 > 0:
            raise InvalidParameterError("k6 must be positive")


@dataclass(frozen=True)
class RewardBreakdown:
    fidelity_term: float
    time_term: float
    smoothness_term: float
    terminal_amp_term: float
    photon_term: float
    order_term: float
    total: float
    metrics: ReadoutMetrics | None
    failed: bool = False

    def terms(self) -> dict:
        return {k: getattr(self, k) for k in TERMS}


def _sum_terms(terms: dict):
    total = terms[TERMS[0]]
    for k in TERMS[1:]:
        total = total + terms[k]
    return total


class ReadoutEnv:
    """Batched evaluation of raw actions against one device.

    The physical waveform enters the smoothness and terminal-amplitude
    penalties in units of the steady-state amplitude A0, with time in ns.
    """

    obs_dim = 1

    def __init__(self, device: DeviceParams, rconf: RewardConfig | None = None,
                 n_samples: int = N_SAMPLES, dt: float = DT_NS, sigma_ns: float = SIGMA_NS):
        self.device = device
        self.rconf = rconf or RewardConfig()
        self.n_samples = n_samples
        self.dt = dt
        self.tconf = TransformConfig.for_device(device, sigma_ns)
        self.times = np.arange(n_samples * SUBSTEPS + 1) * dt / SUBSTEPS

    @property
    def action_dim(self) -> int:
        return self.n_samples

    @property
    def action_bound(self) -> float:
        """Raw actions beyond +-mu are clipped by the pulse transform."""
        return self.tconf.mu

    def observation(self) -> np.ndarray:
        return np.zeros(self.obs_dim)

    def physical(self, actions) -> np.ndarray:
        return to_physical_array(actions, self.tconf, self.dt)

    def waveform(self, action) -> DriveWaveform:
        return DriveWaveform(self.physical(action), self.dt)

    def evaluate_batch(self, actions) -> tuple[np.ndarray, dict]:
        """Rewards (B,) and a dict of per-term arrays plus metric arrays."""
        actions = np.atleast_2d(np.asarray(actions, dtype=float))
        if actions.shape[-1] != self.n_samples:
            raise InvalidParameterError(f"action length {actions.shape[-1]} != {self.n_samples}")
        bsz = actions.shape[0]
        finite = np.all(np.isfinite(actions), axis=1)
        safe = np.where(finite[:, None], actions, 0.0)
        phys = self.physical(safe)
        try:
            alpha = simulate_batch(self.device, phys, self.dt)
            failed = ~finite
        except NumericalBlowupError:
            alpha = np.zeros((bsz, 2, self.times.size), dtype=complex)
            failed = np.ones(bsz, dtype=bool)
        met = batch_metrics(alpha, self.device, self.times, self.rconf.m)

        rc, dev = self.rconf, self.device
        u = phys / self.tconf.a0
        d2 = np.diff(u, n=2, axis=-1) / self.dt**2
        n_cap = dev.n0 if rc.n_cap is None else rc.n_cap
        sample_at_min = np.minimum((met["t_min_n"] / self.dt + 1e-9).astype(int), self.n_samples - 1)
        terms = {
            "fidelity_term": -rc.k1 * np.log10(met["infidelity"]),
            "time_term": -rc.k2 * dev.kappa * met["tau_r"] * 1e-3,
            "smoothness_term": -rc.k3 * np.sum(d2**2, axis=-1) * self.dt,
            "terminal_amp_term": -rc.k4 * (np.abs(u[:, 0]) + np.abs(u[np.arange(bsz), sample_at_min])),
            "photon_term": -rc.k5 * np.maximum(met["n_max"] - n_cap, 0.0),
            "order_term": -rc.k6 * (met["t_f_max"] > met["t_min_n"]).astype(float),
        }
        bad = failed | ~np.isfinite(_sum_terms(terms))
        if bad.any():
            for k in TERMS:
                terms[k] = np.where(bad, 0.0, terms[k])
            terms["fidelity_term"] = np.where(bad, FAILURE_REWARD, terms["fidelity_term"])
        total = _sum_terms(terms)
        return total, {**terms, **met, "failed": bad}

    def evaluate(self, action) -> tuple[float, RewardBreakdown]:
        total, info = self.evaluate_batch(np.asarray(action, dtype=float)[None])
        failed = bool(info["failed"][0])
        metrics = None if failed else ReadoutMetrics(
            f_max=float(info["f_max"][0]), t_f_max=float(info["t_f_max"][0]),
            t_min_n=float(info["t_min_n"][0]), n_max=float(info["n_max"][0]),
            n_residual=float(info["n_residual"][0]), tau_r=float(info["tau_r"][0]),
            m=self.rconf.m, infidelity=float(info["infidelity"][0]))
        br = RewardBreakdown(**{k: float(info[k][0]) for k in TERMS}, total=float(total[0]),
                             metrics=metrics, failed=failed)
        return br.total, br


def evaluate(action, device: DeviceParams, rconf: RewardConfig | None = None) -> tuple[float, RewardBreakdown]:
    return ReadoutEnv(device, rconf, n_samples=np.size(action)).evaluate(action)


def replace_config(rconf: RewardConfig, **changes) -> RewardConfig:
    return dataclasses.replace(rconf, **changes)
