"""Time-resolved assignment fidelity, readout/reset timing and photon statistics.

All series functions operate on the last axis so they work for a single
trajectory or a batch.  Times are in ns, rates in us^-1.
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfc

from .device import DeviceParams
from .langevin import DT_NS, SUBSTEPS, Trajectory, photon_number, separation

RESET_SCALE_M = 8.0
# how the photon minimum ending the readout is chosen; see extrema_indices
MINIMUM_RULE = "best"


def _grid(n_points: int, times) -> np.ndarray:
    if times is None:
        return np.arange(n_points) * (DT_NS / SUBSTEPS)
    return np.asarray(times, dtype=float)


def snr_fidelity(s, lam: float) -> np.ndarray:
    return 0.5 * (1 + erf(lam * np.asarray(s)))


def cumulative_trapezoid(y, times_ns) -> np.ndarray:
    """Running integral of ``y`` in units of y * us, starting at 0."""
    y = np.asarray(y, dtype=float)
    dt = np.diff(times_ns) * 1e-3
    inc = 0.5 * (y[..., 1:] + y[..., :-1]) * dt
    out = np.zeros_like(y)
    np.cumsum(inc, axis=-1, out=out[..., 1:])
    return out


def qubit_fidelity(n, gamma0: float, gammaP: float, times=None) -> np.ndarray:
    """exp(-gamma0 t - gammaP * integral_0^t N)."""
    n = np.asarray(n, dtype=float)
    t = _grid(n.shape[-1], times)
    return np.exp(-gamma0 * t * 1e-3 - gammaP * cumulative_trapezoid(n, t))


def _erf_argument(s, n, params: DeviceParams, times) -> np.ndarray:
    fq = qubit_fidelity(n, params.gamma0, params.gammaP, times)
    return params.f0 * params.lambda_snr * np.asarray(s) * fq


def assignment_fidelity(s, n, params: DeviceParams, times=None) -> np.ndarray:
    return 0.5 * (1 + erf(_erf_argument(s, n, params, times)))


def assignment_infidelity(s, n, params: DeviceParams, times=None) -> np.ndarray:
    """1 - F, computed through erfc so that it never rounds to zero."""
    return 0.5 * erfc(_erf_argument(s, n, params, times))


def _local_minima(n: np.ndarray) -> np.ndarray:
    mask = np.zeros(n.shape, dtype=bool)
    mask[..., 1:-1] = (n[..., 1:-1] < n[..., :-2]) & (n[..., 1:-1] < n[..., 2:])
    return mask


def extrema_indices(f, n, times=None, rule: str = "first", n_target: float | None = None,
                    kappa: float | None = None, m: float = RESET_SCALE_M) -> tuple[np.ndarray, np.ndarray]:
    """Indices of max fidelity (earliest) and of the photon minimum ending the readout.

    Candidates are the strict local minima of ``n`` at or after the fidelity
    peak.  ``rule="first"`` takes the earliest one, or the last grid point if
    there is none.  ``rule="best"`` also admits the last grid point and takes
    the candidate with the shortest modelled reset time, which needs
    ``n_target`` and ``kappa``; ties go to the earliest.
    """
    f = np.asarray(f, dtype=float)
    n = np.asarray(n, dtype=float)
    i_f = np.argmax(f, axis=-1)
    idx = np.arange(n.shape[-1])
    ok = _local_minima(n) & (idx >= np.expand_dims(i_f, -1))
    if rule == "first":
        found = ok.any(axis=-1)
        i_n = np.where(found, np.argmax(ok, axis=-1), n.shape[-1] - 1)
        return i_f, i_n
    if rule != "best":
        raise ValueError(f"unknown photon-minimum rule {rule!r}")
    if n_target is None or kappa is None:
        raise ValueError("rule='best' needs n_target and kappa")
    ok[..., -1] = True
    t = _grid(n.shape[-1], times)
    cost = np.where(ok, _reset_time(t, n, n_target, kappa, m), np.inf)
    return i_f, np.argmin(cost, axis=-1)


def locate_extrema(f, n, times=None, rule: str = "first", **kw) -> tuple[float, float]:
    """Times (ns) of max fidelity and of the photon minimum that ends the readout."""
    t = _grid(np.shape(f)[-1], times)
    i_f, i_n = extrema_indices(f, n, t, rule, **kw)
    return t[i_f], t[i_n]


def _reset_time(t_min_n, n_at_min, n_target, kappa, m):
    with np.errstate(divide="ignore"):
        extra = np.log(np.asarray(n_at_min, dtype=float) / n_target)
    return np.asarray(t_min_n, dtype=float) + (m / kappa) * np.maximum(extra, 0.0) * 1e3


def reset_time(t_min_n, n_at_min, params: DeviceParams, m: float = RESET_SCALE_M):
    """t_min_n plus modelled passive decay (m/kappa per e-fold) down to n_target; ns."""
    out = _reset_time(t_min_n, n_at_min, params.n_target, params.kappa, m)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ReadoutMetrics:
    f_max: float
    t_f_max: float
    t_min_n: float
    n_max: float
    n_residual: float
    tau_r: float
    m: float = RESET_SCALE_M
    infidelity: float = dataclasses.field(default=float("nan"), compare=False)

    @property
    def ordered(self) -> bool:
        return self.t_f_max <= self.t_min_n

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in METRICS_COLUMNS}


METRICS_COLUMNS = ("f_max", "t_f_max", "t_min_n", "n_max", "n_residual", "tau_r", "m")


def batch_metrics(alpha: np.ndarray, params: DeviceParams, times=None, m: float = RESET_SCALE_M,
                  rule: str = MINIMUM_RULE) -> dict:
    """Metrics for batched fields ``alpha`` of shape (B, 2, T); returns arrays of length B."""
    t = _grid(alpha.shape[-1], times)
    n = np.maximum(np.abs(alpha[:, 0]) ** 2, np.abs(alpha[:, 1]) ** 2)
    s = np.abs(alpha[:, 0] - alpha[:, 1])
    infid = assignment_infidelity(s, n, params, t)
    i_f, i_n = extrema_indices(-infid, n, t, rule, params.n_target, params.kappa, m)
    rows = np.arange(n.shape[0])
    n_res = n[rows, i_n]
    return {
        "f_max": 1 - infid[rows, i_f],
        "infidelity": infid[rows, i_f],
        "t_f_max": t[i_f],
        "t_min_n": t[i_n],
        "n_max": n.max(axis=-1),
        "n_residual": n_res,
        "tau_r": reset_time(t[i_n], n_res, params, m),
        "i_f": i_f,
        "i_n": i_n,
    }


def readout_metrics(traj: Trajectory, params: DeviceParams, m: float = RESET_SCALE_M,
                    rule: str = MINIMUM_RULE) -> ReadoutMetrics:
    alpha = np.stack([traj.alpha_g, traj.alpha_e])[None]
    b = batch_metrics(alpha, params, traj.times, m, rule)
    return ReadoutMetrics(
        f_max=float(b["f_max"][0]), t_f_max=float(b["t_f_max"][0]), t_min_n=float(b["t_min_n"][0]),
        n_max=float(b["n_max"][0]), n_residual=float(b["n_residual"][0]), tau_r=float(b["tau_r"][0]),
        m=m, infidelity=float(b["infidelity"][0]),
    )


def write_metrics_csv(path, rows, extra_columns=()) -> None:
    cols = tuple(extra_columns) + METRICS_COLUMNS
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for extra, met in rows:
            w.writerow({**extra, **met.as_row()})


__all__ = [
    "ReadoutMetrics", "snr_fidelity", "qubit_fidelity", "assignment_fidelity", "assignment_infidelity",
    "locate_extrema", "extrema_indices", "reset_time", "batch_metrics", "readout_metrics",
    "photon_number", "separation", "write_metrics_csv", "METRICS_COLUMNS",
]
