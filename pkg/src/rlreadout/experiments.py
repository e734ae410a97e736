"""Experiment drivers shared by the CLI, the scripts and the acceptance tests."""
from __future__ import annotations

import os

import numpy as np

from .analytic import build_a4r, build_clear, calibrate_a4r, optimize_clear
from .device import DeviceParams, calibrated, preset, uncalibrated
from .errors import CalibrationError, InvalidParameterError, NumericalBlowupError
from .langevin import DriveWaveform, simulate
from .metrics import readout_metrics
from .ppo import CHECKPOINT_UPDATES, PpoConfig, TrainResult, train
from .pulses import default_square_action, read_waveform, to_physical, write_waveform
from .reward import ReadoutEnv, RewardConfig

TABLE_RATIOS = (0.5, 2.0, 5.0, 10.0)
# the kappa/chi sweep keeps chi, N0 and T1 of this preset
RATIO_BASE = "kyoto"
RATIO_N0 = 26.0
RATIO_T1_US = 344.0


def ratio_device(ratio: float, mu: float = 2.5, target: float = 0.995) -> DeviceParams:
    """Device with kappa = ratio * chi and the decay model refitted to the square pulse."""
    if not ratio > 0:
        raise InvalidParameterError("kappa/chi ratio must be positive")
    chi = preset(RATIO_BASE).chi
    return calibrated(uncalibrated(ratio * chi, chi, RATIO_N0, RATIO_T1_US, mu=mu), target)


def named_waveform(name: str, device: DeviceParams) -> DriveWaveform:
    """``square``, ``zero``, ``a4r``, ``clear`` or a path to a waveform file."""
    if name == "square":
        return to_physical(default_square_action(), device)
    if name == "zero":
        return DriveWaveform(np.zeros(len(default_square_action())))
    if name == "a4r":
        return build_a4r(calibrate_a4r(device, strict=False).params, device)
    if name == "clear":
        return build_clear(optimize_clear(device).params, device)
    return read_waveform(name)


def sweep_ratio(ratios=TABLE_RATIOS, mu: float = 2.5, target: float = 0.995) -> list[dict]:
    """A4R vs CLEAR per kappa/chi ratio; failures are recorded in ``error``."""
    rows = []
    for r in ratios:
        row = {"ratio": float(r)}
        try:
            dev = ratio_device(r, mu, target)
            a = calibrate_a4r(dev, strict=False)
            c = optimize_clear(dev)
            row.update(kappa=dev.kappa, chi=dev.chi,
                       a4r_f_max=a.metrics.f_max, a4r_tau_r=a.metrics.tau_r, a4r_n_residual=a.metrics.n_residual,
                       a4r_converged=a.converged,
                       clear_f_max=c.metrics.f_max, clear_tau_r=c.metrics.tau_r,
                       clear_n_residual=c.metrics.n_residual, clear_converged=c.converged,
                       a4r_shorter=a.metrics.tau_r < c.metrics.tau_r, error="")
        except (CalibrationError, InvalidParameterError, NumericalBlowupError) as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def robustness_grid(device: DeviceParams, wave: DriveWaveform, offset: float = 0.1,
                    points: int = 11) -> list[dict]:
    """Metrics of a fixed waveform with kappa and chi scaled by (1 + offset) over a square grid."""
    offs = np.linspace(-offset, offset, points) if points > 1 else np.zeros(1)
    rows = []
    for dk in offs:
        for dc in offs:
            dev = device.replace(kappa=device.kappa * (1 + dk), chi=device.chi * (1 + dc))
            row = {"kappa_offset": float(dk), "chi_offset": float(dc)}
            try:
                m = readout_metrics(simulate(dev, wave), dev)
                row.update(f_max=m.f_max, tau_r=m.tau_r, n_residual=m.n_residual, t_f_max=m.t_f_max)
            except NumericalBlowupError as exc:
                row.update(f_max=np.nan, tau_r=np.nan, n_residual=np.nan, t_f_max=np.nan, error=str(exc))
            rows.append(row)
    return rows


def spreads(rows: list[dict]) -> tuple[float, float]:
    f = np.array([r["f_max"] for r in rows])
    t = np.array([r["tau_r"] for r in rows])
    return float(np.nanmax(f) - np.nanmin(f)), float(np.nanmax(t) - np.nanmin(t))


def first_success(result: TrainResult, f_min: float = 0.993, duration_max_ns: float = 700.0):
    """First update whose deterministic policy meets both targets, or None."""
    f = result.log.column("eval_f_max")
    t = result.log.column("eval_tau_r")
    hits = np.nonzero((f >= f_min) & (t <= duration_max_ns))[0]
    return int(result.log.rows[hits[0]]["update"]) if hits.size else None


def train_readout(device: DeviceParams, rconf: RewardConfig, pcfg: PpoConfig, out_dir=None,
                  checkpoints=CHECKPOINT_UPDATES, f_min: float = 0.993,
                  duration_max_ns: float = 700.0) -> tuple[TrainResult, dict]:
    env = ReadoutEnv(device, rconf)
    res = train(env, pcfg, out_dir, checkpoints)
    _, br = env.evaluate(res.final_action)
    hit = first_success(res, f_min, duration_max_ns)
    summary = {"seed": pcfg.seed, "updates": len(res.log.rows),
               "final_f_max": br.metrics.f_max if br.metrics else np.nan,
               "final_tau_r": br.metrics.tau_r if br.metrics else np.nan,
               "final_reward": br.total, "first_success_update": -1 if hit is None else hit,
               "success": hit is not None, "elapsed_s": res.elapsed_s}
    if hit is not None:
        row = res.log.rows[hit - 1]
        summary.update(success_f_max=row["eval_f_max"], success_tau_r=row["eval_tau_r"])
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        res.log.write_csv(os.path.join(out_dir, "training_log.csv"))
        write_waveform(os.path.join(out_dir, "final_waveform.txt"), env.waveform(res.final_action))
        write_waveform(os.path.join(out_dir, "best_waveform.txt"), env.waveform(res.best_action))
    return res, summary
