"""Command-line entry point: simulate, train, sweep-ratio, robustness.

Exit status: 0 success, 1 configuration error, 2 runtime failure,
3 finished but a convergence target was missed.

``RLREADOUT_THREADS`` caps the BLAS/OpenMP thread count.
"""
from __future__ import annotations

import os
import sys

_threads = os.environ.get("RLREADOUT_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import csv  # noqa: E402

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_NOT_CONVERGED = 0, 1, 2, 3


def _device(cfg):
    from .device import calibrated, preset, uncalibrated

    if cfg.kappa is not None:
        return calibrated(uncalibrated(cfg.kappa, cfg.chi, cfg.n0, cfg.t1_us, mu=cfg.mu), cfg.square_fidelity)
    dev = preset(cfg.preset, cfg.mu)
    if cfg.square_fidelity != 0.995:
        dev = calibrated(dev, cfg.square_fidelity)
    return dev


def _write_rows(path, rows, columns=None):
    cols = list(columns or [])
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def _fmt(m) -> str:
    return (f"f_max={m.f_max:.6f} t_f_max={m.t_f_max:.1f}ns tau_r={m.tau_r:.1f}ns "
            f"n_max={m.n_max:.3f} n_residual={m.n_residual:.4f}")


def cmd_simulate(cfg) -> int:
    from .experiments import named_waveform
    from .langevin import simulate, write_trajectory_csv
    from .metrics import readout_metrics, write_metrics_csv

    dev = _device(cfg)
    name = cfg.waveform or "square"
    wave = named_waveform(name, dev)
    traj = simulate(dev, wave)
    m = readout_metrics(traj, dev)
    os.makedirs(cfg.out, exist_ok=True)
    write_trajectory_csv(os.path.join(cfg.out, "trajectory.csv"), traj)
    write_metrics_csv(os.path.join(cfg.out, "metrics.csv"), [({"waveform": name}, m)], ("waveform",))
    print(_fmt(m))
    return EXIT_OK


def cmd_train(cfg) -> int:
    from .experiments import train_readout
    from .ppo import PpoConfig
    from .reward import RewardConfig

    dev = _device(cfg)
    rconf = RewardConfig(cfg.k1, cfg.k2, cfg.k3, cfg.k4, cfg.k5, cfg.k6)
    summaries = []
    os.makedirs(cfg.out, exist_ok=True)
    for s in range(cfg.seed, cfg.seed + cfg.n_seeds):
        pcfg = PpoConfig(n_updates=max(cfg.n_updates, 1), n_envs=cfg.n_envs,
                         n_epochs=cfg.n_epochs, n_minibatches=cfg.n_minibatches, lr=cfg.lr,
                         clip_eps=cfg.clip_eps, value_clip=cfg.value_clip, value_coef=cfg.value_coef,
                         max_grad_norm=cfg.max_grad_norm, seed=s)
        if cfg.n_updates == 0:
            summaries.append(_untrained(dev, rconf, pcfg, os.path.join(cfg.out, f"seed_{s}")))
            continue
        _, summ = train_readout(dev, rconf, pcfg, os.path.join(cfg.out, f"seed_{s}"), cfg.checkpoints,
                                cfg.success_fidelity, cfg.success_duration_ns)
        summaries.append(summ)
        print(f"seed {s}: final f_max={summ['final_f_max']:.5f} tau_r={summ['final_tau_r']:.1f}ns "
              f"first success at update {summ['first_success_update']}", flush=True)
    _write_rows(os.path.join(cfg.out, "summary.csv"), summaries)
    return EXIT_OK if all(s["success"] for s in summaries) else EXIT_NOT_CONVERGED


def _untrained(dev, rconf, pcfg, out_dir) -> dict:
    import numpy as np

    from .nn import PolicyNet
    from .ppo import TrainingLog
    from .pulses import write_waveform
    from .reward import ReadoutEnv

    env = ReadoutEnv(dev, rconf)
    net = PolicyNet(pcfg.net_config(env.obs_dim, env.action_dim, env.action_bound),
                    np.random.default_rng(pcfg.seed))
    mean = net.forward(env.observation()[None])[0][0]
    os.makedirs(out_dir, exist_ok=True)
    TrainingLog().write_csv(os.path.join(out_dir, "training_log.csv"))
    write_waveform(os.path.join(out_dir, "final_waveform.txt"), env.waveform(mean))
    _, br = env.evaluate(mean)
    return {"seed": pcfg.seed, "updates": 0, "final_f_max": br.metrics.f_max, "final_tau_r": br.metrics.tau_r,
            "final_reward": br.total, "first_success_update": -1, "success": False, "elapsed_s": 0.0}


def cmd_sweep_ratio(cfg) -> int:
    from .experiments import sweep_ratio

    rows = sweep_ratio(cfg.ratios, cfg.mu, cfg.square_fidelity)
    os.makedirs(cfg.out, exist_ok=True)
    cols = ["ratio", "a4r_f_max", "a4r_tau_r", "clear_f_max", "clear_tau_r", "a4r_shorter", "error"]
    _write_rows(os.path.join(cfg.out, "sweep_ratio.csv"), rows, cols)
    for r in rows:
        if r["error"]:
            print(f"kappa/chi={r['ratio']}: {r['error']}")
        else:
            print(f"kappa/chi={r['ratio']}: A4R {r['a4r_f_max']:.5f} {r['a4r_tau_r']:.0f}ns | "
                  f"CLEAR {r['clear_f_max']:.5f} {r['clear_tau_r']:.0f}ns")
    ok = all(not r["error"] and r["a4r_converged"] and r["clear_converged"] for r in rows)
    return EXIT_OK if ok else EXIT_NOT_CONVERGED


def cmd_robustness(cfg) -> int:
    from .experiments import named_waveform, robustness_grid, spreads

    dev = _device(cfg)
    wave = named_waveform(cfg.waveform or "a4r", dev)
    rows = robustness_grid(dev, wave, cfg.grid_offset, cfg.grid_points)
    os.makedirs(cfg.out, exist_ok=True)
    _write_rows(os.path.join(cfg.out, "robustness.csv"), rows, ["kappa_offset", "chi_offset", "f_max", "tau_r"])
    df, dt = spreads(rows)
    print(f"f_max spread {100 * df:.3f} pp, tau_r spread {dt:.1f} ns over {len(rows)} points")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "train": cmd_train, "sweep-ratio": cmd_sweep_ratio,
            "robustness": cmd_robustness}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rlreadout", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--preset")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key; repeatable")
        if name in ("simulate", "robustness"):
            sp.add_argument("--waveform")
        if name == "train":
            sp.add_argument("--updates", type=int, dest="n_updates")
            sp.add_argument("--seeds", type=int, dest="n_seeds")
        if name == "sweep-ratio":
            sp.add_argument("--ratios")
    return p


def main(argv=None) -> int:
    from .config import ConfigError, load_config, parse_config
    from .errors import CalibrationError, InvalidParameterError, NumericalBlowupError, UnknownPresetError

    args = build_parser().parse_args(argv)
    try:
        overrides = parse_config("\n".join(args.set), "--set")
        for key in ("seed", "out", "preset", "waveform", "n_updates", "n_seeds", "ratios"):
            val = getattr(args, key, None)
            if val is not None:
                overrides.update(parse_config(f"{key} = {val}", f"--{key}"))
        cfg = load_config(args.config, **overrides)
        if cfg.kappa is None:
            from .device import preset_names
            if cfg.preset not in preset_names():
                raise ConfigError(f"unknown preset {cfg.preset!r}; choose from {preset_names()}")
    except (ConfigError, InvalidParameterError, UnknownPresetError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except (OSError, CalibrationError, NumericalBlowupError, InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
