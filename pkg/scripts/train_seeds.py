"""Train readout policies for several seeds and tabulate the outcome."""
import argparse
import csv
import os

from rlreadout.device import preset
from rlreadout.experiments import train_readout
from rlreadout.ppo import PpoConfig
from rlreadout.reward import RewardConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="kyoto")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--updates", type=int, default=5000)
    ap.add_argument("--log-std-init", type=float, default=-0.5)
    ap.add_argument("--out", default="runs/train")
    args = ap.parse_args()

    dev = preset(args.preset)
    rows = []
    for seed in range(args.seeds):
        cfg = PpoConfig(n_updates=args.updates, seed=seed, log_std_init=args.log_std_init)
        _, summ = train_readout(dev, RewardConfig(), cfg, os.path.join(args.out, f"seed_{seed}"))
        rows.append(summ)
        print(f"seed {seed}: F={summ['final_f_max']:.5f} tau_r={summ['final_tau_r']:.0f} ns "
              f"success={summ['success']} ({summ['elapsed_s']:.0f} s)", flush=True)
    cols = list(dict.fromkeys(k for r in rows for k in r))
    with open(os.path.join(args.out, "summary.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(rows)
    print(f"{sum(r['success'] for r in rows)}/{len(rows)} seeds met F>=0.993 within 700 ns")


if __name__ == "__main__":
    main()
