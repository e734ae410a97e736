"""Fidelity and reset-time landscape of the calibrated A4R pulse under kappa/chi drift."""
import argparse

import numpy as np

from rlreadout.analytic import build_a4r, calibrate_a4r
from rlreadout.device import preset
from rlreadout.experiments import robustness_grid, spreads


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="kyoto")
    ap.add_argument("--offset", type=float, default=0.1)
    ap.add_argument("--points", type=int, default=11)
    ap.add_argument("--residual-margin", type=float, default=1.0,
                    help="accepted residual photons as a multiple of the reset target")
    args = ap.parse_args()

    dev = preset(args.preset)
    cal = calibrate_a4r(dev, residual_margin=args.residual_margin, strict=False)
    rows = robustness_grid(dev, build_a4r(cal.params, dev), args.offset, args.points)
    tau = np.array([r["tau_r"] for r in rows]).reshape(args.points, args.points)
    print("tau_r (ns); rows: kappa offset, columns: chi offset")
    for dk, line in zip(np.linspace(-args.offset, args.offset, args.points), tau):
        print(f"{dk:+.2f} " + " ".join(f"{v:6.0f}" for v in line))
    df, dt = spreads(rows)
    print(f"fidelity spread {100 * df:.2f} pp, tau_r spread {dt:.0f} ns")


if __name__ == "__main__":
    main()
