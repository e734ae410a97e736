"""A4R against CLEAR across kappa/chi, with chi fixed to the kyoto value."""
import argparse

from rlreadout.experiments import TABLE_RATIOS, sweep_ratio

REFERENCE_A4R_NS = dict(zip(TABLE_RATIOS, (967.0, 502.0, 265.0, 164.0)))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", type=float, nargs="*", default=list(TABLE_RATIOS))
    args = ap.parse_args()
    print(f"{'kappa/chi':>9} {'A4R F':>8} {'A4R ns':>8} {'ref ns':>7} {'CLEAR F':>8} {'CLEAR ns':>9}")
    for r in sweep_ratio(args.ratios):
        if r["error"]:
            print(f"{r['ratio']:9g}  {r['error']}")
            continue
        ref = REFERENCE_A4R_NS.get(r["ratio"], float("nan"))
        print(f"{r['ratio']:9g} {r['a4r_f_max']:8.4f} {r['a4r_tau_r']:8.0f} {ref:7.0f} "
              f"{r['clear_f_max']:8.4f} {r['clear_tau_r']:9.0f}")


if __name__ == "__main__":
    main()
