"""Three-decoy rates with the standard weak decoys (1e-2, 1e-3) against much weaker ones (1e-4, 1e-5)."""

import argparse

from tfqkd.cli import loss_grid
from tfqkd.optimize import Scenario, max_tolerated_loss, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pd", type=float, default=1e-7)
    ap.add_argument("--step", type=float, default=5.0)
    args = ap.parse_args()
    a_sc = Scenario.preset("three", args.pd, "standard")
    b_sc = Scenario.preset("three", args.pd, "weak")
    grid = loss_grid(0.0, max_tolerated_loss(b_sc).loss_db + args.step, args.step)
    print(f"{'loss':>6} {'rate (1e-2,1e-3)':>18} {'rate (1e-4,1e-5)':>18} {'rel. gap':>9}")
    for a, b in zip(sweep(a_sc, grid), sweep(b_sc, grid)):
        top = max(a.rate, b.rate)
        gap = abs(a.rate - b.rate) / top if top > 0 else 0.0
        print(f"{a.loss_db:6.1f} {a.rate:18.6e} {b.rate:18.6e} {gap:9.2%}")


if __name__ == "__main__":
    main()
