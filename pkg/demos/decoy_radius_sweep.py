"""Sweep the decoy placement radius and watch multi-layer acquisition respond.

Each point is a small battery (default 20 seeds), so expect a few points of noise.

    python3 demos/decoy_radius_sweep.py --runs 20
"""

import argparse
from dataclasses import replace

from multilayer_defense import BUILTIN_SCENARIOS, Calibration, run_battery


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--radii", type=float, nargs="+", default=[600.0, 900.0, 1200.0, 1800.0, 2500.0])
    args = ap.parse_args()

    base = BUILTIN_SCENARIOS["multi_layer"]
    print(f"{'radius_m':>9s} {'acquisition':>12s} {'deviation_deg':>14s} {'decoy_hits':>11s}")
    for radius in args.radii:
        cfg = replace(base, calibration=replace(Calibration(), decoy_radius_m=radius))
        s = run_battery([(cfg, args.runs)], base_seed=1).scenarios["multi_layer"]
        print(f"{radius:9.0f} {s.acquisition_rate:12.2f} {s.deviation_mean:14.2f} {s.outcomes['hit_decoy']:11d}")


if __name__ == "__main__":
    main()
