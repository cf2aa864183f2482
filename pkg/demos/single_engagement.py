"""Fly one engagement per scenario on the same seed and print how each ended.

    python3 demos/single_engagement.py --seed 4
"""

import argparse
import io
import json

from multilayer_defense import BUILTIN_SCENARIOS, run_episode


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=4)
    args = ap.parse_args()

    for name, cfg in BUILTIN_SCENARIOS.items():
        log = io.StringIO()
        r = run_episode(cfg, seed=args.seed, event_log=log)
        steps = [json.loads(line) for line in log.getvalue().splitlines()]
        last = steps[-1]
        modes = sorted({s["mode"] for s in steps})
        print(
            f"{name:15s} {r.outcome.value:15s} steps={r.steps:4d} "
            f"deviation={r.mean_deviation_deg:6.2f} deg  final range={last['range_m']:8.1f} m  "
            f"modes={','.join(modes)}  spend(ew,decoys,cyber)=({r.ew_spend:g},{r.decoy_spend},{r.cyber_spend:g})"
        )


if __name__ == "__main__":
    main()
