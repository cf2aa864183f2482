"""Train a tabular coordinator briefly and compare it with random and scripted play.

A short run (default 300 episodes) only shows the learning curve moving; the full
gate uses `multilayer-defense train` with 2000 episodes.

    python3 demos/train_coordinator.py --episodes 300 --eval 50
"""

import argparse
import logging

import numpy as np

from multilayer_defense import BUILTIN_SCENARIOS
from multilayer_defense.policies import RandomPolicy, ScriptedCoordinatedPolicy
from multilayer_defense.training import TrainingConfig, evaluate, evaluation_seeds, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--episodes", type=int, default=300)
    ap.add_argument("--eval", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    scenario = BUILTIN_SCENARIOS["multi_layer"]
    res = train(scenario, "tabular", TrainingConfig(episodes=args.episodes, seed=args.seed))
    curve = res.learning_curve(50)
    for i in range(0, len(curve), max(1, len(curve) // 6)):
        print(f"episode {i:5d}  epsilon {res.epsilons[i]:.2f}  moving-average return {curve[i]:7.2f}")

    seeds = evaluation_seeds(args.eval)
    for label, policy in (
        ("trained (greedy)", res.policy),
        ("uniform random", RandomPolicy()),
        ("scripted plan", ScriptedCoordinatedPolicy(scenario.calibration.schedule)),
    ):
        print(f"{label:18s} mean return {np.mean(evaluate(scenario, policy, seeds)):7.2f}")


if __name__ == "__main__":
    main()
