"""Neuroevolution: a flat weight vector is the genome.

An MLP policy (4 inputs, 16 tanh hidden units, 2 outputs) balances a
cart-pole. Each fitness evaluation plays 3 episodes; the reported score is
the mean return of the best genome on 200 fresh test episodes.

The sparse chain is the deceptive case: stepping left once collects a
small distractor reward, the real reward sits at the far right end.

Run:  python demos/04_policy_search.py
"""

from __future__ import annotations

from ccncs.config import config_from_dict
from ccncs.harness import run_experiment


def main() -> None:
    runs = [
        ("cartpole", {"problem": "cartpole", "arch": [4, 16, 2], "budget_evals": 5000}),
        ("sparse chain", {"problem": "sparse_chain", "arch": [10, 16, 2], "budget_evals": 3000,
                          "env_params": {"N": 10, "horizon": 20, "distractor_reward": 0.01}}),
    ]
    for label, spec in runs:
        for alg in ("ccncs", "hillclimb-baseline"):
            raw = {"algorithm": alg, "master_seed": 0, "episodes": 3, **spec}
            if alg == "ccncs":
                raw["m_pool"] = [2, 3, 4]
            s = run_experiment(config_from_dict(raw), write=False).summary
            print(f"{label:12s} {alg:19s} train best {s['best_ever']:7.2f}   "
                  f"test (best-ever) {s['test_return_best_ever']:7.2f}   "
                  f"test (final population best) {s['test_return_final_best']:7.2f}")


if __name__ == "__main__":
    main()
