"""Why CCNCS gives every individual its own complementary vector.

Decompose the 2-D Himmelblau problem into two 1-D sub-problems (m_pool={2}).
A partial solution x_1 is only meaningful together with values for the
other coordinate:

* per-individual complement (CCNCS): each process is scored with its *own*
  other coordinate, so each process keeps searching around its own optimum;
* shared complement (classic CC): every partial is scored inside the same
  context vector, the best solution so far, so all processes are pulled
  towards the optimum that context belongs to.

Run:  python demos/02_complement_ablation.py
"""

from __future__ import annotations

import numpy as np

from ccncs.config import config_from_dict
from ccncs.harness import optima_coverage, run_experiment
from ccncs.problems import HIMMELBLAU_MINIMA, himmelblau


def coverage(algorithm: str, seed: int) -> int:
    cfg = config_from_dict({"algorithm": algorithm, "problem": "himmelblau", "dimension": 2, "lambda": 4,
                            "m_pool": [2], "budget_evals": 20000, "master_seed": seed})
    res = run_experiment(cfg, write=False)
    return optima_coverage(res.log.final_means, HIMMELBLAU_MINIMA, 0.5, 0.5, himmelblau)


def main() -> None:
    seeds = range(8)
    own = [coverage("ccncs", s) for s in seeds]
    shared = [coverage("ccncs-shared-complement", s) for s in seeds]
    print("optima covered per seed (out of 4)")
    print(f"  per-individual complement: {own}  median {np.median(own)}")
    print(f"  shared complement:         {shared}  median {np.median(shared)}")


if __name__ == "__main__":
    main()
