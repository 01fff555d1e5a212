"""Multi-seed tuner comparison on the synthetic objective.

For each tuner: median best-found value after the budget, and the median
evaluation index at which a top-k configuration (by brute force over the
space) was first reached. Only spaces small enough to enumerate are allowed.

    python scripts/tuner_study.py --kernel lu --size large --seeds 20
"""
import argparse
import time

import numpy as np

from tiletuner.harness import Budget, SyntheticObjective, run_tuning, synthetic_objective
from tiletuner.space import all_configs, build_space, space_size
from tiletuner.tuners import TUNER_KINDS


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--kernel", default="lu")
    ap.add_argument("--size", default="large")
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--max-evals", type=int, default=100)
    ap.add_argument("--top-frac", type=float, default=0.01)
    args = ap.parse_args()

    space = build_space(args.kernel, args.size)
    if space_size(space) > 100_000:
        ap.error("space too large to enumerate for the top-k threshold")
    values = sorted(synthetic_objective(space, c) for c in all_configs(space))
    k = max(1, int(round(args.top_frac * len(values))))
    threshold = values[k - 1]
    obj = SyntheticObjective(space)

    print(f"{args.kernel}/{args.size}: {len(values)} configs, top-{k} threshold {threshold:.4f}")
    print(f"{'tuner':<10}{'median best':>12}{'median hit':>12}{'hit rate':>10}{'sec':>8}")
    for kind in TUNER_KINDS:
        t0 = time.perf_counter()
        bests, hits = [], []
        for seed in range(args.seeds):
            tr = run_tuning(kind, space, obj, Budget(args.max_evals), seed)
            bests.append(tr.records[-1].best_so_far_s)
            hits.append(next((r.eval_index for r in tr.records if r.runtime_s <= threshold), np.inf))
        rate = np.mean(np.isfinite(hits))
        print(f"{kind:<10}{np.median(bests):>12.4f}{np.median(hits):>12}{rate:>10.2f}"
              f"{time.perf_counter() - t0:>8.1f}")


if __name__ == "__main__":
    main()
