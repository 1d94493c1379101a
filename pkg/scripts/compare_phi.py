"""Train with several score-generating functions on the same repetitions and
compare accuracy and the area under the Mass-Volume curve."""
import argparse
import dataclasses
import warnings

import numpy as np

from anomrank.errors import RankTieWarning
from anomrank.experiment import ExperimentConfig, run_repetitions, summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--phi", nargs="+", default=["mww", "trunc:0.7"])
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--reps", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    warnings.simplefilter("ignore", RankTieWarning)
    for phi in args.phi:
        cfg = dataclasses.replace(ExperimentConfig(), phi=phi, lambda_grid=(args.lam,),
                                  repetitions=args.reps, seed=args.seed)
        records = run_repetitions(cfg, args.jobs)
        summ = summarize(cfg, records)
        auc = np.mean([r["mv_auc"] for r in summ["ok"]])
        accs = "  ".join(f"Acc{t['n_lowest']}={t['mean']:.3f}" for t in summ["table"])
        print(f"{phi:>10}  MV area={auc:.4f}  {accs}")


if __name__ == "__main__":
    main()
