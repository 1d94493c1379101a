"""Run the full experiment B times and print the accuracy table next to the reference values."""
import argparse
import warnings

from anomrank.errors import RankTieWarning
from anomrank.experiment import ExperimentConfig, load_config, reproduce

REFERENCE = {25: (0.91, 0.13), 50: (0.84, 0.15), 75: (0.74, 0.15), 100: (0.64, 0.13)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config")
    ap.add_argument("--out", default="runs/accuracy")
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else ExperimentConfig()
    cfg = ExperimentConfig.from_dict({**cfg.to_dict(), "repetitions": args.reps, "seed": args.seed})
    warnings.simplefilter("ignore", RankTieWarning)
    summ = reproduce(cfg, args.out, jobs=args.jobs)

    print(f"{'n_lowest':>8}  {'ours':>14}  {'reference':>14}")
    for t in summ["table"]:
        k = t["n_lowest"]
        std = "NA" if t["std"] is None else f"{t['std']:.2f}"
        pub = REFERENCE.get(k)
        pub_s = f"{pub[0]:.2f} +- {pub[1]:.2f}" if pub else "-"
        print(f"{k:>8}  {t['mean']:.2f} +- {std:>4}  {pub_s:>14}")
    fixed = [t for t in summ["per_lambda"] if t["lambda"] == 1.0]
    if fixed:
        print("at lambda = 1: " + "  ".join(f"Acc{t['n_lowest']}={t['mean']:.2f}" for t in fixed))
    print(f"outputs in {args.out}")


if __name__ == "__main__":
    main()
