"""Command-line entry point: ``anomrank {generate,train,evaluate,reproduce}``.

Exit status is 0 on success, 1 on validation errors and 2 on I/O errors.
``generate``, ``train`` and ``evaluate`` chained with the same seed replay the
first repetition of ``reproduce``.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import _csv
from .datagen import RNG_ALGORITHM, read_sample_csv, write_sample_csv
from .experiment import (
    ExperimentConfig,
    generate_data,
    load_config,
    repetition_seeds,
    reproduce,
)
from .model import load_model, save_model, write_traces_csv
from .procedure import accuracy_at, accuracy_hook, fit_lambda_grid, stage2_rank, write_ranked_csv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    return cfg


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(args) -> None:
    cfg = _config(args)
    out = _outdir(args)
    train_set, test, rad = generate_data(cfg, repetition_seeds(cfg.seed, 0)["data"])
    write_sample_csv(train_set, out / "train.csv")
    write_sample_csv(test, out / "test.csv")
    print(f"wrote {len(train_set)} training and {len(test)} test points to {out} (rad={rad:.6g})")


def cmd_train(args) -> None:
    cfg = _config(args)
    out = _outdir(args)
    train_set = read_sample_csv(args.train)
    if train_set.labels is None:
        raise ValueError(f"{args.train}: training file needs a label column")
    hook = None
    if args.test:
        test = read_sample_csv(args.test)
        if test.labels is not None:
            hook = accuracy_hook(test, 75)
    tcfg = cfg.train_config(repetition_seeds(cfg.seed, 0)["model"])
    runs, best = fit_lambda_grid(train_set, tcfg, cfg.lambda_grid, hook)
    files = {}
    for r in runs:
        name = f"model_lambda_{r.lam:g}.json"
        save_model(r.model, out / name, lam=r.lam, w_phi=r.w_phi, phi=cfg.phi)
        files[name] = r.w_phi
    write_traces_csv([t for r in runs for t in r.traces], out / "traces.csv")
    selected = {
        "lambda": runs[best].lam,
        "model": f"model_lambda_{runs[best].lam:g}.json",
        "w_phi": files,
        "phi": cfg.phi,
        "rng_algorithm": RNG_ALGORITHM,
        "seed": cfg.seed,
    }
    (out / "selected.json").write_text(json.dumps(selected, indent=1, sort_keys=True) + "\n")
    print(f"selected lambda={runs[best].lam:g} (W_phi={runs[best].w_phi:.6g})")


def cmd_evaluate(args) -> None:
    cfg = _config(args)
    out = _outdir(args)
    model_path = Path(args.model)
    if model_path.is_dir():
        sel = json.loads((model_path / "selected.json").read_text())
        model_path = model_path / sel["model"]
    model = load_model(model_path)
    test = read_sample_csv(args.test)
    if test.labels is None:
        raise ValueError(f"{args.test}: test file has no label column; accuracy needs ground truth")
    grid = [int(k) for k in args.n_lowest.split(",")] if args.n_lowest else list(cfg.n_lowest_grid)
    ranked = stage2_rank(model, test, max(grid))
    rows = [(k, accuracy_at(ranked, test, k)) for k in grid]
    _csv.write_rows(out / "accuracy.csv", ["n_lowest", "acc"], rows)
    write_ranked_csv(ranked, test, out / "ranked.csv")
    for k, a in rows:
        print(f"Acc_{k} = {a:.4f}")


def cmd_reproduce(args) -> None:
    cfg = _config(args)
    out = _outdir(args)
    summ = reproduce(cfg, out, jobs=args.jobs)
    for t in summ["table"]:
        std = "NA" if t["std"] is None else f"{t['std']:.2f}"
        flag = "" if t["complete"] else " (incomplete)"
        print(f"n_lowest={t['n_lowest']:>4}  Acc = {t['mean']:.2f} +- {std}  (B={t['count']}){flag}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="anomrank", description="Anomaly ranking by two-sample rank statistics")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="experiment config JSON (defaults if omitted)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--jobs", type=int, default=1, help="parallel repetitions")

    sp = sub.add_parser("generate", help="write train/test CSVs")
    common(sp)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("train", help="train one network per lambda")
    common(sp)
    sp.add_argument("--train", required=True, help="labelled training CSV")
    sp.add_argument("--test", help="labelled test CSV for per-epoch Acc_75")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("evaluate", help="rank a test set and compute Acc_n_lowest")
    common(sp)
    sp.add_argument("--model", required=True, help="model JSON, or a train output directory")
    sp.add_argument("--test", required=True, help="labelled test CSV")
    sp.add_argument("--n-lowest", help="comma-separated grid, e.g. 25,50,75,100")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("reproduce", help="run the full experiment B times")
    common(sp)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
