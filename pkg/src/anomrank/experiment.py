"""Experiment configuration, data generation and the repeated-run harness."""
from __future__ import annotations

import dataclasses
import json
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _csv
from .datagen import (
    RNG_ALGORITHM,
    RadLawParams,
    Sample,
    compute_rad,
    dilate,
    make_rng,
    make_train_set,
    sample_gaussian,
    sample_radlaw,
    split_seed,
)
from .errors import ParameterError, ParseError
from .model import TrainConfig, forward_batch, logits, mlp_new, write_traces_csv
from .mvcurve import auc_mv, bounding_box, mv_curve_in_box
from .procedure import accuracy_at, accuracy_hook, fit_lambda_grid, stage2_rank
from .scoregen import parse_phi

MV_GRID = (np.arange(200) + 0.5) / 200


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 1000
    m: int = 500
    d: int = 2
    variance_scale: float = 0.1
    alpha: float = 3.0
    beta: float = 1.0
    epsilon: float = 0.01
    n_t: int = 400
    m_t: int = 100
    alpha_t: float = 2.0
    beta_t: float = 1.0
    lambda_grid: tuple = (0.0, 0.01, 0.1, 1.0, 10.0)
    phi: str = "mww"
    epochs: int = 30
    n_lowest_grid: tuple = (25, 50, 75, 100)
    repetitions: int = 50
    seed: int = 0
    learning_rate: float = 0.05
    batch_learning_rate: float = 3e-4
    mv_reference_size: int = 10_000
    heatmap_resolution: int = 200

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        object.__setattr__(self, "n_lowest_grid", tuple(int(x) for x in self.n_lowest_grid))
        object.__setattr__(self, "phi", str(parse_phi(self.phi)))
        for name in ("n", "m", "d", "n_t", "m_t", "epochs", "repetitions",
                     "mv_reference_size", "heatmap_resolution"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ParameterError(f"{name} must be a positive integer, got {v!r}")
        for name in ("variance_scale", "alpha", "beta", "alpha_t", "beta_t",
                     "learning_rate", "batch_learning_rate"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be > 0")
        if not self.epsilon >= 0:
            raise ParameterError("epsilon must be >= 0")
        if not self.lambda_grid or any(not lam >= 0 for lam in self.lambda_grid):
            raise ParameterError("lambda_grid must be a nonempty list of nonnegative reals")
        if not self.n_lowest_grid or any(k < 1 or k > self.n_t + self.m_t for k in self.n_lowest_grid):
            raise ParameterError("n_lowest_grid entries must lie in [1, n_t + m_t]")
        if self.seed < 0 or self.seed >= 2**64:
            raise ParameterError("seed must be an unsigned 64-bit integer")

    def train_config(self, seed: int, lam: float = 0.0) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            lam=lam,
            phi=parse_phi(self.phi),
            learning_rate=self.learning_rate,
            batch_learning_rate=self.batch_learning_rate,
            seed=seed,
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["lambda_grid"] = list(self.lambda_grid)
        d["n_lowest_grid"] = list(self.n_lowest_grid)
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ParseError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    return ExperimentConfig.from_dict(doc)


def generate_data(cfg: ExperimentConfig, seed: int) -> tuple[Sample, Sample, float]:
    """Training pool (n Gaussians, m dilated RadLaw points) and labelled test set.

    Test outliers are dilated with the radius of the *training* normals.
    """
    rng = make_rng(seed)
    x = sample_gaussian(cfg.n, cfg.d, cfg.variance_scale, rng)
    rad = compute_rad(x)
    u = dilate(sample_radlaw(cfg.m, cfg.d, RadLawParams(cfg.alpha, cfg.beta), rng), rad + cfg.epsilon)
    xt = sample_gaussian(cfg.n_t, cfg.d, cfg.variance_scale, rng)
    ut = dilate(sample_radlaw(cfg.m_t, cfg.d, RadLawParams(cfg.alpha_t, cfg.beta_t), rng), rad + cfg.epsilon)
    return make_train_set(x, u), make_train_set(xt, ut), rad


def repetition_seeds(run_seed: int, rep: int) -> dict:
    s = split_seed(run_seed, rep)
    return {"rep": s, "data": split_seed(s, 0), "model": split_seed(s, 1), "mv": split_seed(s, 2)}


def run_repetition(cfg: ExperimentConfig, rep: int, details: bool = False) -> dict:
    """One full pass of the procedure. Returns a plain-dict record.

    With ``details`` the record also carries per-epoch traces and a score
    heatmap (used for the first repetition only).
    """
    seeds = repetition_seeds(cfg.seed, rep)
    train_set, test, rad = generate_data(cfg, seeds["data"])
    tcfg = cfg.train_config(seeds["model"])
    hook = accuracy_hook(test, 75) if details else None
    runs, best = fit_lambda_grid(train_set, tcfg, cfg.lambda_grid, hook)

    acc = {}
    for run in runs:
        ranked = stage2_rank(run.model, test, max(cfg.n_lowest_grid))
        acc[run.lam] = [accuracy_at(ranked, test, k) for k in cfg.n_lowest_grid]

    lo, hi = bounding_box(train_set.points)
    normals_t = test.points[test.labels == 1]
    selected = runs[best].model
    untrained = mlp_new(cfg.d, make_rng(seeds["model"]))
    curve = mv_curve_in_box(lambda p: logits(selected, p), normals_t, lo, hi,
                            cfg.mv_reference_size, seeds["mv"])
    curve0 = mv_curve_in_box(lambda p: logits(untrained, p), normals_t, lo, hi,
                             cfg.mv_reference_size, seeds["mv"])
    record = {
        "rep": rep,
        "seed": seeds["rep"],
        "rad": rad,
        "selected_lambda": runs[best].lam,
        "w_phi": {r.lam: r.w_phi for r in runs},
        "acc": acc,
        "mv_auc": auc_mv(curve),
        "mv_auc_untrained": auc_mv(curve0),
        "mv_curve": curve(MV_GRID),
        "error": None,
    }
    if details:
        record["traces"] = [t for r in runs for t in r.traces]
        record["heatmap"] = _heatmap(selected, lo, hi, cfg.heatmap_resolution) if cfg.d == 2 else None
    return record


def _heatmap(model, lo, hi, res):
    xs = np.linspace(lo[0], hi[0], res)
    ys = np.linspace(lo[1], hi[1], res)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    return pts, forward_batch(model, pts)


def _safe_repetition(cfg_doc: dict, rep: int) -> dict:
    cfg = ExperimentConfig.from_dict(cfg_doc)
    try:
        return run_repetition(cfg, rep, details=(rep == 0))
    except Exception as exc:  # recorded per repetition, summarised later
        return {"rep": rep, "error": f"{type(exc).__name__}: {exc}",
                "trace": traceback.format_exc()}


def run_repetitions(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    doc = cfg.to_dict()
    reps = range(cfg.repetitions)
    if jobs <= 1:
        records = [_safe_repetition(doc, r) for r in reps]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_safe_repetition, [doc] * cfg.repetitions, reps))
    return sorted(records, key=lambda r: r["rep"])


def _mean_std(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), None
    return float(v.mean()), (float(v.std(ddof=1)) if v.size > 1 else None)


def _na(x):
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else x


def summarize(cfg: ExperimentConfig, records: list[dict]) -> dict:
    ok = [r for r in records if r["error"] is None]
    B = cfg.repetitions
    table = []
    for j, k in enumerate(cfg.n_lowest_grid):
        mean, std = _mean_std([r["acc"][r["selected_lambda"]][j] for r in ok])
        table.append({"n_lowest": k, "mean": mean, "std": std, "count": len(ok), "complete": len(ok) == B})
    per_lambda = []
    for lam in cfg.lambda_grid:
        for j, k in enumerate(cfg.n_lowest_grid):
            mean, std = _mean_std([r["acc"][lam][j] for r in ok])
            per_lambda.append({"lambda": lam, "n_lowest": k, "mean": mean, "std": std,
                               "count": len(ok), "complete": len(ok) == B})
    curves = np.array([r["mv_curve"] for r in ok]) if ok else np.empty((0, MV_GRID.size))
    return {"table": table, "per_lambda": per_lambda, "curves": curves, "ok": ok}


def write_outputs(cfg: ExperimentConfig, records: list[dict], out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summ = summarize(cfg, records)
    (out / "config.json").write_text(cfg.to_json())
    meta = {"rng_algorithm": RNG_ALGORITHM, "repetitions": cfg.repetitions,
            "completed": len(summ["ok"]),
            "failed": {r["rep"]: r["error"] for r in records if r["error"] is not None}}
    (out / "run.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")

    _csv.write_rows(out / "summary.csv", ["n_lowest", "mean", "std", "count", "complete"],
                    ((t["n_lowest"], _na(t["mean"]), _na(t["std"]), t["count"], t["complete"])
                     for t in summ["table"]))
    _csv.write_rows(out / "lambda_summary.csv", ["lambda", "n_lowest", "mean", "std", "count", "complete"],
                    ((t["lambda"], t["n_lowest"], _na(t["mean"]), _na(t["std"]), t["count"], t["complete"])
                     for t in summ["per_lambda"]))

    header = ["rep", "seed", "status", "selected_lambda", "mv_auc", "mv_auc_untrained"]
    header += [f"w_phi_lambda_{lam:g}" for lam in cfg.lambda_grid]
    header += [f"acc_lambda_{lam:g}_n{k}" for lam in cfg.lambda_grid for k in cfg.n_lowest_grid]
    rows = []
    for r in records:
        if r["error"] is not None:
            rows.append([r["rep"], "", "failed"] + [""] * (len(header) - 3))
            continue
        row = [r["rep"], r["seed"], "ok", r["selected_lambda"], r["mv_auc"], r["mv_auc_untrained"]]
        row += [r["w_phi"][lam] for lam in cfg.lambda_grid]
        row += [a for lam in cfg.lambda_grid for a in r["acc"][lam]]
        rows.append(row)
    _csv.write_rows(out / "repetitions.csv", header, rows)

    curves = summ["curves"]
    if curves.shape[0]:
        mean = curves.mean(axis=0)
        std = curves.std(axis=0, ddof=1) if curves.shape[0] > 1 else [None] * MV_GRID.size
        _csv.write_rows(out / "mv_curve.csv", ["alpha", "mean_volume", "std_volume", "count"],
                        ((a, mu, _na(sd), curves.shape[0]) for a, mu, sd in zip(MV_GRID, mean, std)))

    first = next((r for r in summ["ok"] if "traces" in r), None)
    if first is not None:
        write_traces_csv(first["traces"], out / "traces.csv")
        if first.get("heatmap") is not None:
            pts, s = first["heatmap"]
            _csv.write_rows(out / "heatmap.csv", ["x0", "x1", "score"],
                            ((p[0], p[1], v) for p, v in zip(pts, s)))
    return summ


def reproduce(cfg: ExperimentConfig, out_dir, jobs: int = 1) -> dict:
    records = run_repetitions(cfg, jobs)
    return write_outputs(cfg, records, out_dir)
