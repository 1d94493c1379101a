"""Two-stage anomaly ranking.

Stage 1 learns a scorer that separates the normal sample from a synthetic
reference sample, keeping the lambda whose network has the highest rank
statistic on the training pool. Stage 2 scores a test sample and flags the
``n_lowest`` lowest-scored points.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import _csv
from .datagen import (
    RadLawParams,
    Sample,
    SeedLike,
    compute_rad,
    dilate,
    make_rng,
    make_train_set,
    sample_radlaw,
    sample_uniform_cube,
)
from .errors import ParameterError
from .model import EpochTrace, MlpScorer, TrainConfig, forward_batch, logits, train, train_rank_stat

Scorer = Union[MlpScorer, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class RankedTestSet:
    indices: np.ndarray  # test indices, lowest score first
    scores: np.ndarray  # ascending
    flagged: np.ndarray  # indices[:n_lowest]

    @property
    def n_lowest(self) -> int:
        return self.flagged.size


@dataclass
class LambdaRun:
    lam: float
    model: MlpScorer
    traces: list[EpochTrace]
    w_phi: float


def make_reference(
    normals: Sample,
    m: int,
    seed: SeedLike,
    generator: str = "radlaw",
    radlaw: RadLawParams = RadLawParams(3.0, 1.0),
    epsilon: float = 0.01,
) -> Sample:
    """Synthetic negatives: uniform on [0,1]^d, or RadLaw dilated by rad + epsilon."""
    if generator == "uniform":
        return sample_uniform_cube(m, normals.dim, seed)
    if generator == "radlaw":
        rad = compute_rad(normals)
        return dilate(sample_radlaw(m, normals.dim, radlaw, seed), rad + epsilon)
    raise ParameterError(f"unknown reference generator {generator!r}")


def fit_lambda_grid(
    train_set: Sample,
    cfg: TrainConfig,
    lambdas: Sequence[float],
    eval_hook: Optional[Callable[[MlpScorer], float]] = None,
) -> tuple[list[LambdaRun], int]:
    """Train one network per lambda (same seed for all) and return the runs with
    the index of the highest rank statistic (first one on ties)."""
    if len(lambdas) == 0:
        raise ParameterError("empty lambda grid")
    runs = []
    for lam in lambdas:
        model, traces = train(train_set, replace(cfg, lam=float(lam)), eval_hook)
        runs.append(LambdaRun(float(lam), model, traces, train_rank_stat(model, train_set, cfg.phi)))
    best = int(np.argmax([r.w_phi for r in runs]))
    return runs, best


def stage1_fit(
    normals: Sample,
    m: int,
    cfg: TrainConfig,
    seed: SeedLike,
    lambdas: Optional[Sequence[float]] = None,
    generator: str = "radlaw",
    radlaw: RadLawParams = RadLawParams(3.0, 1.0),
    epsilon: float = 0.01,
) -> MlpScorer:
    if len(normals) == 0:
        raise ParameterError("no normal observations")
    if normals.labels is not None and np.any(normals.labels != 1):
        raise ParameterError("stage 1 expects normal observations only")
    ref = make_reference(normals, m, make_rng(seed), generator, radlaw, epsilon)
    pool = make_train_set(Sample(normals.points), ref)
    runs, best = fit_lambda_grid(pool, cfg, [cfg.lam] if lambdas is None else lambdas)
    return runs[best].model


def score(scorer: Scorer, points) -> np.ndarray:
    if isinstance(scorer, MlpScorer):
        return forward_batch(scorer, points)
    return np.asarray(scorer(np.asarray(points, dtype=float)), dtype=float).reshape(-1)


def stage2_rank(scorer: Scorer, test: Sample, n_lowest: int) -> RankedTestSet:
    """Sort the test sample by ascending score, ties by original index."""
    if int(n_lowest) != n_lowest or not 1 <= n_lowest <= len(test):
        raise ParameterError(f"n_lowest must lie in [1, {len(test)}], got {n_lowest}")
    s = score(scorer, test.points)
    # an MLP is ordered by its logit so that saturated sigmoids do not tie
    key = logits(scorer, test.points) if isinstance(scorer, MlpScorer) else s
    order = np.argsort(key, kind="stable")
    return RankedTestSet(order, s[order], order[: int(n_lowest)])


def accuracy_at(ranked: RankedTestSet, test: Sample, n_lowest: Optional[int] = None) -> float:
    """Fraction of true outliers (label 0) among the ``n_lowest`` lowest-scored points."""
    if test.labels is None:
        raise ParameterError("accuracy needs a labelled test sample")
    k = ranked.n_lowest if n_lowest is None else int(n_lowest)
    if not 1 <= k <= ranked.indices.size:
        raise ParameterError(f"n_lowest must lie in [1, {ranked.indices.size}], got {k}")
    return float(np.mean(test.labels[ranked.indices[:k]] == 0))


def accuracy_hook(test: Sample, n_lowest: int = 75) -> Callable[[MlpScorer], float]:
    k = min(n_lowest, len(test))
    return lambda model: accuracy_at(stage2_rank(model, test, k), test)


def write_ranked_csv(ranked: RankedTestSet, test: Sample, path) -> None:
    flagged = np.zeros(ranked.indices.size, dtype=bool)
    flagged[: ranked.n_lowest] = True
    labels = test.labels if test.labels is not None else None
    rows = (
        (r + 1, int(i), float(s), bool(f), "" if labels is None else int(labels[i]))
        for r, (i, s, f) in enumerate(zip(ranked.indices, ranked.scores, flagged))
    )
    _csv.write_rows(path, ["rank", "test_index", "score", "is_flagged", "true_label"], rows)
