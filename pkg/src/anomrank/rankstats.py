"""Two-sample linear rank statistics of scored normal vs reference samples."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, RankTieWarning
from .scoregen import ScoreGen, eval_phi, phi_derivative


@dataclass(frozen=True, eq=False)
class ScoredPair:
    """Scores of the normal sample (``scores_x``) and of the reference sample."""

    scores_x: np.ndarray
    scores_u: np.ndarray

    def __post_init__(self):
        sx = np.array(self.scores_x, dtype=float, copy=True).reshape(-1)
        su = np.array(self.scores_u, dtype=float, copy=True).reshape(-1)
        if sx.size < 1 or su.size < 1:
            raise ParameterError("both samples need at least one score")
        if np.any(np.isnan(sx)) or np.any(np.isnan(su)):
            raise DomainError("NaN score")
        if not (np.all(np.isfinite(sx)) and np.all(np.isfinite(su))):
            raise DomainError("scores must be finite")
        sx.setflags(write=False)
        su.setflags(write=False)
        object.__setattr__(self, "scores_x", sx)
        object.__setattr__(self, "scores_u", su)

    @property
    def n(self) -> int:
        return self.scores_x.size

    @property
    def m(self) -> int:
        return self.scores_u.size

    @property
    def N(self) -> int:
        return self.n + self.m

    @property
    def p(self) -> float:
        return self.n / self.N

    def has_ties(self) -> bool:
        pooled = np.concatenate([self.scores_x, self.scores_u])
        return np.unique(pooled).size < pooled.size


def ranks(pair: ScoredPair, warn_ties: bool = True) -> np.ndarray:
    """Rank of each normal score: how many pooled scores are <= it.

    Sorting the pooled sample once and bisecting (``side="right"``) counts
    exactly the <= relation, ties included, in O(N log N).
    """
    pooled = np.sort(np.concatenate([pair.scores_x, pair.scores_u]), kind="stable")
    if warn_ties and np.any(pooled[1:] == pooled[:-1]):
        warnings.warn(
            "pooled scores contain ties; <=-counting ranks are inflated",
            RankTieWarning,
            stacklevel=2,
        )
    return np.searchsorted(pooled, pair.scores_x, side="right").astype(np.int64)


def rank_sum(pair: ScoredPair) -> int:
    return int(sum(int(r) for r in ranks(pair)))


def w_phi_stat(phi: ScoreGen, pair: ScoredPair) -> float:
    """sum_i phi(Rank(s(X_i)) / (N + 1))."""
    if phi.kind == "mww":
        # integer sum first keeps this equal to rank_sum / (N + 1)
        return rank_sum(pair) / (pair.N + 1)
    r = ranks(pair)
    return float(np.sum(eval_phi(phi, r / (pair.N + 1))))


def _proxy_args(model_scores_x, n, m):
    s = np.asarray(model_scores_x, dtype=float).reshape(-1)
    if s.size != n:
        raise ParameterError(f"expected {n} normal scores, got {s.size}")
    if n < 1 or m < 1:
        raise ParameterError("proxy needs n >= 1 and m >= 1")
    if np.any(np.isnan(s)) or np.any(s <= 0.0) or np.any(s >= 1.0):
        raise DomainError("model scores must lie in the open interval (0, 1)")
    N = n + m
    return s, (N * s + 1.0) / (N + 1.0), N


def w_phi_proxy(phi: ScoreGen, model_scores_x, n: int, m: int) -> float:
    """Smooth stand-in for the rank statistic: the model score replaces the
    pooled empirical cdf, sum_i phi((N s_i + 1) / (N + 1))."""
    _, u, _ = _proxy_args(model_scores_x, n, m)
    return float(np.sum(eval_phi(phi, u)))


def w_phi_proxy_grad(phi: ScoreGen, model_scores_x, n: int, m: int) -> np.ndarray:
    """Gradient of ``w_phi_proxy`` with respect to each normal's model score."""
    _, u, N = _proxy_args(model_scores_x, n, m)
    return np.asarray(phi_derivative(phi, u)) * (N / (N + 1.0))
