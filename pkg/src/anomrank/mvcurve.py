"""Mass-Volume curves: Monte-Carlo estimation, areas, and their links with
two-sample rank statistics.

An empirical curve built from ``n`` normal scores and ``m`` reference scores
is a right-continuous step function. Its value on ``[(k-1)/n, k/n)`` is the
fraction of reference scores at or above the k-th largest normal score,
times the volume of the region the reference points were drawn from.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import _csv
from .datagen import SeedLike, make_rng
from .errors import DomainError, ParameterError, TieError
from .rankstats import ScoredPair, rank_sum
from .scoregen import ScoreGen, phi_antiderivative

EMPIRICAL = "empirical-mc"
ANALYTIC = "analytic"


@dataclass(frozen=True, eq=False)
class MVCurve:
    """Breakpoints ``(alphas[k], volumes[k])``.

    For ``kind == EMPIRICAL`` the curve is constant on
    ``[alphas[k], alphas[k+1])`` (last piece ends at 1) and ``counts`` holds
    the integer reference counts, ``volumes = volume_scale * counts / m``.
    For ``kind == ANALYTIC`` the curve is linear between breakpoints.
    """

    alphas: np.ndarray
    volumes: np.ndarray
    kind: str = EMPIRICAL
    counts: Optional[np.ndarray] = None
    m: Optional[int] = None
    volume_scale: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        v = np.asarray(self.volumes, dtype=float)
        if a.ndim != 1 or a.shape != v.shape or a.size == 0:
            raise ParameterError("alphas and volumes must be equal-length 1-d arrays")
        if np.any(np.diff(a) <= 0):
            raise ParameterError("alphas must be strictly increasing")
        if a[0] < 0 or a[-1] > 1:
            raise ParameterError("alphas must lie in [0, 1]")
        if np.any(v < 0) or np.any(np.diff(v) < 0):
            raise ParameterError("volumes must be nonnegative and nondecreasing")
        if self.kind not in (EMPIRICAL, ANALYTIC):
            raise ParameterError(f"unknown curve kind {self.kind!r}")
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "volumes", v)

    def __call__(self, alpha):
        alpha = np.asarray(alpha, dtype=float)
        if self.kind == EMPIRICAL:
            idx = np.searchsorted(self.alphas, alpha, side="right") - 1
            out = self.volumes[np.clip(idx, 0, self.alphas.size - 1)]
        else:
            out = np.interp(alpha, self.alphas, self.volumes)
        return float(out) if out.ndim == 0 else out


def empirical_cdf_inverse(scores, u: float) -> float:
    """inf{t : F_n(t) >= u}, i.e. the ceil(u n)-th order statistic."""
    s = np.sort(np.asarray(scores, dtype=float).reshape(-1))
    if s.size == 0:
        raise ParameterError("empty score list")
    if not 0.0 < u <= 1.0:
        raise DomainError(f"u must lie in (0, 1], got {u}")
    # exact rational product avoids ceil(0.3 * 10) == 4
    k = math.ceil(Fraction(u) * s.size)
    return float(s[k - 1])


def mv_curve_mc(pair: ScoredPair, volume_scale: float = 1.0) -> MVCurve:
    """Monte-Carlo Mass-Volume curve; ``scores_u`` are scores of points drawn
    uniformly on a region of measure ``volume_scale``."""
    n, m = pair.n, pair.m
    desc = np.sort(pair.scores_x)[::-1]
    su = np.sort(pair.scores_u)
    counts = m - np.searchsorted(su, desc, side="left")
    alphas = np.arange(n) / n
    return MVCurve(
        alphas,
        volume_scale * counts / m,
        EMPIRICAL,
        counts=counts.astype(np.int64),
        m=m,
        volume_scale=float(volume_scale),
    )


def _standard_grid(a: np.ndarray) -> bool:
    return np.array_equal(a, np.arange(a.size) / a.size)


def auc_mv_exact(curve: MVCurve) -> Fraction:
    """Area under an empirical unit-volume curve as an exact fraction."""
    if curve.kind != EMPIRICAL or curve.counts is None or not _standard_grid(curve.alphas):
        raise ParameterError("exact area needs an empirical curve from mv_curve_mc")
    if curve.volume_scale != 1.0:
        raise ParameterError("exact area needs volume_scale == 1")
    # every piece has width 1/n
    return Fraction(int(np.sum(curve.counts)), curve.alphas.size * curve.m)


def auc_mv(curve: MVCurve) -> float:
    """Integral of the curve over (0, 1); the curve is held flat outside
    its breakpoint range."""
    a, v = curve.alphas, curve.volumes
    if curve.kind == EMPIRICAL:
        if curve.counts is not None and _standard_grid(a):
            exact = Fraction(int(np.sum(curve.counts)), a.size * curve.m)
            return float(exact) * curve.volume_scale
        widths = np.diff(np.append(a, 1.0))
        return float(v[0] * a[0] + np.dot(widths, v))
    inner = float(np.sum(np.diff(a) * 0.5 * (v[1:] + v[:-1])))
    return inner + float(v[0] * a[0] + v[-1] * (1.0 - a[-1]))


def _pieces(curve: MVCurve):
    """Cover [0, 1] by pieces ``[lo, hi)`` on which MV(a) = start + slope (a - lo)."""
    a, v = curve.alphas, curve.volumes
    hi = np.append(a[1:], 1.0)
    if curve.kind == EMPIRICAL:
        slopes = np.zeros_like(v)
    else:
        slopes = np.append(np.diff(v) / np.diff(a), 0.0)
    lo, start = a, v
    if a[0] > 0:
        lo = np.append(0.0, lo)
        hi = np.append(a[0], hi)
        start = np.append(v[0], start)
        slopes = np.append(0.0, slopes)
    return lo, hi, start, slopes


def check_mv_ranksum_identity(pair: ScoredPair) -> bool:
    """nm(1 - area under the MC curve) + n(n+1)/2 == rank sum, exactly."""
    if pair.has_ties():
        raise TieError("identity only holds for distinct pooled scores")
    n, m = pair.n, pair.m
    area = auc_mv_exact(mv_curve_mc(pair))
    lhs = n * m * (1 - area) + Fraction(n * (n + 1), 2)
    return lhs == rank_sum(pair)


def w_phi_from_mv(phi: ScoreGen, curve: MVCurve, p: float) -> float:
    """integral_0^1 phi(1 - p a - (1 - p) MV(a)) da for a unit-volume curve.

    On every piece the argument is affine in ``a``, so each piece integrates
    in closed form through a primitive of phi.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p}")
    if np.any(curve.volumes > 1.0):
        raise DomainError("curve volumes must be measured on the unit cube (<= 1)")
    lo, hi, start, slopes = _pieces(curve)
    # argument g(a) = c0 - c1 a on each piece, decreasing since c1 >= p > 0
    c1 = p + (1.0 - p) * slopes
    c0 = 1.0 - (1.0 - p) * (start - slopes * lo)
    g_lo = np.clip(c0 - c1 * lo, 0.0, 1.0)
    g_hi = np.clip(c0 - c1 * hi, 0.0, 1.0)
    prim = np.asarray(phi_antiderivative(phi, g_lo)) - np.asarray(phi_antiderivative(phi, g_hi))
    return float(np.sum(prim / c1))


def mv_star_gaussian(alpha: float, variance_scale: float, d: int = 2) -> float:
    """Optimal Mass-Volume value for N(0, variance_scale I_2): the area of the
    centred disc of mass alpha."""
    if d != 2:
        raise ParameterError("the analytic optimal curve is only available for d = 2")
    if not 0.0 <= alpha < 1.0:
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    if not variance_scale > 0:
        raise ParameterError("variance_scale must be > 0")
    return float(-2.0 * math.pi * variance_scale * math.log1p(-alpha))


def mv_star_curve(variance_scale: float, grid_size: int = 4000) -> MVCurve:
    """Piecewise-linear sampling of the optimal Gaussian curve.

    Half the grid is uniform on [0, 0.99], the other half geometric towards 1
    (down to 1 - 1e-9) where the curve diverges logarithmically.
    """
    half = grid_size // 2
    alphas = np.unique(np.concatenate([
        np.linspace(0.0, 0.99, half, endpoint=False),
        1.0 - np.logspace(-2, -9, grid_size - half),
    ]))
    vols = np.array([mv_star_gaussian(a, variance_scale) for a in alphas])
    return MVCurve(alphas, vols, ANALYTIC)


def d1_distance(curve: MVCurve, star: MVCurve) -> float:
    """L1 gap between a curve and the optimal one, i.e. the difference of areas."""
    gap = auc_mv(curve) - auc_mv(star)
    if gap < 0:
        warnings.warn(f"negative area gap {gap:.3g} clamped to 0 (Monte-Carlo noise)", stacklevel=2)
        return 0.0
    return gap


def bounding_box(points, pad: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=float)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    return lo - pad * span, hi + pad * span


def mv_curve_in_box(
    score_fn: Callable[[np.ndarray], np.ndarray],
    normals: np.ndarray,
    lo,
    hi,
    m: int,
    seed: SeedLike,
) -> MVCurve:
    """MC curve for a scorer whose normals live in the box ``[lo, hi]``.

    Reference points are drawn uniformly on the unit cube and mapped affinely
    onto the box; volumes are reported in the box's own units.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise ParameterError("box must have positive extent in every coordinate")
    rng = make_rng(seed)
    ref = lo + (hi - lo) * rng.random((int(m), lo.size))
    pair = ScoredPair(score_fn(np.asarray(normals, dtype=float)), score_fn(ref))
    return mv_curve_mc(pair, volume_scale=float(np.prod(hi - lo)))


def write_curve_csv(curve: MVCurve, path, dense_path=None, dense_points: int = 200) -> None:
    _csv.write_rows(path, ["alpha", "volume"], zip(curve.alphas, curve.volumes))
    if dense_path is not None:
        grid = (np.arange(dense_points) + 0.5) / dense_points
        _csv.write_rows(dense_path, ["alpha", "volume"], zip(grid, curve(grid)))
