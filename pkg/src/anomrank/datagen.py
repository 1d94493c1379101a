"""Seeded samplers for the normal, reference and synthetic-outlier laws.

All samplers take either an integer seed or a ready ``numpy.random.Generator``.
Integer seeds go through ``PCG64`` seeded by ``SeedSequence`` (the identifier
``RNG_ALGORITHM`` is echoed into every results file).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import _csv
from .errors import ParameterError, ParseError

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"

SeedLike = Union[int, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def split_seed(seed: int, index: int) -> int:
    """Derive the seed of repetition ``index`` from a run seed.

    Mixing is SeedSequence's hash with ``spawn_key=(index,)``, so nearby run
    seeds and nearby indices give unrelated streams.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class Sample:
    """Points in R^d with optional labels (1 = normal, 0 = synthetic outlier)."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise ParameterError(f"points must be an (n, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ParameterError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.labels is not None:
            lab = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
            if lab.shape[0] != pts.shape[0]:
                raise ParameterError(
                    f"{lab.shape[0]} labels for {pts.shape[0]} points"
                )
            if np.any((lab != 0) & (lab != 1)):
                raise ParameterError("labels must be 0 or 1")
            lab.setflags(write=False)
            object.__setattr__(self, "labels", lab)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def with_labels(self, labels) -> "Sample":
        return Sample(self.points, labels)

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        if not np.array_equal(self.points, other.points):
            return False
        if self.labels is None or other.labels is None:
            return self.labels is None and other.labels is None
        return np.array_equal(self.labels, other.labels)


@dataclass(frozen=True)
class RadLawParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ParameterError(f"RadLaw needs alpha, beta > 0, got {self.alpha}, {self.beta}")


def _check_counts(n, d):
    if int(n) != n or n < 1:
        raise ParameterError(f"sample size must be a positive integer, got {n}")
    if int(d) != d or d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d}")


def sample_gaussian(n: int, d: int, variance_scale: float, seed: SeedLike) -> Sample:
    """n draws from N(0, variance_scale * I_d)."""
    _check_counts(n, d)
    if not variance_scale > 0:
        raise ParameterError(f"variance_scale must be > 0, got {variance_scale}")
    rng = make_rng(seed)
    return Sample(np.sqrt(variance_scale) * rng.standard_normal((int(n), int(d))))


def sample_uniform_cube(m: int, d: int, seed: SeedLike) -> Sample:
    _check_counts(m, d)
    rng = make_rng(seed)
    return Sample(rng.random((int(m), int(d))))


def sample_unit_sphere(m: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform directions on S^{d-1} by normalising standard Gaussian vectors."""
    v = rng.standard_normal((m, d))
    norms = np.linalg.norm(v, axis=1)
    # zero vector has probability 0 but guard it anyway
    while np.any(norms == 0):
        bad = norms == 0
        v[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(v, axis=1)
    return v / norms[:, None]


def sample_beta(m: int, alpha: float, beta: float, rng: np.random.Generator) -> np.ndarray:
    """Beta(alpha, beta) as G1 / (G1 + G2) with independent Gamma variates."""
    g1 = rng.standard_gamma(alpha, m)
    g2 = rng.standard_gamma(beta, m)
    return g1 / (g1 + g2)


def sample_radlaw(m: int, d: int, params: RadLawParams, seed: SeedLike) -> Sample:
    """Uniform direction times a Beta(alpha, beta) radius; norms lie in [0, 1]."""
    _check_counts(m, d)
    rng = make_rng(seed)
    v = sample_unit_sphere(int(m), int(d), rng)
    r = sample_beta(int(m), params.alpha, params.beta, rng)
    return Sample(v * r[:, None])


def compute_rad(sample: Sample) -> float:
    if len(sample) == 0:
        raise ParameterError("empty sample")
    return float(np.max(np.linalg.norm(sample.points, axis=1)))


def dilate(sample: Sample, factor: float) -> Sample:
    if not factor > 0:
        raise ParameterError(f"dilation factor must be > 0, got {factor}")
    return Sample(sample.points * factor, sample.labels)


def make_train_set(normals: Sample, outliers: Sample) -> Sample:
    """Concatenate normals (label 1) then outliers (label 0)."""
    if normals.dim != outliers.dim:
        raise ParameterError(f"dimension mismatch: {normals.dim} vs {outliers.dim}")
    pts = np.vstack([normals.points, outliers.points])
    labels = np.concatenate([np.ones(len(normals), np.int64), np.zeros(len(outliers), np.int64)])
    return Sample(pts, labels)


def write_sample_csv(sample: Sample, path) -> None:
    header = [f"x{j}" for j in range(sample.dim)]
    if sample.labels is not None:
        header.append("label")
        rows = (list(p) + [int(l)] for p, l in zip(sample.points, sample.labels))
    else:
        rows = (list(p) for p in sample.points)
    _csv.write_rows(path, header, rows)


def read_sample_csv(path) -> Sample:
    header, rows = _csv.read_rows(path)
    has_label = header[-1] == "label"
    coords = header[:-1] if has_label else header
    if not coords or coords != [f"x{j}" for j in range(len(coords))]:
        raise ParseError(f"{path}:1: expected header x0,...,x{{d-1}}[,label], got {header}")
    if not rows:
        raise ParseError(f"{path}: no data rows")
    d = len(coords)
    pts = np.empty((len(rows), d))
    labels = np.empty(len(rows), np.int64) if has_label else None
    for k, (line, fields) in enumerate(rows):
        for j in range(d):
            pts[k, j] = _csv.parse_float(path, line, fields[j])
        if has_label:
            if fields[-1] not in ("0", "1"):
                raise ParseError(f"{path}:{line}: label must be 0 or 1, got {fields[-1]!r}")
            labels[k] = int(fields[-1])
    if not np.all(np.isfinite(pts)):
        raise ParseError(f"{Path(path)}: non-finite coordinate")
    return Sample(pts, labels)
