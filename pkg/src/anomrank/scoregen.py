"""Score-generating functions phi: [0, 1] -> R used to weight normalised ranks.

Every function here accepts scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, xlogy

from .errors import DomainError, ParameterError

KINDS = ("mww", "logistic", "logrank", "median", "vdw", "trunc")
_DIVERGENT = ("logrank", "vdw")

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_TWO_SQRT3 = 2.0 * math.sqrt(3.0)


@dataclass(frozen=True)
class ScoreGen:
    kind: str
    u0: float | None = None
    clip_eps: float = 1e-12

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown score-generating function {self.kind!r}")
        if self.kind == "trunc":
            if self.u0 is None or not 0.0 < self.u0 < 1.0:
                raise ParameterError(f"truncation point must lie in (0, 1), got {self.u0}")
        elif self.u0 is not None:
            raise ParameterError("u0 only applies to the truncated variant")
        if not 0.0 < self.clip_eps < 0.5:
            raise ParameterError(f"clip_eps must lie in (0, 1/2), got {self.clip_eps}")

    def __str__(self):
        return f"trunc:{self.u0!r}" if self.kind == "trunc" else self.kind

    def __call__(self, u):
        return eval_phi(self, u)


MWW = ScoreGen("mww")
LOGISTIC = ScoreGen("logistic")
LOGRANK = ScoreGen("logrank")
MEDIAN = ScoreGen("median")
VDW = ScoreGen("vdw")


def truncated(u0: float = 0.7) -> ScoreGen:
    return ScoreGen("trunc", u0=u0)


def parse_phi(text: str) -> ScoreGen:
    """Parse ``mww | logistic | logrank | median | vdw | trunc:<u0>``."""
    text = text.strip().lower()
    if text.startswith("trunc"):
        _, sep, rest = text.partition(":")
        if not sep:
            raise ParameterError("truncated variant needs a threshold, e.g. 'trunc:0.7'")
        try:
            u0 = float(rest)
        except ValueError:
            raise ParameterError(f"bad truncation threshold {rest!r}") from None
        return ScoreGen("trunc", u0=u0)
    return ScoreGen(text)


def _as_unit(u):
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("phi is defined on [0, 1]")
    return arr


def _ret(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def eval_phi(phi: ScoreGen, u):
    """Evaluate phi(u); logrank and vdw are evaluated at u clipped to
    [clip_eps, 1 - clip_eps]."""
    x = _as_unit(u)
    k = phi.kind
    if k in _DIVERGENT:
        x = np.clip(x, phi.clip_eps, 1.0 - phi.clip_eps)
    if k == "mww":
        out = x.copy()
    elif k == "logistic":
        out = _TWO_SQRT3 * (x - 0.5)
    elif k == "logrank":
        out = -np.log1p(-x)
    elif k == "median":
        out = np.sign(x - 0.5)
    elif k == "vdw":
        out = np.asarray(normal_quantile(x), dtype=float)
    else:
        out = np.where(x >= phi.u0, x, 0.0)
    return _ret(out, u)


def phi_derivative(phi: ScoreGen, u):
    """Derivative of phi, with 0 at the jumps of the median and truncated kinds."""
    x = _as_unit(u)
    k = phi.kind
    if k in _DIVERGENT:
        x = np.clip(x, phi.clip_eps, 1.0 - phi.clip_eps)
    if k == "mww":
        out = np.ones_like(x)
    elif k == "logistic":
        out = np.full_like(x, _TWO_SQRT3)
    elif k == "logrank":
        out = 1.0 / (1.0 - x)
    elif k == "median":
        out = np.zeros_like(x)
    elif k == "vdw":
        z = np.asarray(normal_quantile(x), dtype=float)
        out = _SQRT2PI * np.exp(0.5 * z * z)
    else:
        out = np.where(x > phi.u0, 1.0, 0.0)
    return _ret(out, u)


def phi_antiderivative(phi: ScoreGen, u):
    """A primitive of phi on [0, 1] (exact at the endpoints, no clipping)."""
    x = _as_unit(u)
    k = phi.kind
    if k == "mww":
        out = 0.5 * x * x
    elif k == "logistic":
        out = 0.5 * _TWO_SQRT3 * (x * x - x)
    elif k == "logrank":
        out = xlogy(1.0 - x, 1.0 - x) + x
    elif k == "median":
        out = np.abs(x - 0.5)
    elif k == "vdw":
        # d/du [-pdf(quantile(u))] = quantile(u)
        inner = (x > 0.0) & (x < 1.0)
        z = np.asarray(normal_quantile(np.where(inner, x, 0.5)), dtype=float)
        out = np.where(inner, -np.exp(-0.5 * z * z) / _SQRT2PI, 0.0)
    else:
        out = np.where(x >= phi.u0, 0.5 * (x * x - phi.u0 * phi.u0), 0.0)
    return _ret(out, u)


def is_nondecreasing(phi, grid_size: int, tol: float = 1e-12) -> bool:
    """Check monotonicity of ``phi`` (a ScoreGen or any vectorised callable)
    on a uniform grid of [0, 1]."""
    if grid_size < 2:
        raise ParameterError("grid_size must be at least 2")
    v = np.asarray(phi(np.linspace(0.0, 1.0, grid_size)))
    return bool(np.all(np.diff(v) >= -tol))


# Acklam's rational approximation, relative error about 1.15e-9 before refinement
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam_lower(p):
    """Approximate quantile for p in (0, 1/2]."""
    out = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        out[tail] = num / den
    mid = ~tail
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        out[mid] = num / den
    return out


def normal_cdf(x):
    x = np.asarray(x, dtype=float)
    out = 0.5 * erfc(-x / _SQRT2)
    return _ret(out, x)


def normal_quantile(u):
    """Inverse of the standard normal cdf on (0, 1).

    Acklam's approximation followed by one Halley step on the lower tail
    (the upper half is obtained by antisymmetry, so 1 - u is never formed
    from a rounded complement).
    """
    x = np.asarray(u, dtype=float)
    if np.any(np.isnan(x)) or np.any(x <= 0.0) or np.any(x >= 1.0):
        raise DomainError("normal quantile is defined on the open interval (0, 1)")
    upper = x > 0.5
    p = np.where(upper, 1.0 - x, x)
    z = _acklam_lower(np.atleast_1d(p)).reshape(p.shape)
    e = 0.5 * erfc(-z / _SQRT2) - p
    t = e * _SQRT2PI * np.exp(0.5 * z * z)
    z = z - t / (1.0 + 0.5 * z * t)
    z = np.where(upper, -z, z)
    return _ret(z, u)
