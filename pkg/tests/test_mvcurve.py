import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from scipy import integrate

from anomrank.errors import DomainError, ParameterError, TieError
from anomrank.mvcurve import (
    ANALYTIC,
    MVCurve,
    auc_mv,
    auc_mv_exact,
    bounding_box,
    check_mv_ranksum_identity,
    d1_distance,
    empirical_cdf_inverse,
    mv_curve_in_box,
    mv_curve_mc,
    mv_star_curve,
    mv_star_gaussian,
    w_phi_from_mv,
    write_curve_csv,
)
from anomrank.rankstats import ScoredPair, rank_sum
from anomrank.scoregen import LOGISTIC, LOGRANK, MEDIAN, MWW, VDW, eval_phi, truncated
from anomrank._csv import read_rows


def const_curve(v, n=4, m=4):
    return MVCurve(np.arange(n) / n, np.full(n, float(v)), counts=np.full(n, int(v * m)), m=m)


def brute_mv(sx, su, alpha):
    """Fraction of reference scores >= the ceil((1 - alpha) n)-th smallest normal score."""
    s = np.sort(sx)
    t = s[math.ceil((1 - Fraction(alpha)) * len(s)) - 1]
    return np.mean(np.asarray(su) >= t)


def test_cdf_inverse_examples():
    assert empirical_cdf_inverse([0.5, 0.9], 0.5) == 0.5
    assert empirical_cdf_inverse([0.5, 0.9], 0.75) == 0.9
    assert empirical_cdf_inverse([3.0, -1.0, 2.0], 1.0) == 3.0
    assert empirical_cdf_inverse(np.arange(10.0), 0.3) == 2.0
    for bad in (0.0, 1.5):
        with pytest.raises(DomainError):
            empirical_cdf_inverse([1.0], bad)


def test_mc_curve_examples():
    c = mv_curve_mc(ScoredPair([0.5, 0.9], [0.1, 0.3]))
    assert np.all(c.volumes == 0) and auc_mv(c) == 0
    c = mv_curve_mc(ScoredPair([0.5, 0.9], [1.0, 2.0]))
    assert np.all(c.volumes == 1) and auc_mv(c) == 1
    c = mv_curve_mc(ScoredPair([0.5], [0.7]))
    assert c(0.0) == 1 and c(0.99) == 1


def test_mc_curve_matches_definition():
    rng = np.random.default_rng(0)
    for _ in range(50):
        n, m = rng.integers(1, 30, size=2)
        sx, su = rng.standard_normal(n), rng.standard_normal(m)
        c = mv_curve_mc(ScoredPair(sx, su))
        assert np.all(np.diff(c.volumes) >= 0)
        assert np.allclose(c.volumes * m, np.round(c.volumes * m))
        for alpha in rng.uniform(0, 1, 10):
            assert c(alpha) == pytest.approx(brute_mv(sx, su, alpha), abs=1e-15)


def test_area_examples_and_identity():
    pair = ScoredPair([0.9, 0.5], [0.1, 0.3])
    assert auc_mv_exact(mv_curve_mc(pair)) == 0
    assert check_mv_ranksum_identity(pair)
    sep = ScoredPair([5.0, 6.0, 7.0], [1.0, 2.0])
    assert rank_sum(sep) == 12 and check_mv_ranksum_identity(sep)


def test_identity_sweep():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n, m = rng.integers(1, 51, size=2)
        pooled = rng.permutation(rng.standard_normal(n + m))
        assert check_mv_ranksum_identity(ScoredPair(pooled[:n], pooled[n:]))


def test_identity_rejects_ties():
    with pytest.raises(TieError):
        check_mv_ranksum_identity(ScoredPair([1.0, 2.0], [2.0]))


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=30, unique=True),
       st.data())
def test_monotone_invariance(pooled, data):
    k = data.draw(st.integers(1, len(pooled) - 1))
    x, u = np.array(pooled[:k]), np.array(pooled[k:])
    a = mv_curve_mc(ScoredPair(x, u))
    t = ScoredPair(np.exp(x / 5), np.exp(u / 5))
    assume(not t.has_ties())
    b = mv_curve_mc(t)
    assert np.array_equal(a.counts, b.counts)


def test_curve_validation():
    with pytest.raises(ParameterError):
        MVCurve([0.0, 0.5], [0.5, 0.2])
    with pytest.raises(ParameterError):
        MVCurve([0.5, 0.2], [0.0, 0.1])
    with pytest.raises(ParameterError):
        MVCurve([0.0], [0.0], kind="bogus")


def test_analytic_area():
    c = MVCurve([0.0, 1.0], [0.0, 1.0], ANALYTIC)
    assert auc_mv(c) == pytest.approx(0.5)


def test_w_phi_from_mv_examples():
    zero, one = const_curve(0), const_curve(1)
    assert w_phi_from_mv(MWW, zero, 0.5) == pytest.approx(0.75, abs=1e-14)
    for p in (0.1, 0.5, 0.9):
        assert w_phi_from_mv(MWW, one, p) == pytest.approx(p / 2, abs=1e-14)
    assert w_phi_from_mv(MEDIAN, zero, 0.5) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(DomainError):
        w_phi_from_mv(MWW, zero, 1.0)
    with pytest.raises(DomainError):
        w_phi_from_mv(MWW, MVCurve([0.0], [2.0]), 0.5)


def test_mww_area_relation():
    # integral of 1 - p a - (1 - p) MV(a) = p/2 + (1 - p)(1 - area)
    rng = np.random.default_rng(2)
    for _ in range(20):
        c = mv_curve_mc(ScoredPair(rng.standard_normal(15), rng.standard_normal(25)))
        p = rng.uniform(0.05, 0.95)
        assert w_phi_from_mv(MWW, c, p) == pytest.approx(p / 2 + (1 - p) * (1 - auc_mv(c)), abs=1e-13)


@pytest.mark.parametrize("phi", [MWW, LOGISTIC, LOGRANK, MEDIAN, VDW, truncated(0.7)], ids=str)
def test_w_phi_from_mv_against_quadrature(phi):
    rng = np.random.default_rng(3)
    c = mv_curve_mc(ScoredPair(rng.standard_normal(12), rng.standard_normal(40)))
    p = 0.4
    integrand = lambda a: eval_phi(phi, min(max(1 - p * a - (1 - p) * c(a), 0.0), 1.0))
    edges = list(c.alphas) + [1.0]
    ref = sum(integrate.quad(integrand, lo, hi, epsabs=1e-12, epsrel=1e-10, limit=200)[0]
              for lo, hi in zip(edges[:-1], edges[1:]))
    assert w_phi_from_mv(phi, c, p) == pytest.approx(ref, rel=1e-8, abs=1e-9)


def test_w_phi_from_analytic_curve_against_quadrature():
    c = MVCurve(np.linspace(0, 1, 11), np.linspace(0, 1, 11) ** 2, ANALYTIC)
    p = 0.3
    for phi in (MWW, LOGISTIC, LOGRANK, VDW):
        integrand = lambda a: eval_phi(phi, 1 - p * a - (1 - p) * c(a))
        ref = integrate.quad(integrand, 0, 1, epsabs=1e-12, limit=200)[0]
        assert w_phi_from_mv(phi, c, p) == pytest.approx(ref, abs=1e-8)


def test_mv_star_examples():
    assert mv_star_gaussian(0.5, 0.1) == pytest.approx(0.2 * math.pi * math.log(2), rel=1e-14)
    assert mv_star_gaussian(0.5, 0.1) == pytest.approx(0.435517, abs=1e-6)
    assert mv_star_gaussian(1 - math.exp(-1), 0.1) == pytest.approx(0.2 * math.pi, rel=1e-14)
    assert mv_star_gaussian(1e-15, 0.1) < 1e-14
    with pytest.raises(ParameterError):
        mv_star_gaussian(0.5, 0.1, d=3)


def test_mv_star_monte_carlo():
    # mass of the disc of area mv_star(alpha) must be alpha
    rng = np.random.default_rng(4)
    var = 0.1
    x = rng.normal(scale=math.sqrt(var), size=(200_000, 2))
    r2 = np.sum(x**2, axis=1)
    for alpha in (0.1, 0.5, 0.9):
        radius2 = mv_star_gaussian(alpha, var) / math.pi
        se = math.sqrt(alpha * (1 - alpha) / x.shape[0])
        assert abs(np.mean(r2 <= radius2) - alpha) < 4 * se


def test_mv_star_curve_area():
    # integral of -2 pi var log(1 - a) over (0, 1) is 2 pi var
    assert auc_mv(mv_star_curve(0.1)) == pytest.approx(0.2 * math.pi, rel=1e-3)


def test_d1():
    c = const_curve(1)
    assert d1_distance(c, c) == 0
    assert d1_distance(c, const_curve(0)) == 1
    with pytest.warns(UserWarning):
        assert d1_distance(const_curve(0), c) == 0.0


def test_density_scorer_close_to_star():
    rng = np.random.default_rng(5)
    n = m = 10_000
    var = 0.1
    x = rng.normal(scale=math.sqrt(var), size=(n, 2))
    lo, hi = bounding_box(x)
    dens = lambda z: -np.sum(z**2, axis=1)
    c = mv_curve_in_box(dens, x, lo, hi, m, seed=6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert d1_distance(c, mv_star_curve(var)) < 0.05


def test_curve_in_box_volume_scale():
    x = np.array([[0.0, 0.0], [2.0, 3.0]])
    lo, hi = bounding_box(x)
    c = mv_curve_in_box(lambda z: -np.abs(z[:, 0]), x, lo, hi, 100, seed=0)
    assert c.volume_scale == 6.0
    assert c.volumes.max() <= 6.0
    with pytest.raises(ParameterError):
        mv_curve_in_box(lambda z: z[:, 0], x, lo, lo, 10, seed=0)


def test_write_curve_csv(tmp_path):
    c = mv_curve_mc(ScoredPair([0.2, 0.6, 0.9], [0.1, 0.5, 0.7, 0.95]))
    write_curve_csv(c, tmp_path / "c.csv", tmp_path / "d.csv")
    header, rows = read_rows(tmp_path / "c.csv")
    assert header == ["alpha", "volume"] and len(rows) == 3
    header, rows = read_rows(tmp_path / "d.csv")
    assert len(rows) == 200
    for _, (a, v) in rows:
        assert float(v) == c(float(a))
