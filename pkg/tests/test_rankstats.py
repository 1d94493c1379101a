import warnings

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from anomrank.errors import DomainError, ParameterError, RankTieWarning
from anomrank.rankstats import (
    ScoredPair,
    rank_sum,
    ranks,
    w_phi_proxy,
    w_phi_proxy_grad,
    w_phi_stat,
)
from anomrank.scoregen import LOGISTIC, LOGRANK, MEDIAN, MWW, VDW, eval_phi, truncated


def brute_ranks(sx, su):
    pooled = list(sx) + list(su)
    return [sum(1 for v in pooled if v <= s) for s in sx]


def distinct_pair(rng, n, m):
    pooled = rng.permutation(rng.standard_normal(n + m))
    return pooled[:n], pooled[n:]


@st.composite
def distinct_pairs(draw):
    pooled = draw(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=60, unique=True))
    k = draw(st.integers(1, len(pooled) - 1))
    return ScoredPair(pooled[:k], pooled[k:])


def test_rank_examples():
    pair = ScoredPair([0.9, 0.5], [0.1, 0.3])
    assert list(ranks(pair)) == [4, 3]
    assert rank_sum(pair) == 7
    assert list(ranks(ScoredPair([2.0], [1.0]))) == [2]
    assert rank_sum(ScoredPair([0.0], [1.0])) == 1


def test_rank_rejects_bad_pairs():
    with pytest.raises(DomainError):
        ScoredPair([np.nan], [0.0])
    with pytest.raises(DomainError):
        ScoredPair([np.inf], [0.0])
    with pytest.raises(ParameterError):
        ScoredPair([1.0], [])


def test_ranks_match_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n, m = rng.integers(1, 51, size=2)
        sx, su = distinct_pair(rng, n, m)
        assert list(ranks(ScoredPair(sx, su))) == brute_ranks(sx, su)


def test_ranks_match_brute_force_with_ties():
    rng = np.random.default_rng(1)
    for _ in range(200):
        n, m = rng.integers(1, 20, size=2)
        sx, su = rng.integers(0, 5, size=n).astype(float), rng.integers(0, 5, size=m).astype(float)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankTieWarning)
            assert list(ranks(ScoredPair(sx, su))) == brute_ranks(sx, su)


def test_tie_warning():
    with pytest.warns(RankTieWarning):
        r = ranks(ScoredPair([0.5], [0.5]))
    # both tied values count under the <= rule
    assert list(r) == [2]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ranks(ScoredPair([0.5], [0.4]))


@pytest.mark.parametrize("n,m", [(1, 1), (3, 5), (10, 10), (7, 2)])
def test_separated_ranks(n, m):
    rng = np.random.default_rng(n * 100 + m)
    sx = rng.uniform(2, 3, n)
    su = rng.uniform(0, 1, m)
    pair = ScoredPair(sx, su)
    assert sorted(ranks(pair)) == list(range(m + 1, n + m + 1))
    assert rank_sum(pair) == n * m + n * (n + 1) // 2 == sum(brute_ranks(sx, su))
    assert rank_sum(ScoredPair(-sx, su)) == n * (n + 1) // 2 == sum(brute_ranks(-sx, su))


def test_w_phi_examples():
    assert w_phi_stat(MWW, ScoredPair([0.9, 0.5], [0.1, 0.3])) == pytest.approx(1.4, abs=1e-15)
    assert w_phi_stat(MWW, ScoredPair([1.0], [0.0])) == pytest.approx(2 / 3, abs=1e-15)
    assert w_phi_stat(MEDIAN, ScoredPair([3.0, 4.0], [1.0, 2.0])) == 2.0


@given(distinct_pairs())
def test_mww_specialisation(pair):
    assert w_phi_stat(MWW, pair) == rank_sum(pair) / (pair.N + 1)


@given(distinct_pairs())
def test_rank_sum_range(pair):
    n, m = pair.n, pair.m
    assert n * (n + 1) // 2 <= rank_sum(pair) <= n * m + n * (n + 1) // 2
    assert np.all((ranks(pair) >= 1) & (ranks(pair) <= pair.N))
    assert len(set(ranks(pair))) == n


TRANSFORMS = {
    "exp": lambda x: np.exp(x / 50.0),
    "affine": lambda x: 3.0 * x - 7.0,
    "cubic": lambda x: x**3 + x,
}


@given(distinct_pairs(), st.sampled_from(sorted(TRANSFORMS)))
def test_monotone_invariance(pair, name):
    f = TRANSFORMS[name]
    t = ScoredPair(f(pair.scores_x), f(pair.scores_u))
    assume(not t.has_ties())
    assert np.array_equal(ranks(t), ranks(pair))
    assert rank_sum(t) == rank_sum(pair)
    for phi in (MWW, LOGISTIC, LOGRANK, VDW, truncated(0.7)):
        assert w_phi_stat(phi, t) == w_phi_stat(phi, pair)


def test_w_phi_stat_matches_direct_sum():
    rng = np.random.default_rng(3)
    sx, su = distinct_pair(rng, 12, 30)
    r = np.array(brute_ranks(sx, su))
    for phi in (LOGISTIC, LOGRANK, VDW, MEDIAN):
        expected = sum(eval_phi(phi, k / 43) for k in r)
        assert w_phi_stat(phi, ScoredPair(sx, su)) == pytest.approx(expected, rel=1e-12)


def test_proxy_examples():
    assert w_phi_proxy(MWW, [0.5, 0.5], 2, 2) == pytest.approx(1.2, abs=1e-15)
    s = 1 - 1e-9
    assert w_phi_proxy(MWW, [s], 1, 1) == pytest.approx((2 * s + 1) / 3, abs=1e-15)
    # N = 4: (4 * 0.9 + 1) / 5 = 0.92 survives the truncation, 0.28 does not
    assert w_phi_proxy(truncated(0.7), [0.9, 0.1], 2, 2) == pytest.approx(0.92, abs=1e-15)


def test_proxy_domain():
    for bad in ([0.0], [1.0], [1.2], [np.nan]):
        with pytest.raises(DomainError):
            w_phi_proxy(MWW, bad, 1, 1)
    with pytest.raises(ParameterError):
        w_phi_proxy(MWW, [0.5], 1, 0)
    with pytest.raises(ParameterError):
        w_phi_proxy(MWW, [0.5, 0.5], 1, 1)


@pytest.mark.parametrize("phi", [MWW, LOGISTIC, LOGRANK, VDW, truncated(0.7)], ids=str)
def test_proxy_gradient(phi):
    rng = np.random.default_rng(5)
    s = rng.uniform(0.05, 0.95, 8)
    n, m, h = 8, 5, 1e-6
    g = w_phi_proxy_grad(phi, s, n, m)
    for i in range(n):
        up, dn = s.copy(), s.copy()
        up[i] += h
        dn[i] -= h
        fd = (w_phi_proxy(phi, up, n, m) - w_phi_proxy(phi, dn, n, m)) / (2 * h)
        assert g[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)
