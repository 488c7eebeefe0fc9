import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cpve.laws import (Binomial, Deterministic, Geometric, Poisson, Tabulated,
                       ValidationError, law_from_dict, law_moments, law_pgf,
                       law_pmf, law_sample, law_truncate)

LAWS = [
    Tabulated.from_mapping({0: 0.25, 1: 0.25, 2: 0.5}),
    Tabulated.from_mapping({0: 0.1, 1: 0.1, 3: 0.8}),
    Geometric(0.4),
    Geometric(0.75),
    Poisson(1.7),
    Binomial(6, 0.35),
    Deterministic(3),
]


@st.composite
def tabulated_laws(draw, max_value=6):
    values = draw(st.lists(st.integers(0, max_value), min_size=1, max_size=max_value + 1, unique=True))
    weights = draw(st.lists(st.floats(0.01, 1.0), min_size=len(values), max_size=len(values)))
    total = sum(weights)
    return Tabulated(tuple((v, w / total) for v, w in zip(values, weights)))


def test_pmf_examples():
    assert law_pmf(Deterministic(3), 3) == 1.0
    assert law_pmf(Geometric(0.4), 0) == pytest.approx(0.6, abs=1e-15)
    assert law_pmf(Binomial(4, 0.5), 2) == pytest.approx(0.375, abs=1e-15)


def test_moment_examples():
    assert law_moments(Geometric(0.5))[0] == pytest.approx(1.0)
    assert law_moments(Binomial(10, 0.3)) == pytest.approx((3.0, 2.1, 11.1))
    assert law_moments(Deterministic(7)) == (7.0, 0.0, 49.0)


def test_pgf_examples():
    for law in LAWS:
        assert law_pgf(law, 1.0) == pytest.approx(1.0, abs=1e-14)
    assert law_pgf(Tabulated.from_mapping({0: 0.25, 1: 0.25, 2: 0.5}), 0.5) == pytest.approx(0.5)
    for s in np.linspace(0, 1, 11):
        direct = sum(stats.binom.pmf(j, 5, 0.3) * s**j for j in range(6))
        assert law_pgf(Binomial(5, 0.3), s) == pytest.approx((0.7 + 0.3 * s) ** 5)
        assert law_pgf(Binomial(5, 0.3), s) == pytest.approx(direct)


def test_pgf_domain():
    with pytest.raises(ValueError):
        Geometric(0.4).pgf(1.5)
    with pytest.raises(ValueError):
        Poisson(1.0).pgf(-0.1)


def test_sample_examples():
    rng = np.random.default_rng(0)
    assert law_sample(Deterministic(5), rng) == 5
    assert law_sample(Tabulated.from_mapping({0: 1.0}), rng) == 0
    x = Geometric(0.4).sample(np.random.default_rng(1), size=10**6)
    mean, var, _ = Geometric(0.4).moments()
    assert abs(x.mean() - 2 / 3) <= 4 * math.sqrt(var / x.size)


def test_truncate_examples():
    pmf, leaked = law_truncate(Deterministic(2), 1e-12)
    assert pmf.tolist() == [0.0, 0.0, 1.0] and leaked == 0
    pmf, leaked = law_truncate(Geometric(0.5), 2.0**-20)
    assert pmf.size == 20
    assert leaked == pytest.approx(2.0**-20, rel=1e-12)
    law = Tabulated.from_mapping({1: 0.5, 4: 0.5})
    pmf, leaked = law_truncate(law, 0.3)
    assert leaked == 0 and pmf.tolist() == [0, 0.5, 0, 0, 0.5]


@pytest.mark.parametrize("law", LAWS, ids=lambda x: repr(x))
@pytest.mark.parametrize("eps", [1e-3, 1e-9, 1e-14])
def test_truncate_mass_accounting(law, eps):
    pmf, leaked = law.truncate(eps)
    total = pmf.sum() + leaked
    assert 1 - eps - 1e-12 <= total <= 1 + 1e-12
    assert leaked <= eps


@pytest.mark.parametrize("law", LAWS, ids=lambda x: repr(x))
def test_pgf_monotone_convex(law):
    s = np.linspace(0, 1, 101)
    g = np.array([law.pgf(x) for x in s])
    assert np.all(np.diff(g) >= -1e-15)
    assert np.all(np.diff(g, 2) >= -1e-12)


@pytest.mark.parametrize("law", LAWS, ids=lambda x: repr(x))
def test_moments_match_direct_summation(law):
    pmf, _ = law.truncate(1e-14)
    j = np.arange(pmf.size)
    mean = np.dot(j, pmf)
    second = np.dot(j * j, pmf)
    m, v, d = law.moments()
    assert mean == pytest.approx(m, rel=1e-9, abs=1e-12)
    assert second == pytest.approx(d, rel=1e-9, abs=1e-12)
    assert second - mean**2 == pytest.approx(v, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("law", LAWS, ids=lambda x: repr(x))
def test_sampling_chi_square(law):
    rng = np.random.default_rng(20240601)
    x = np.asarray(law.sample(rng, size=10**5))
    pmf, leaked = law.truncate(1e-9)
    counts = np.bincount(np.minimum(x, pmf.size), minlength=pmf.size + 1)
    expected = np.append(pmf, leaked) * x.size
    # pool sparse cells so the chi-square approximation is valid
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    if exp[-1] < 5:
        obs[-2] += obs[-1]
        exp[-2] += exp[-1]
        obs, exp = obs[:-1], exp[:-1]
    if obs.size < 2:
        assert np.all(x == law.support_max)
        return
    exp = exp * obs.sum() / exp.sum()
    assert stats.chisquare(obs, exp).pvalue > 1e-3


@pytest.mark.parametrize("law", LAWS, ids=lambda x: repr(x))
def test_sum_sample_matches_direct_summation(law):
    t = np.repeat(np.array([0, 1, 3, 7]), 5000)
    fast = law.sum_sample(t, np.random.default_rng(5))
    slow = law.sum_sample_direct(t, np.random.default_rng(6))
    assert np.all(fast[t == 0] == 0)
    for k in (1, 3, 7):
        a, b = fast[t == k], slow[t == k]
        if law.var == 0:
            assert np.all(a == b)
        else:
            assert stats.ks_2samp(a, b).pvalue > 1e-3
            assert abs(a.mean() - k * law.mean) < 5 * math.sqrt(k * law.var / a.size)


def test_validation_errors():
    with pytest.raises(ValidationError, match="sum"):
        Tabulated(((0, 0.5), (1, 0.4)))
    with pytest.raises(ValidationError):
        Tabulated(((0, -0.1), (1, 1.1)))
    with pytest.raises(ValidationError):
        Geometric(1.0)
    with pytest.raises(ValidationError):
        Geometric(0.0)
    with pytest.raises(ValidationError):
        Binomial(3, 1.5)
    with pytest.raises(ValidationError):
        Deterministic(-1)
    with pytest.raises(ValidationError):
        law_from_dict({"kind": "zeta"})


@given(tabulated_laws())
@settings(max_examples=60, deadline=None)
def test_tabulated_properties(law):
    pmf = law.dense()
    assert pmf.sum() == pytest.approx(1.0, abs=1e-12)
    j = np.arange(pmf.size)
    m, v, d = law.moments()
    assert m == pytest.approx(np.dot(j, pmf), rel=1e-12, abs=1e-14)
    assert d == pytest.approx(np.dot(j * j, pmf), rel=1e-12, abs=1e-14)
    for s in (0.0, 0.3, 0.9):
        assert law.pgf(s) == pytest.approx(np.polyval(pmf[::-1], s), abs=1e-14)
    assert law_from_dict(law.to_dict()) == law


@given(st.floats(0.01, 0.99), st.floats(1e-14, 1e-2))
@settings(max_examples=50, deadline=None)
def test_geometric_truncation_property(alpha, eps):
    pmf, leaked = Geometric(alpha).truncate(eps)
    assert leaked <= eps
    # the prefix is the smallest one: dropping its last point would exceed eps
    assert leaked + pmf[-1] > eps * (1 - 1e-9)
    assert pmf.sum() + leaked == pytest.approx(1.0, abs=1e-12)
