import itertools
from collections import Counter, defaultdict

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brw.errors import DegenerateRange, DepthTooLarge, InvalidParameters
from brw.measure import (Binning, WeightedAtoms, average_mu_n, histogram, mu_n, nu_n,
                         refine_front, tv_distance)
from brw.params import ParameterSet
from brw.tree import LabelOracle, leaf_values, leaf_words

P7 = ParameterSet(lam=0.7)
SKEW = ParameterSet(lam=0.55, digits=(-1, 0, 2), probs=(0.2, 0.5, 0.3))


def brute_nu(params: ParameterSet, n: int):
    """Law of sum d_j lam^j by enumerating every digit string, merged at 1e-11."""
    acc = defaultdict(float)
    for word in itertools.product(range(params.m), repeat=n):
        x = sum(params.digits[a] * params.lam ** (j + 1) for j, a in enumerate(word))
        w = np.prod([params.probs[a] for a in word]) if word else 1.0
        acc[round(x, 11)] += w
    keys = sorted(acc)
    return np.array(keys), np.array([acc[k] for k in keys])


# -- mu_n ------------------------------------------------------------------

def test_mu_depth_zero():
    a = mu_n(LabelOracle(1, P7), 0)
    assert a.positions.tolist() == [0.0] and a.weights.tolist() == [1.0]


def test_mu_depth_one(backend):
    seen = set()
    for seed in range(40):
        a = mu_n(LabelOracle(seed, P7), 1)
        assert set(a.positions.tolist()) <= {0.0, 0.7}
        assert set(a.weights.tolist()) <= {0.5, 1.0}
        seen.add(tuple(a.positions.tolist()))
    assert seen == {(0.0,), (0.7,), (0.0, 0.7)}


@pytest.mark.parametrize("seed", range(4))
def test_mu_matches_leaf_multiset(backend, seed):
    o = LabelOracle(seed, P7)
    v = leaf_values(o, 10)
    a = mu_n(o, 10)
    uniq, counts = np.unique(np.round(v, 11), return_counts=True)
    np.testing.assert_allclose(a.positions, uniq, atol=1e-11)
    np.testing.assert_allclose(a.weights, counts / len(v))


def test_mu_exact_merges_golden_collisions(golden):
    o = LabelOracle(8, golden)
    a = mu_n(o, 12, exact=True)
    b = mu_n(o, 12, exact=False)
    np.testing.assert_allclose(a.positions, b.positions, atol=1e-12)
    np.testing.assert_allclose(a.weights, b.weights)
    assert abs(a.weights.sum() - 1) < 1e-9


def test_mu_refines_by_truncation(backend):
    """Dropping the last digit maps mu_{n+1} onto mu_n with the same mass per prefix."""
    o = LabelOracle(21, P7)
    n = 9
    level_n = Counter(map(tuple, leaf_words(o, n)[1].tolist()))
    parents = Counter(tuple(w[:-1]) for w in leaf_words(o, n + 1)[1].tolist())
    assert parents == Counter({w: 2 * c for w, c in level_n.items()})


def test_mu_guard():
    with pytest.raises(DepthTooLarge):
        mu_n(LabelOracle(1, P7), 30)


# -- nu_n ------------------------------------------------------------------

def test_nu_depth_zero():
    a = nu_n(P7, 0)
    assert a.positions.tolist() == [0.0] and a.weights.tolist() == [1.0]


def test_nu_golden_depth_two(golden):
    a = nu_n(golden, 2)
    g = golden.lam
    np.testing.assert_allclose(a.positions, [0, g * g, g, 1.0], atol=1e-15)
    np.testing.assert_allclose(a.weights, [0.25] * 4)
    # g + g^2 = 1 exactly
    ring = golden.ring
    assert np.array_equal(a.exact[-1], ring.mul_theta(ring.const(1), 2)[0])


@pytest.mark.parametrize("params,n", [(P7, 8), (SKEW, 6), (ParameterSet(lam=0.5), 7)])
def test_nu_matches_enumeration(params, n):
    a = nu_n(params, n)
    pos, w = brute_nu(params, n)
    np.testing.assert_allclose(a.positions, pos, atol=1e-11)
    np.testing.assert_allclose(a.weights, w, atol=1e-12)


def test_nu_self_similarity_refinement():
    a10 = nu_n(P7, 10)
    r = refine_front(nu_n(P7, 9), P7)
    np.testing.assert_allclose(r.positions, a10.positions, atol=1e-12)
    np.testing.assert_allclose(r.weights, a10.weights, atol=1e-12)


def test_nu_support_in_hull():
    for p in (P7, SKEW):
        a = nu_n(p, 8)
        lo, hi = p.hull
        assert lo - 1e-12 <= a.positions[0] and a.positions[-1] <= hi + 1e-12


def test_nu_exact_equals_float_golden(golden):
    a = nu_n(golden, 14, exact=True)
    b = nu_n(golden, 14, exact=False)
    assert len(a) == len(b)
    np.testing.assert_allclose(a.positions, b.positions, atol=1e-12)
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-12)


# -- histograms and TV -------------------------------------------------------

def test_histogram_basics():
    h = histogram([], 0, 1, 4)
    assert h.counts.tolist() == [0, 0, 0, 0] and h.total == 0
    h = histogram([0.0], 0, 1, 4)
    assert h.counts.tolist() == [1, 0, 0, 0]
    h = histogram([1.0, -3, 7, 0.5], 0, 1, 4)
    assert h.counts.tolist() == [1, 0, 1, 2] and h.below == 1 and h.above == 1
    with pytest.raises(DegenerateRange):
        histogram([1], 1, 1, 3)
    with pytest.raises(DegenerateRange):
        histogram([1], 0, 1, 0)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 3, allow_nan=False), max_size=200), st.integers(1, 50))
def test_histogram_conserves_count(values, bins):
    h = histogram(values, 0.0, 1.0, bins)
    assert h.counts.sum() == h.total == len(values)
    perm = histogram(values[::-1], 0.0, 1.0, bins)
    assert np.array_equal(perm.counts, h.counts)


def test_figure_histogram_total(backend):
    p = ParameterSet(lam=2 ** -0.5)
    v = leaf_values(LabelOracle(1, p), 20)
    h = histogram(v, *p.hull, 1024)
    assert h.total == 2**20 and h.counts.sum() == 2**20


def test_tv_examples():
    grid = Binning(0, 1, 10)
    a = WeightedAtoms(np.array([0.05, 0.5]), np.array([0.5, 0.5]))
    b = WeightedAtoms(np.array([0.95]), np.array([1.0]))
    assert tv_distance(a, a, grid) == 0
    assert tv_distance(a, b, grid) == pytest.approx(1.0)


def test_weighted_atoms_validation():
    with pytest.raises(InvalidParameters):
        WeightedAtoms(np.array([0.0, 0.0]), np.array([0.5, 0.5]))
    with pytest.raises(InvalidParameters):
        WeightedAtoms(np.array([0.0, 1.0]), np.array([0.5, 0.4]))


def test_expectation_identity_improves_with_seeds(backend):
    grid = Binning(*P7.hull, 1024)
    nu = nu_n(P7, 8)
    d500 = tv_distance(average_mu_n(P7, 8, 500, 9), nu, grid)
    d2000 = tv_distance(average_mu_n(P7, 8, 2000, 9), nu, grid)
    assert d2000 < d500 and d2000 <= 0.05
