from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from brw.errors import (DepthTooLarge, DigitSetUnsupported, ExactModeUnavailable,
                        InvalidParameters, QOutsideHull)
from brw.intervals import IntervalSet
from brw.probe import (default_gap_depth, event_probability, forced_event_overrides,
                       gap_neighborhood_probe, lower_bound_c2, run_probes)
from brw.params import ParameterSet
from brw.support import gaps, gap_depth, separation_constant, separation_floor, support_cover
from brw.tree import LabelOracle, leaf_values

P7 = ParameterSet(lam=0.7)
HALF = Fraction(1, 2)


def brute_separation(lam: float, n: int) -> float:
    """Smallest gap between distinct digit sums of length n over lam^n, by full enumeration."""
    words = (np.arange(2**n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    v = np.sort(words @ (lam ** np.arange(1, n + 1)))
    d = np.diff(v)
    return float(d[d > 1e-12 * lam**n].min() / lam**n)


# -- interval sets ----------------------------------------------------------

pairs = st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 3)), max_size=40)


@settings(max_examples=100, deadline=None)
@given(pairs)
def test_union_is_disjoint_and_covers(ps):
    lo = np.array([a for a, _ in ps])
    hi = np.array([a + w for a, w in ps])
    u = IntervalSet.union_of(lo, hi)
    assert np.all(u.lo[1:] > u.hi[:-1]) and np.all(u.lo <= u.hi)
    for a, b in zip(lo, hi):
        assert u.contains_interval(a, b)
    # every gap point is outside every input interval
    for x, y in u.gaps():
        m = (x + y) / 2
        assert not np.any((lo <= m) & (m <= hi))


def test_interval_validation():
    with pytest.raises(InvalidParameters):
        IntervalSet(np.array([0.0, 1.0]), np.array([2.0, 3.0]))
    with pytest.raises(InvalidParameters):
        IntervalSet(np.array([1.0]), np.array([0.0]))


def test_gaps_examples():
    assert gaps(IntervalSet.from_pairs([(0, 1)])).gaps == []
    assert gaps(IntervalSet.from_pairs([(0, 1), (2, 3)])).gaps == [(1.0, 2.0)]
    with pytest.raises(InvalidParameters):
        gaps(IntervalSet.from_pairs([]))


def test_float_gaps_below_resolution_are_counted():
    r = gaps(IntervalSet.from_pairs([(0, 1), (1 + 1e-11, 2), (3, 4)]))
    assert r.gaps == [(2.0, 3.0)] and r.suppressed == 1


# -- support covers ---------------------------------------------------------

def test_cover_level_zero(golden):
    for p in (P7, golden):
        c = support_cover(LabelOracle(1, p), 0)
        assert list(c.intervals) == [(0.0, pytest.approx(p.lam / (1 - p.lam)))]


@pytest.mark.parametrize("seed", range(6))
def test_nesting_and_hull(golden, seed):
    for p in (golden, P7):
        o = LabelOracle(seed, p)
        prev = support_cover(o, 0)
        for n in range(1, 19):
            cur = support_cover(o, n)
            assert prev.contains(cur)
            assert cur.intervals.lo[0] >= -1e-12 and cur.intervals.hi[-1] <= p.hull[1] + 1e-12
            prev = cur


def test_cover_is_union_of_leaf_intervals(golden):
    o = LabelOracle(17, golden)
    v = leaf_values(o, 12)
    w = golden.lam**12 * golden.hull[1]
    ref = IntervalSet.union_of(v, v + w, 1e-12)
    c = support_cover(o, 12, exact=True).intervals
    np.testing.assert_allclose(c.lo, ref.lo, atol=1e-12)
    np.testing.assert_allclose(c.hi, ref.hi, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_exact_float_gap_agreement(golden, seed):
    o = LabelOracle(seed, golden)
    for n in (6, 10, 14):
        a = gaps(support_cover(o, n, exact=True)).gaps
        b = gaps(support_cover(o, n, exact=False)).gaps
        assert len(a) == len(b)
        np.testing.assert_allclose(np.array(a).reshape(-1, 2), np.array(b).reshape(-1, 2), atol=1e-9)


def test_pinned_golden_gaps(golden):
    r = gaps(support_cover(LabelOracle(2024, golden), 16, exact=True))
    assert r.level == 16 and len(r.gaps) == 15
    a, b = r.gaps[0]
    assert a == pytest.approx(0.1934955049953732, abs=1e-12)
    assert b == pytest.approx(0.19394860884915804, abs=1e-12)
    assert sum(y - x for x, y in r.gaps) == pytest.approx(0.3622121568309625, abs=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_gaps_persist(golden, seed):
    """A gap of S(n) stays inside a gap of S(n+1)."""
    o = LabelOracle(seed, golden)
    prev = gaps(support_cover(o, 6, exact=True)).gaps
    for n in range(7, 17):
        cur = gaps(support_cover(o, n, exact=True)).gaps
        for a, b in prev:
            assert any(x <= a + 1e-12 and b - 1e-12 <= y for x, y in cur)
        prev = cur


def test_cover_guard():
    with pytest.raises(DepthTooLarge):
        support_cover(LabelOracle(1, P7), 30)


# -- separation -------------------------------------------------------------

def test_separation_examples(golden):
    assert separation_constant(P7, 1) == [(1, pytest.approx(1.0))]
    seq = separation_constant(golden, 16)
    assert [n for n, _ in seq] == list(range(1, 17))
    assert separation_floor(golden, 16) == pytest.approx(golden.lam, abs=1e-12)


@pytest.mark.parametrize("n", [4, 9, 14])
def test_separation_against_enumeration(golden, n):
    assert separation_constant(golden, n)[-1][1] == pytest.approx(brute_separation(golden.lam, n),
                                                                  abs=1e-9)
    assert separation_constant(P7, n, exact=False)[-1][1] == pytest.approx(brute_separation(0.7, n),
                                                                           rel=1e-6)


def test_separation_exact_matches_float(golden):
    a = separation_constant(golden, 16, exact=True)
    b = separation_constant(golden, 16, exact=False)
    assert max(abs(x - y) for (_, x), (_, y) in zip(a, b)) <= 1e-9


def test_separation_decays_without_pisot():
    seq = [g for _, g in separation_constant(P7, 18, exact=False)]
    assert seq[-1] < seq[5] / 10


def test_separation_soundness(golden):
    """Distinct level-n digit sums differ by at least the floor times lam^n."""
    floor = separation_floor(golden, 16)
    for n in (8, 12, 16):
        v = np.sort(np.unique(np.round(leaf_values(LabelOracle(3, golden), n), 12)))
        assert np.diff(v).min() >= floor * golden.lam**n * (1 - 1e-9)


def test_separation_errors():
    with pytest.raises(DigitSetUnsupported):
        separation_constant(ParameterSet(lam=0.7, digits=(-1, 1)), 4)
    with pytest.raises(DepthTooLarge):
        separation_constant(P7, 23)


# -- gap depth --------------------------------------------------------------

def test_gap_depth_examples(golden):
    assert gap_depth(golden, 1.0) == 2
    assert gap_depth(golden, separation_floor(golden, 16)) == 3
    assert default_gap_depth(golden) == 3
    with pytest.raises(InvalidParameters):
        gap_depth(golden, 0.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.51, 0.95), st.floats(1e-6, 1.0), st.floats(1.0, 10.0))
def test_gap_depth_monotone(lam, c, factor):
    p = ParameterSet(lam=lam)
    ell = gap_depth(p, c)
    assert gap_depth(p, c * factor) <= ell
    assert lam ** (ell + 1) / (1 - lam) < c


# -- gap-neighbourhood probe ------------------------------------------------

def test_probe_errors(golden):
    with pytest.raises(QOutsideHull):
        gap_neighborhood_probe(LabelOracle(1, golden), Fraction(-1, 2), 10)
    with pytest.raises(QOutsideHull):
        gap_neighborhood_probe(LabelOracle(1, golden), 5, 10)
    with pytest.raises(ExactModeUnavailable):
        gap_neighborhood_probe(LabelOracle(1, P7), HALF, 10)
    with pytest.raises(DigitSetUnsupported):
        g2 = ParameterSet.from_minpoly("-1,-1,1", digits=(-1, 1))
        gap_neighborhood_probe(LabelOracle(1, g2), HALF, 10)


def test_probe_structure(golden):
    """Cluster level sizes equal the maximal-vertex counts up to extinction."""
    seen = 0
    for seed in range(60):
        r = gap_neighborhood_probe(LabelOracle(seed, golden), HALF, 24)
        if r.in_support:
            assert r.clusters == []
            continue
        o = LabelOracle(seed, golden)
        # q is outside S(n0): no level-n0 interval contains it
        c = support_cover(o, r.n0, exact=False).intervals
        assert c.locate(0.5) == -1
        for d in r.clusters:
            seen += 1
            assert d.structural_ok
            assert all(m >= 1 for m in d.maximal_count)
            if d.tau is not None:
                assert d.tau >= d.n
                assert d.gamma_sizes[:-1] == d.maximal_count
    assert seen > 10


def test_probe_schedule(golden):
    for seed in range(30):
        r = gap_neighborhood_probe(LabelOracle(seed, golden), HALF, 24)
        ns = [d.n for d in r.clusters]
        assert all(b - a == r.ell + 1 for a, b in zip(ns, ns[1:]))
        assert all(r.n0 <= n <= 24 for n in ns)


def _a_value(oracle, sigma, ell):
    """f(sigma 1^l) from the path digits of sigma."""
    depth, idx = sigma
    path = [(idx >> (depth - 1 - i)) & 1 for i in range(depth)]
    lam = oracle.params.lam
    f = sum(d * lam ** (j + 1) for j, d in enumerate(oracle.path_digits(path)))
    return f + sum(lam ** (depth + i) for i in range(1, ell + 1))


def test_forced_events_reveal_left_gap(golden):
    """Making a cluster split l times and die forces a gap just left of A = f(sigma 1^l)."""
    checked = independent = 0
    for seed in range(120):
        o = LabelOracle(seed, golden)
        r = gap_neighborhood_probe(o, HALF, 24)
        for which, d in enumerate(r.clusters):
            if d.tau is None:
                continue
            forced = o.with_overrides(forced_event_overrides(o, r, which))
            d2 = gap_neighborhood_probe(forced, HALF, 24).clusters[which]
            assert d2.event_E and d2.tau == d.tau + r.ell + 1
            assert d2.gap_found and d2.gap_level <= d2.tau + r.ell + 4 and d2.alpha_bound_ok
            checked += 1
            if d2.gap_level <= 20:
                # the cover at the reported level leaves (A - eps, A) uncovered
                a = _a_value(forced, d2.sigma, r.ell)
                cover = support_cover(forced, d2.gap_level, exact=False).intervals
                assert cover.locate(a - 1e-9) == -1
                independent += 1
    assert checked >= 20 and independent >= 3


def test_event_probability_constants():
    assert event_probability(3) == 2.0**-30
    assert lower_bound_c2(3) == 2.0**-32
    assert event_probability(1) == 2.0**-6


def test_run_probes_deterministic_across_threads(golden):
    a, ra = run_probes(golden, HALF, 16, 24, seed=9, threads=1)
    b, rb = run_probes(golden, HALF, 16, 24, seed=9, threads=2)
    assert a.as_dict() == b.as_dict()
    assert [x.as_dict() for x in ra] == [x.as_dict() for x in rb]
    assert a.structural_failures == 0 and a.ell == 3
