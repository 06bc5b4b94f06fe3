"""Maximal vertices below a rational point q and their clusters of 1-labels.

For a labelled binary tree with digits {0, 1} and a rational q outside the
support cover S(n0), this follows, level by level and in exact Z[theta]
arithmetic:

* M^(n): level-n vertices attaining m^(n) = max{f(v) : f(v) < q};
* Gamma^(n): the union of the clusters of 1-labels hanging below M^(n),
  its level sizes and its extinction level tau;
* the event that Gamma^(n) narrows to one vertex l levels before dying
  after l full doublings, and if so whether a gap just left of
  A = f(sigma 1^l) shows up in a deeper cover.

Vertices are (depth, index) pairs; rows hold theta^depth * f(v).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import kernels
from .errors import DigitSetUnsupported, QOutsideHull
from .expansions import as_fraction
from .params import EXACT_MAX_DEPTH, ParameterSet
from .support import gap_depth, separation_floor
from .tree import LabelOracle

SEPARATION_DEPTH = 16


@functools.lru_cache(maxsize=16)
def default_gap_depth(params: ParameterSet) -> int:
    """Gap depth from the empirical separation floor over depths <= 16."""
    return gap_depth(params, separation_floor(params, SEPARATION_DEPTH, exact=True))


def event_probability(ell: int) -> float:
    """Chance that a single cluster vertex spawns l full doublings and then dies: 2^(2 - 2^(l+2))."""
    return 2.0 ** (2 - 2 ** (ell + 2))


def lower_bound_c2(ell: int) -> float:
    return 2.0 ** (-(2 ** (ell + 2)))


@dataclass
class ClusterDiagnostic:
    """Cluster statistics for one starting level n >= n0."""

    n: int
    n0: int
    tau: int | None
    gamma_sizes: list
    maximal_count: list
    event_E: bool
    structural_ok: bool
    single_levels: int
    gap_level: int | None = None
    gap_found: bool = False
    alpha_bound_ok: bool = False
    sigma: tuple | None = None
    last_vertices: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass
class ProbeReport:
    q: Fraction
    n0: int | None
    ell: int
    depth_cap: int
    maximal_count: dict = field(default_factory=dict)
    clusters: list = field(default_factory=list)

    @property
    def in_support(self) -> bool:
        return self.n0 is None

    @property
    def events(self) -> int:
        return sum(c.event_E for c in self.clusters)

    def as_dict(self) -> dict:
        return {"q": str(self.q), "n0": self.n0, "ell": self.ell, "depth_cap": self.depth_cap,
                "maximal_count": {str(k): v for k, v in self.maximal_count.items()},
                "clusters": [c.as_dict() for c in self.clusters]}


class _Level:
    __slots__ = ("hi", "lo", "rows")

    def __init__(self, hi, lo, rows):
        self.hi, self.lo, self.rows = hi, lo, rows


def _children(oracle: LabelOracle, depth: int, lev: _Level):
    """Children at ``depth`` of the vertices in ``lev`` (at depth - 1): indices, digits, rows."""
    n = len(lev.hi)
    hi = np.repeat(lev.hi, 2)
    lo = np.repeat(lev.lo, 2)
    c = np.tile(np.array([0, 1], dtype=np.uint64), n)
    hi, lo = kernels.child_index(hi, lo, 2, c)
    d = oracle.digits(depth, hi, lo)
    ring = oracle.params.ring
    ints = np.array([int(x) for x in oracle.params.digits], dtype=np.int64)
    rows = ring.mul_theta(np.repeat(lev.rows, 2, axis=0))
    rows[:, 0] += ints[d]
    return hi, lo, ints[d], rows


class _Tracker:
    """Exact predicates against q = r/s and the running lower bound for m^(n)."""

    def __init__(self, params: ParameterSet, q: Fraction):
        self.ring = params.ring
        self.r, self.s = q.numerator, q.denominator

    def q_row(self, k: int) -> np.ndarray:
        return self.r * np.array([self.ring.theta_power(k)], dtype=np.int64)

    def classify(self, rows: np.ndarray, k: int):
        """Masks (below_q, interval_contains_q, top_below_q) for rows at scale k."""
        ring = self.ring
        D = self.q_row(k) - self.s * rows             # theta^k s (q - f)
        sD = ring.sign(D)
        # s - (theta - 1) D >= 0  <=>  q <= top
        E = ring.const(self.s, len(rows)) - (ring.mul_theta(D) - D)
        sE = ring.sign(E)
        return sD > 0, (sD >= 0) & (sE >= 0), sE < 0

    def top_at_least(self, rows: np.ndarray, bound: np.ndarray) -> np.ndarray:
        """top(v) >= bound, both at the same scale: (theta - 1)(F - B) + 1 >= 0."""
        ring = self.ring
        diff = rows - bound
        return ring.sign(ring.mul_theta(diff) - diff + ring.const(1, len(rows))) >= 0


def _argmax_rows(ring, rows: np.ndarray) -> np.ndarray:
    """Mask of rows equal to the exact maximum."""
    vals = ring.to_float(rows)
    i = int(np.argmax(vals))
    sgn = ring.sign(rows[i][None, :] - rows)
    if np.any(sgn < 0):
        j = i
        for k in range(len(rows)):
            if ring.sign(rows[k] - rows[j])[0] > 0:
                j = k
        i = j
    return np.all(rows == rows[i], axis=1)


def _key(hi, lo) -> list:
    return sorted(zip(np.asarray(hi).tolist(), np.asarray(lo).tolist()))


def gap_neighborhood_probe(oracle: LabelOracle, q, n_max: int, ell: int | None = None,
                           depth_cap: int | None = None) -> ProbeReport:
    """Follow maximal vertices below q and their 1-clusters; see the module docstring.

    Starting levels are n0, n0 + (l+1), n0 + 2(l+1), ... up to ``n_max``.
    """
    p = oracle.params
    ring = p.require_exact()
    if sorted(p.digits) != [0.0, 1.0] or p.arity != 2:
        raise DigitSetUnsupported("the probe needs a binary tree with digits {0, 1}")
    q = as_fraction(q)
    lo_h, hi_h = p.hull
    if not (lo_h <= float(q) <= hi_h):
        raise QOutsideHull(f"q={q} outside the hull [{lo_h!r}, {hi_h!r}]")
    ell = default_gap_depth(p) if ell is None else int(ell)
    cap = depth_cap or (EXACT_MAX_DEPTH - ell - 4)
    one = p.digits.index(1.0)
    tr = _Tracker(p, q)

    # level-by-level candidate tracking
    lev = _Level(np.zeros(1, np.uint64), np.zeros(1, np.uint64), ring.zeros(1))
    bound = None            # row at scale k: max f over vertices whose interval lies below q
    n0 = None
    levels: dict[int, _Level] = {}
    maximal: dict[int, np.ndarray] = {}
    for k in range(1, cap + 1):
        hi, lo, _, rows = _children(oracle, k, lev)
        below, contains, safe = tr.classify(rows, k)
        if bound is not None:
            bound = ring.mul_theta(bound)
        if safe.any():
            top = rows[safe][_argmax_rows(ring, rows[safe])][:1]
            if bound is None or ring.sign(top - bound)[0] > 0:
                bound = top
        keep = contains | (below & safe)
        if bound is not None:
            keep &= contains | tr.top_at_least(rows, bound)
        lev = _Level(hi[keep], lo[keep], rows[keep])
        if n0 is None:
            if contains.any():
                if k >= n_max:
                    break
                continue
            n0 = k
        if n0 is not None:
            if len(lev.hi) == 0:
                break
            levels[k] = lev
            maximal[k] = _argmax_rows(ring, lev.rows)
    report = ProbeReport(q, n0 if n0 is not None and n0 <= n_max else None, ell, cap)
    if report.n0 is None:
        return report
    report.maximal_count = {k: int(m.sum()) for k, m in maximal.items()}
    for n in range(n0, n_max + 1, ell + 1):
        if n not in maximal:        # nothing lies below q
            break
        report.clusters.append(_cluster(oracle, n, n0, ell, cap, one, levels, maximal))
    return report


def _cluster(oracle, n, n0, ell, cap, one, levels, maximal) -> ClusterDiagnostic:
    p = oracle.params
    ring = p.ring
    m = maximal[n]
    hi, lo, rows = levels[n].hi[m], levels[n].lo[m], levels[n].rows[m]
    sizes = [len(hi)]
    members = {n: (hi, lo, rows)}
    k = n
    while len(hi) and k < cap:
        k += 1
        chi, clo, dig, crow = _children(oracle, k, _Level(hi, lo, rows))
        keep = dig == 1
        hi, lo, rows = chi[keep], clo[keep], crow[keep]
        sizes.append(len(hi))
        if len(hi):
            members[k] = (hi, lo, rows)
    tau = n + len(sizes) - 2 if sizes[-1] == 0 else None
    last = tau if tau is not None else k
    structural = all(
        j in levels and _key(*members[j][:2]) == _key(levels[j].hi[maximal[j]], levels[j].lo[maximal[j]])
        for j in range(n, last + 1))
    mcount = [int(maximal[j].sum()) if j in maximal else 0 for j in range(n, last + 1)]
    singles = sum(1 for s in sizes if s == 1)
    event = (tau is not None and tau - ell >= n
             and all(sizes[tau - j - n] == 2 ** (ell - j) for j in range(ell + 1)))
    diag = ClusterDiagnostic(n, n0, tau, sizes, mcount, bool(event), bool(structural), singles)
    if tau is not None:
        diag.last_vertices = [(int(h) << 64) | int(l) for h, l in zip(*members[tau][:2])]
    if event:
        s_hi, s_lo, s_row = members[tau - ell]
        diag.sigma = (tau - ell, (int(s_hi[0]) << 64) | int(s_lo[0]))
        a_row = s_row[:1]
        for _ in range(ell):
            a_row = ring.mul_theta(a_row) + ring.const(1)
        diag.gap_level = _left_gap_level(oracle, a_row, tau, tau + ell + 4)
        diag.gap_found = diag.gap_level is not None
        lam = p.lam
        alpha_hi = float(ring.to_float(s_row[:1])[0]) / p.theta ** (tau - ell) \
            + lam ** (tau - ell + 1) / (1 - lam)
        a_val = float(ring.to_float(a_row)[0]) / p.theta**tau
        diag.alpha_bound_ok = bool(alpha_hi - a_val < lam**n / (1 - lam))
    return diag


def _left_gap_level(oracle: LabelOracle, a_row: np.ndarray, a_scale: int, max_level: int):
    """First level <= max_level at which no cover interval [f, top] has f < A <= top.

    Such a level certifies that (A - eps, A) misses the support for small eps.
    """
    ring = oracle.params.ring
    lev = _Level(np.zeros(1, np.uint64), np.zeros(1, np.uint64), ring.zeros(1))
    for j in range(1, max_level + 1):
        hi, lo, _, rows = _children(oracle, j, lev)
        s = max(j, a_scale)
        A = ring.mul_theta(a_row, s - a_scale)
        F = ring.mul_theta(rows, s - j)
        D = A - F                                       # theta^s (A - f)
        unit = ring.mul_theta(ring.const(1), s - j)      # theta^(s-j)
        below = ring.sign(D) > 0
        reach = ring.sign(unit - (ring.mul_theta(D) - D)) >= 0
        keep = below & reach
        lev = _Level(hi[keep], lo[keep], rows[keep])
        if j >= a_scale and not keep.any():
            return j
    return None


def forced_event_overrides(oracle: LabelOracle, report: ProbeReport, which: int = 0) -> dict:
    """Label overrides turning cluster ``which`` of ``report`` into an event.

    Takes the rightmost cluster vertex w at its extinction level, labels its
    first child and l further generations below it with 1 and the next
    generation with 0; everything else is unchanged.
    """
    diag = report.clusters[which]
    if diag.tau is None:
        raise ValueError("cluster did not die out within the depth cap")
    p = oracle.params
    one, zero = p.digits.index(1.0), p.digits.index(0.0)
    ell = report.ell
    tau = diag.tau
    w = max(diag.last_vertices)
    w1 = 2 * w
    over = {}
    for i in range(ell + 1):
        for t in range(2**i):
            over[(tau + 1 + i, w1 * 2**i + t)] = one
    for t in range(2 ** (ell + 1)):
        over[(tau + ell + 2, w1 * 2 ** (ell + 1) + t)] = zero
    return over


@dataclass
class ProbeSummary:
    """Aggregate over independent probes; rates are per scheduled cluster."""

    probes: int
    ell: int
    outside: int
    clusters: int
    events: int
    events_with_gap: int
    structural_failures: int
    mean_single_levels: float

    @property
    def event_frequency(self) -> float:
        return self.events / self.clusters if self.clusters else 0.0

    @property
    def conditional_event_rate(self) -> float:
        """Unbiased estimate of P(event) from singleton levels times the exact continuation chance."""
        return self.mean_single_levels * event_probability(self.ell)

    @property
    def threshold(self) -> float:
        return lower_bound_c2(self.ell) / 2

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d.update(event_frequency=self.event_frequency,
                 conditional_event_rate=self.conditional_event_rate, threshold=self.threshold)
        return d


def _probe_one(args):
    seed, params, q, n_max, ell = args
    return gap_neighborhood_probe(LabelOracle(seed, params), q, n_max, ell)


def run_probes(params: ParameterSet, q, n_max: int, count: int, seed: int,
               ell: int | None = None, threads: int = 1) -> tuple[ProbeSummary, list]:
    """Probe ``count`` independent trees seeded by derive_seed(seed, i); returns (summary, reports)."""
    from concurrent.futures import ProcessPoolExecutor

    from .tree import derive_seed

    ell = default_gap_depth(params) if ell is None else int(ell)
    q = as_fraction(q)
    jobs = [(derive_seed(seed, i), params, q, n_max, ell) for i in range(count)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(_probe_one, jobs, chunksize=max(1, count // (4 * threads))))
    else:
        reports = [_probe_one(j) for j in jobs]
    clusters = [c for r in reports for c in r.clusters]
    summary = ProbeSummary(
        probes=count, ell=ell,
        outside=sum(not r.in_support for r in reports),
        clusters=len(clusters),
        events=sum(c.event_E for c in clusters),
        events_with_gap=sum(c.event_E and c.gap_found and c.alpha_bound_ok for c in clusters),
        structural_failures=sum(not c.structural_ok for c in clusters),
        mean_single_levels=float(np.mean([c.single_levels for c in clusters])) if clusters else 0.0,
    )
    return summary, reports
