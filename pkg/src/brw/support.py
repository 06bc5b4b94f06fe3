"""Support covers S(n) = union over level-n vertices of f(v) + lam^n I, their
gaps, and the separation constant of digit sums at Pisot reciprocals.

In exact mode interval endpoints are kept in Z[theta]: the endpoint
f(v) + lam^n e with e = d * lam/(1-lam) equals E / ((theta - 1) theta^n) for
the integer row E = (theta - 1) theta^n f(v) + d.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DepthTooLarge, DigitSetUnsupported, InvalidParameters
from .intervals import IntervalSet
from .measure import dedup_exact, dedup_float, float_tolerance, mu_n
from .params import ParameterSet
from .tree import MAX_LEAVES, LabelOracle

MERGE_SLACK = 1e-12
# Gaps narrower than this are not resolvable in floating point for non-Pisot lam.
MIN_FLOAT_GAP = 1e-10
MAX_SEPARATION_DEPTH = 22


@dataclass(frozen=True)
class SupportCover:
    """S(n) as an IntervalSet; ``exact_lo`` / ``exact_hi`` hold endpoint rows E when exact."""

    level: int
    intervals: IntervalSet
    params: ParameterSet
    exact_lo: np.ndarray | None = None
    exact_hi: np.ndarray | None = None

    @property
    def exact(self) -> bool:
        return self.exact_lo is not None

    def _rows_at(self, rows: np.ndarray, scale: int) -> np.ndarray:
        return self.params.ring.mul_theta(rows, scale - self.level)

    def contains(self, other: "SupportCover") -> bool:
        """Whether every component of ``other`` lies in a component of ``self``."""
        if not (self.exact and other.exact):
            return self.intervals.contains(other.intervals, MERGE_SLACK)
        if other.level < self.level:
            return False
        ring = self.params.ring
        slo = self._rows_at(self.exact_lo, other.level)
        shi = self._rows_at(self.exact_hi, other.level)
        idx = np.searchsorted(self.intervals.lo, other.intervals.lo + MERGE_SLACK, side="right") - 1
        if np.any(idx < 0):
            return False
        ok_lo = ring.sign(other.exact_lo - slo[idx]) >= 0
        ok_hi = ring.sign(shi[idx] - other.exact_hi) >= 0
        return bool(np.all(ok_lo & ok_hi))


def _endpoint_rows(rows: np.ndarray, params: ParameterSet, digit: int) -> np.ndarray:
    ring = params.ring
    return ring.mul_theta(rows) - rows + ring.const(digit, len(rows))


def support_cover(oracle: LabelOracle, n: int, exact: bool | None = None) -> SupportCover:
    """Union of the level-n intervals I(v) = f(v) + lam^n [dmin, dmax] lam/(1-lam).

    Exact mode merges neighbouring intervals exactly when they touch or
    overlap; float mode joins pieces separated by at most 1e-12.
    """
    p = oracle.params
    atoms = mu_n(oracle, n, exact)
    lo_off, hi_off = (np.array(p.hull) * p.lam**n).tolist()
    f = atoms.positions
    if atoms.exact is None:
        return SupportCover(n, IntervalSet.union_of(f + lo_off, f + hi_off, MERGE_SLACK), p)
    ring = p.ring
    rows = atoms.exact
    dmin, dmax = int(min(p.digits)), int(max(p.digits))
    # consecutive values F_i < F_{i+1}: intervals overlap iff (theta-1)(F_{i+1}-F_i) <= dmax-dmin
    diff = rows[1:] - rows[:-1]
    scaled = ring.mul_theta(diff) - diff
    joined = ring.sign(ring.const(dmax - dmin, len(diff)) - scaled) >= 0
    start = np.concatenate([[True], ~joined])
    end = np.concatenate([~joined, [True]])
    lo_rows = _endpoint_rows(rows[start], p, dmin)
    hi_rows = _endpoint_rows(rows[end], p, dmax)
    ivs = IntervalSet(f[start] + lo_off, f[end] + hi_off)
    return SupportCover(n, ivs, p, lo_rows, hi_rows)


@dataclass(frozen=True)
class GapReport:
    level: int
    gaps: list
    suppressed: int = 0

    def rows(self):
        for a, b in self.gaps:
            yield self.level, a, b, b - a


def gaps(cover: SupportCover | IntervalSet, level: int | None = None) -> GapReport:
    """Bounded components of the complement of a cover, sorted left to right.

    For covers built without exact arithmetic, gaps narrower than 1e-10 are
    dropped and counted in ``suppressed``.
    """
    if isinstance(cover, SupportCover):
        ivs, level, exact = cover.intervals, cover.level, cover.exact
    else:
        ivs, exact = cover, False
    if ivs.empty:
        raise InvalidParameters("cover is empty")
    found = ivs.gaps()
    if exact:
        return GapReport(level if level is not None else -1, found, 0)
    kept = [g for g in found if g[1] - g[0] >= MIN_FLOAT_GAP]
    return GapReport(level if level is not None else -1, kept, len(found) - len(kept))


# -- separation of digit sums ----------------------------------------------

def _require_binary(params: ParameterSet) -> None:
    if sorted(params.digits) != [0.0, 1.0]:
        raise DigitSetUnsupported("separation constants are defined for the digit set {0, 1}")


def distinct_digit_sums(params: ParameterSet, n: int, exact: bool | None = None):
    """Distinct values of sum_{j<=n} a_j lam^j over all a in {0,1}^n, sorted.

    Returns (values, rows) with rows = theta^n * value in exact mode, else None.
    """
    _require_binary(params)
    exact = params.exact_available if exact is None else exact
    pw = params.powers(n)
    vals = np.zeros(1)
    rows = params.require_exact().zeros(1) if exact else None
    for k in range(1, n + 1):
        if 2 * len(vals) > MAX_LEAVES:
            raise DepthTooLarge(f"more than 2^26 digit sums at depth {k}")
        if exact:
            shifted = params.ring.mul_theta(rows)
            rows = np.concatenate([shifted, shifted + params.ring.const(1, len(shifted))])
            rows, _, vals = dedup_exact(rows, np.ones(len(rows)), params, k)
        else:
            cand = np.concatenate([vals, vals + pw[k]])
            vals, _ = dedup_float(cand, np.ones(len(cand)), float_tolerance(params, k))
    return vals, rows


def separation_constant(params: ParameterSet, n_max: int, exact: bool | None = None) -> list:
    """(n, smallest nonzero gap between level-n digit sums divided by lam^n) for n = 1..n_max."""
    _require_binary(params)
    if not 1 <= n_max <= MAX_SEPARATION_DEPTH:
        raise DepthTooLarge(f"n_max must lie in 1..{MAX_SEPARATION_DEPTH}")
    exact = params.exact_available if exact is None else exact
    out = []
    vals = np.zeros(1)
    rows = params.require_exact().zeros(1) if exact else None
    pw = params.powers(n_max)
    for n in range(1, n_max + 1):
        if exact:
            ring = params.ring
            shifted = ring.mul_theta(rows)
            rows = np.concatenate([shifted, shifted + ring.const(1, len(shifted))])
            rows, _, vals = dedup_exact(rows, np.ones(len(rows)), params, n)
            # (F_{i+1} - F_i)(theta) = gap / lam^n
            gap = float(np.min(ring.to_float(rows[1:] - rows[:-1])))
        else:
            cand = np.concatenate([vals, vals + pw[n]])
            vals, _ = dedup_float(cand, np.ones(len(cand)), float_tolerance(params, n))
            gap = float(np.min(np.diff(vals))) / pw[n]
        out.append((n, gap))
    return out


def separation_floor(params: ParameterSet, n_max: int, exact: bool | None = None) -> float:
    return min(g for _, g in separation_constant(params, n_max, exact))


def gap_depth(params: ParameterSet, c1_estimate: float) -> int:
    """Smallest l >= 1 with lam^(l+1) / (1 - lam) < c1.

    A relative margin of 1e-9 keeps borderline equalities (which hold
    exactly at Pisot reciprocals) on the safe side.
    """
    if c1_estimate <= 0:
        raise InvalidParameters("c1 estimate must be positive")
    target = c1_estimate * (1 - 1e-9)
    ell = 1
    while params.lam ** (ell + 1) / (1 - params.lam) >= target:
        ell += 1
    return ell
