"""Finite atomic measures: the random empirical measures mu_n of one labelled
tree, the deterministic self-similar approximants nu_n, histograms and
total-variation distance on a grid.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateRange, DepthTooLarge, InvalidParameters
from .params import ParameterSet
from .tree import MAX_LEAVES, LabelOracle, _check_full, replicate_keys, word_counts

_EPS = np.finfo(float).eps


def float_tolerance(params: ParameterSet, n: int) -> float:
    """Distance below which two float level-n values are treated as one atom.

    The larger of 1e-12 * lam^n and a bound on the rounding error of an
    n-term digit sum.
    """
    rounding = 4.0 * max(n, 1) * _EPS * params.max_abs_digit * params.lam / (1.0 - params.lam)
    return max(1e-12 * params.lam**n, rounding)


@dataclass(frozen=True)
class WeightedAtoms:
    """Atomic probability measure with strictly increasing positions.

    ``exact`` optionally holds Z[theta] rows equal to theta^scale * position.
    """

    positions: np.ndarray
    weights: np.ndarray
    exact: np.ndarray | None = None
    scale: int = 0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if pos.shape != w.shape or pos.ndim != 1:
            raise InvalidParameters("positions and weights must be 1-d arrays of equal length")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise InvalidParameters("weights must be positive and sum to 1")
        if np.any(np.diff(pos) <= 0):
            raise InvalidParameters("positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.positions)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.positions[0]), float(self.positions[-1])

    def mean(self) -> float:
        return float(self.positions @ self.weights)

    def fourier(self, t) -> np.ndarray:
        """sum_x w_x exp(i t x) at each frequency in ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.exp(1j * np.outer(t, self.positions)) @ self.weights

    def rows(self):
        return zip(self.positions.tolist(), self.weights.tolist())


def dedup_float(values, weights, tol: float):
    """Sort and merge values closer than ``tol`` to their predecessor; sums weights."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.size == 0:
        return values, weights
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    start = np.concatenate([[True], np.diff(v) > tol])
    group = np.cumsum(start) - 1
    return v[start], np.bincount(group, weights=w)


def _exact_sort(rows: np.ndarray, params: ParameterSet, fv: np.ndarray) -> np.ndarray:
    """Order of rows by exact value, starting from the float order."""
    ring = params.ring
    order = np.argsort(fv, kind="stable")
    if len(order) < 2:
        return order
    r = rows[order]
    if np.all(ring.sign(r[1:] - r[:-1]) > 0):
        return order

    def cmp(i, j):
        return int(ring.sign(rows[i] - rows[j])[0])

    return np.array(sorted(range(len(rows)), key=functools.cmp_to_key(cmp)), dtype=np.int64)


def dedup_exact(rows: np.ndarray, weights, params: ParameterSet, scale: int):
    """Merge identical Z[theta] rows (all at the same scale) and sort by exact value.

    Returns (rows, weights, float positions).
    """
    ring = params.require_exact()
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    uniq, inv = np.unique(rows, axis=0, return_inverse=True)
    w = np.bincount(inv.ravel(), weights=np.asarray(weights, dtype=float))
    fv = ring.to_float(uniq) / ring.theta**scale
    order = _exact_sort(uniq, params, fv)
    return uniq[order], w[order], fv[order]


def _resolve_exact(params: ParameterSet, exact: bool | None) -> bool:
    if exact is None:
        return params.exact_available
    if exact:
        params.require_exact()
    return bool(exact)


def mu_n(oracle: LabelOracle, n: int, exact: bool | None = None) -> WeightedAtoms:
    """Empirical measure l^-n sum_{|v|=n} delta_{f(v)} of one labelled tree.

    Duplicate values are merged exactly when a minimal polynomial is known
    (default), otherwise within ``float_tolerance``.
    """
    p = oracle.params
    total = _check_full(p, n)
    exact = _resolve_exact(p, exact)
    if n == 0:
        return WeightedAtoms(np.zeros(1), np.ones(1), p.ring.zeros(1) if exact else None, 0)
    uniq, counts = word_counts(oracle, n)
    weights = counts / total
    if exact:
        from .tree import exact_rows

        rows, w, fv = dedup_exact(exact_rows(uniq, p), weights, p, n)
        return WeightedAtoms(fv, w, rows, n)
    from .tree import words_to_values

    fv, w = dedup_float(words_to_values(uniq, p), weights, float_tolerance(p, n))
    return WeightedAtoms(fv, w)


def nu_n(params: ParameterSet, n: int, exact: bool | None = None) -> WeightedAtoms:
    """Law of sum_{j<=n} b_j lam^j with i.i.d. digits b_j ~ eta, duplicates merged."""
    if n < 0:
        raise InvalidParameters("depth must be nonnegative")
    exact = _resolve_exact(params, exact)
    pw = params.powers(n)
    probs = np.array(params.probs)
    dv = params.digit_array
    pos = np.zeros(1)
    w = np.ones(1)
    ring = params.ring if exact else None
    rows = ring.zeros(1) if exact else None
    ints = np.array([int(d) for d in params.digits], dtype=np.int64) if exact else None
    for k in range(1, n + 1):
        if len(pos) * params.m > MAX_LEAVES:
            raise DepthTooLarge(f"nu_n at depth {k} needs more than 2^26 atoms before merging")
        pos = (pos[:, None] + dv[None, :] * pw[k]).ravel()
        w = (w[:, None] * probs[None, :]).ravel()
        if exact:
            shifted = ring.mul_theta(rows)
            rows = (shifted[:, None, :] + np.outer(ints, np.eye(ring.degree, dtype=np.int64)[0])[None]
                    ).reshape(-1, ring.degree)
            rows, w, pos = dedup_exact(rows, w, params, k)
        else:
            pos, w = dedup_float(pos, w, float_tolerance(params, k))
    return WeightedAtoms(pos, w / w.sum(), rows, n)


def refine_front(atoms: WeightedAtoms, params: ParameterSet, tol: float = 1e-12) -> WeightedAtoms:
    """One self-similarity step: sum_d p_d (x -> lam*(d + x)) pushed forward."""
    pos = (params.lam * (params.digit_array[:, None] + atoms.positions[None, :])).ravel()
    w = (np.array(params.probs)[:, None] * atoms.weights[None, :]).ravel()
    pos, w = dedup_float(pos, w, tol)
    return WeightedAtoms(pos, w)


def average_mu_n(params: ParameterSet, n: int, reps: int, seed: int) -> WeightedAtoms:
    """Seed average of mu_n over ``reps`` independent labelled trees."""
    total = _check_full(params, n)
    if reps < 1:
        raise InvalidParameters("reps must be >= 1")
    if reps * total > MAX_LEAVES:
        raise DepthTooLarge(f"{reps} replicates of {total} leaves exceeds the limit 2^26")
    vals = kernels.leaf_values_batch(replicate_keys(seed, reps), params.arity, n,
                                     params.thresholds, params.digit_array, params.powers(n))
    pos, w = dedup_float(vals.ravel(), np.full(vals.size, 1.0 / vals.size), float_tolerance(params, n))
    return WeightedAtoms(pos, w / w.sum())


# -- histograms ------------------------------------------------------------

@dataclass(frozen=True)
class Binning:
    """``bins`` equal bins over [lo, hi]; half-open except the closed last bin."""

    lo: float
    hi: float
    bins: int

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise DegenerateRange(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.bins) != self.bins or self.bins < 1:
            raise DegenerateRange(f"bins must be a positive integer, got {self.bins}")

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.bins + 1)

    def assign(self, values):
        """Bin index of each value, out-of-range values clipped to the edge bins.

        Returns (indices, n_below, n_above).
        """
        v = np.asarray(values, dtype=float)
        idx = np.searchsorted(self.edges, v, side="right") - 1
        below = int(np.count_nonzero(v < self.lo))
        above = int(np.count_nonzero(v > self.hi))
        return np.clip(idx, 0, self.bins - 1), below, above

    def masses(self, atoms: WeightedAtoms) -> np.ndarray:
        idx, _, _ = self.assign(atoms.positions)
        return np.bincount(idx, weights=atoms.weights, minlength=self.bins)


@dataclass(frozen=True)
class Histogram:
    lo: float
    hi: float
    counts: np.ndarray
    total: int
    below: int = 0
    above: int = 0

    @property
    def bins(self) -> int:
        return len(self.counts)

    @property
    def edges(self) -> np.ndarray:
        return Binning(self.lo, self.hi, self.bins).edges

    def as_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "bins": self.bins, "total": self.total,
                "below": self.below, "above": self.above,
                "counts": [int(c) for c in self.counts]}


def histogram(values, lo: float, hi: float, bins: int) -> Histogram:
    """Counts of ``values`` in ``bins`` equal bins over [lo, hi].

    Values outside the range land in the nearest edge bin and are tallied
    in ``below`` / ``above``.
    """
    grid = Binning(lo, hi, bins)
    v = np.asarray(values, dtype=float).ravel()
    idx, below, above = grid.assign(v)
    counts = np.bincount(idx, minlength=grid.bins).astype(np.int64)
    return Histogram(float(lo), float(hi), counts, int(v.size), below, above)


def tv_distance(a: WeightedAtoms, b: WeightedAtoms, grid: Binning) -> float:
    """Half the L1 distance between the bin masses of two measures."""
    return float(0.5 * np.abs(grid.masses(a) - grid.masses(b)).sum())
