"""Sorted unions of closed real intervals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import InvalidParameters


@dataclass(frozen=True)
class IntervalSet:
    """Disjoint closed intervals [lo_i, hi_i] with lo_i <= hi_i < lo_{i+1}."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).ravel()
        hi = np.asarray(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise InvalidParameters("lo and hi must have equal length")
        if np.any(hi < lo):
            raise InvalidParameters("interval with hi < lo")
        if np.any(lo[1:] <= hi[:-1]):
            raise InvalidParameters("intervals must be sorted and separated")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def union_of(cls, lo, hi, slack: float = 0.0) -> "IntervalSet":
        """Union of arbitrary closed intervals; pieces closer than ``slack`` are joined."""
        lo = np.asarray(lo, dtype=float).ravel()
        hi = np.asarray(hi, dtype=float).ravel()
        if lo.size == 0:
            return cls(lo, hi)
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
        reach = np.maximum.accumulate(hi)
        start = np.concatenate([[True], lo[1:] > reach[:-1] + slack])
        group = np.cumsum(start) - 1
        out_hi = np.full(group[-1] + 1, -np.inf)
        np.maximum.at(out_hi, group, hi)
        return cls(lo[start], out_hi)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]], slack: float = 0.0) -> "IntervalSet":
        pairs = list(pairs)
        if not pairs:
            return cls(np.zeros(0), np.zeros(0))
        lo, hi = zip(*pairs)
        return cls.union_of(lo, hi, slack)

    def __len__(self):
        return len(self.lo)

    def __iter__(self):
        return iter(zip(self.lo.tolist(), self.hi.tolist()))

    @property
    def empty(self) -> bool:
        return len(self.lo) == 0

    @property
    def hull(self) -> tuple[float, float]:
        return float(self.lo[0]), float(self.hi[-1])

    def total_length(self) -> float:
        return float(np.sum(self.hi - self.lo))

    def union(self, other: "IntervalSet", slack: float = 0.0) -> "IntervalSet":
        return IntervalSet.union_of(np.concatenate([self.lo, other.lo]),
                                    np.concatenate([self.hi, other.hi]), slack)

    def locate(self, x) -> np.ndarray:
        """Index of the interval containing each point, or -1."""
        x = np.asarray(x, dtype=float)
        i = np.searchsorted(self.lo, x, side="right") - 1
        ok = (i >= 0) & (x <= self.hi[np.clip(i, 0, None)]) if len(self) else np.zeros(x.shape, bool)
        return np.where(ok, i, -1)

    def contains_interval(self, a: float, b: float, slack: float = 0.0) -> bool:
        if self.empty:
            return False
        i = np.searchsorted(self.lo, a + slack, side="right") - 1
        return bool(i >= 0 and self.lo[i] <= a + slack and self.hi[i] >= b - slack)

    def contains(self, other: "IntervalSet", slack: float = 0.0) -> bool:
        """Whether every interval of ``other`` lies inside one interval of ``self``."""
        return all(self.contains_interval(a, b, slack) for a, b in other)

    def gaps(self, within: tuple[float, float] | None = None) -> list[tuple[float, float]]:
        """Open components of the complement, between the intervals (and ``within`` bounds)."""
        out = list(zip(self.hi[:-1].tolist(), self.lo[1:].tolist()))
        if within is not None:
            a, b = within
            if self.empty:
                return [(a, b)]
            out = [(max(x, a), min(y, b)) for x, y in out if y > a and x < b]
            if self.lo[0] > a:
                out.insert(0, (a, min(float(self.lo[0]), b)))
            if self.hi[-1] < b:
                out.append((max(float(self.hi[-1]), a), b))
        return out
