"""Exact arithmetic in Z[theta] for theta a real root > 1 of a monic integer polynomial.

Elements are integer coefficient vectors of length ``deg(min_poly)`` in the
basis 1, theta, ..., theta^(d-1).  Digit sums ``sum a_j lambda^j`` with
lambda = 1/theta become integer polynomials after multiplying by theta^n, so
an exact value is a vector together with a power-of-theta scale.

Signs are decided from the float embedding when the rounding error bound
allows it, otherwise by evaluating at high precision with mpmath.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DegreeOverflow, InvalidParameters, NonMonic
from .polynomial import IntPolynomial, classify

_INT_LIMIT = 2**62
_EPS = np.finfo(float).eps


class ThetaRing:
    """Z[theta] modulo a monic minimal polynomial, with vectorized row operations."""

    def __init__(self, min_poly: IntPolynomial, theta: float | None = None):
        if not min_poly.is_monic:
            raise NonMonic(f"{min_poly} is not monic")
        self.min_poly = min_poly
        self.degree = min_poly.degree
        self._tail = np.array(min_poly.coeffs[:-1], dtype=np.int64)
        if theta is None:
            theta = classify(min_poly).dominant_root
        if not np.isfinite(theta) or theta <= 1.0:
            raise InvalidParameters(f"{min_poly} has no real root above one")
        self.theta_mp = self._polish(theta)
        self.theta = float(self.theta_mp)
        self.powers = np.array([self.theta**i for i in range(self.degree)])

    def _polish(self, guess: float):
        with mpmath.workdps(120):
            f = lambda x: self.min_poly(x)  # noqa: E731
            root = mpmath.findroot(f, mpmath.mpf(guess))
            return +root

    def __eq__(self, other):
        return isinstance(other, ThetaRing) and other.min_poly == self.min_poly

    def __hash__(self):
        return hash(self.min_poly)

    # -- construction ---------------------------------------------------
    def zeros(self, n: int = 1) -> np.ndarray:
        return np.zeros((n, self.degree), dtype=np.int64)

    def const(self, c, n: int = 1) -> np.ndarray:
        out = self.zeros(n)
        out[:, 0] = c
        return out

    def reduce(self, coeffs) -> tuple[int, ...]:
        """Remainder of an integer polynomial in theta modulo the minimal polynomial."""
        work = [int(c) for c in coeffs]
        d = self.degree
        tail = [int(c) for c in self.min_poly.coeffs[:-1]]
        for top in range(len(work) - 1, d - 1, -1):
            c = work[top]
            if c:
                work[top] = 0
                for i, m in enumerate(tail):
                    work[top - d + i] -= c * m
        work = (work + [0] * d)[:d]
        if any(abs(c) >= _INT_LIMIT for c in work):
            raise DegreeOverflow("reduced coefficient exceeds the 62-bit integer range")
        return tuple(work)

    @functools.lru_cache(maxsize=256)
    def theta_power(self, k: int) -> tuple[int, ...]:
        if k < 0:
            raise ValueError("negative power")
        return self.reduce([0] * k + [1])

    # -- vectorized arithmetic ------------------------------------------
    def _check(self, v: np.ndarray) -> None:
        if v.size and np.abs(v).max() >= _INT_LIMIT // (int(np.abs(self._tail).max()) + 2):
            raise DegreeOverflow("coefficient growth exceeds the 62-bit integer range")

    def mul_theta(self, v: np.ndarray, times: int = 1) -> np.ndarray:
        """Multiply each row by theta**times."""
        out = np.asarray(v, dtype=np.int64)
        for _ in range(times):
            self._check(out)
            top = out[:, -1].copy()
            shifted = np.zeros_like(out)
            shifted[:, 1:] = out[:, :-1]
            out = shifted - top[:, None] * self._tail[None, :]
        return out

    def mul_int(self, v: np.ndarray, c: int) -> np.ndarray:
        v = np.asarray(v, dtype=np.int64)
        if v.size and np.abs(v).max() * abs(int(c)) >= _INT_LIMIT:
            raise DegreeOverflow("coefficient growth exceeds the 62-bit integer range")
        return v * int(c)

    def mul_poly(self, v: np.ndarray, coeffs) -> np.ndarray:
        """Multiply each row by the integer polynomial ``coeffs`` in theta."""
        out = self.zeros(len(v))
        acc = np.asarray(v, dtype=np.int64)
        for i, c in enumerate(coeffs):
            if i:
                acc = self.mul_theta(acc)
            if c:
                out = out + self.mul_int(acc, c)
        self._check(out)
        return out

    def to_float(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=np.int64).astype(float) @ self.powers

    def sign(self, v: np.ndarray) -> np.ndarray:
        """Exact sign (-1, 0, 1) of each row's value."""
        v = np.atleast_2d(np.asarray(v, dtype=np.int64))
        vf = v.astype(float)
        val = vf @ self.powers
        bound = 8.0 * _EPS * (self.degree + 1) * (np.abs(vf) @ self.powers) + 1e-300
        out = np.where(val > bound, 1, np.where(val < -bound, -1, 0)).astype(np.int64)
        unresolved = np.flatnonzero(np.abs(val) <= bound)
        for i in unresolved:
            row = v[i]
            if not row.any():
                continue
            out[i] = self._mp_sign(row)
        return out

    def _mp_sign(self, row) -> int:
        for dps in (60, 200, 600):
            with mpmath.workdps(dps):
                x = mpmath.mpf(0)
                for c in reversed([int(c) for c in row]):
                    x = x * self.theta_mp + c
                if abs(x) > mpmath.mpf(10) ** (-(dps - 20)):
                    return 1 if x > 0 else -1
        raise DegreeOverflow("could not resolve sign at 600 digits")

    def compare(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.sign(np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64))


@dataclass(frozen=True, eq=False)
class AlgebraicValue:
    """The real number ``coeffs(theta) / theta**scale``."""

    coeffs: tuple[int, ...]
    ring: ThetaRing
    scale: int = 0

    def _row(self, scale: int) -> np.ndarray:
        row = np.array([self.coeffs], dtype=np.int64)
        return self.ring.mul_theta(row, scale - self.scale)

    def _aligned(self, other: "AlgebraicValue"):
        if other.ring != self.ring:
            raise InvalidParameters("values live in different rings")
        s = max(self.scale, other.scale)
        return self._row(s), other._row(s), s

    def __float__(self):
        return float(self.ring.to_float(np.array([self.coeffs]))[0] / self.ring.theta**self.scale)

    def __eq__(self, other):
        if not isinstance(other, AlgebraicValue):
            return NotImplemented
        a, b, _ = self._aligned(other)
        return bool(np.array_equal(a, b))

    __hash__ = None

    def _cmp(self, other) -> int:
        a, b, _ = self._aligned(other)
        return int(self.ring.sign(a - b)[0])

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __add__(self, other):
        a, b, s = self._aligned(other)
        return AlgebraicValue(tuple(int(c) for c in (a + b)[0]), self.ring, s)

    def __sub__(self, other):
        a, b, s = self._aligned(other)
        return AlgebraicValue(tuple(int(c) for c in (a - b)[0]), self.ring, s)

    def __repr__(self):
        return f"AlgebraicValue({self.coeffs}, scale={self.scale}, ~{float(self):.15g})"


def reduce(coeffs, min_poly: IntPolynomial) -> AlgebraicValue:
    """Canonical remainder of ``sum coeffs[i] theta^i`` modulo ``min_poly``."""
    ring = ThetaRing(min_poly)
    return AlgebraicValue(ring.reduce(coeffs), ring, 0)
