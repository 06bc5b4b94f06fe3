"""Model parameters: contraction ratio, digit law, tree arity, optional minimal polynomial."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algebra import AlgebraicValue, ThetaRing
from .errors import ExactModeUnavailable, InvalidParameters
from .polynomial import IntPolynomial, classify

# Exact digit sums are limited to this many terms to keep coefficients in range.
EXACT_MAX_DEPTH = 64


@dataclass(frozen=True)
class ParameterSet:
    """BRW parameters.

    ``digits`` and ``probs`` describe the label law eta = sum p_d delta_d.
    When ``min_poly`` is given, ``lam`` is re-derived as 1/theta from its
    dominant real root.
    """

    lam: float
    arity: int = 2
    digits: tuple[float, ...] = (0.0, 1.0)
    probs: tuple[float, ...] = (0.5, 0.5)
    min_poly: IntPolynomial | None = None
    ring: ThetaRing | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        digits = tuple(float(d) for d in self.digits)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "digits", digits)
        object.__setattr__(self, "probs", probs)
        if int(self.arity) != self.arity or self.arity < 2:
            raise InvalidParameters(f"arity must be an integer >= 2, got {self.arity}")
        object.__setattr__(self, "arity", int(self.arity))
        if len(digits) == 0 or len(digits) != len(probs):
            raise InvalidParameters("digits and probabilities must be nonempty and of equal length")
        if len(set(digits)) != len(digits):
            raise InvalidParameters(f"digit values must be distinct: {digits}")
        if any(p <= 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise InvalidParameters(f"probabilities must be positive and sum to 1: {probs}")
        if self.min_poly is not None:
            ring = self.ring or ThetaRing(self.min_poly)
            if not np.isnan(self.lam) and abs(self.min_poly(1.0 / self.lam)) >= 1e-9:
                raise InvalidParameters(
                    f"lambda={self.lam} is not the reciprocal of a root of {self.min_poly}")
            object.__setattr__(self, "ring", ring)
            object.__setattr__(self, "lam", 1.0 / ring.theta)
        if not (0.0 < self.lam < 1.0):
            raise InvalidParameters(f"lambda must lie in (0, 1), got {self.lam}")

    # -- constructors ----------------------------------------------------
    @classmethod
    def from_minpoly(cls, poly: IntPolynomial | str, **kw) -> "ParameterSet":
        if isinstance(poly, str):
            poly = IntPolynomial.parse(poly)
        ring = ThetaRing(poly, classify(poly).dominant_root)
        return cls(lam=float("nan"), min_poly=poly, ring=ring, **kw)

    @classmethod
    def uniform(cls, lam: float, digits: Sequence[float] = (0, 1), arity: int = 2,
                min_poly: IntPolynomial | None = None) -> "ParameterSet":
        m = len(digits)
        return cls(lam=lam, arity=arity, digits=tuple(digits), probs=(1.0 / m,) * m,
                   min_poly=min_poly)

    def with_digits(self, digits, probs=None) -> "ParameterSet":
        probs = probs or (1.0 / len(digits),) * len(digits)
        return ParameterSet(self.lam, self.arity, tuple(digits), tuple(probs),
                            self.min_poly, self.ring)

    # -- derived quantities ----------------------------------------------
    @property
    def theta(self) -> float:
        return 1.0 / self.lam

    @property
    def m(self) -> int:
        return len(self.digits)

    @property
    def max_abs_digit(self) -> float:
        return max(abs(d) for d in self.digits)

    @property
    def digit_array(self) -> np.ndarray:
        return np.array(self.digits)

    @property
    def thresholds(self) -> np.ndarray:
        """Cumulative probabilities used to turn a uniform draw into a digit index."""
        return np.cumsum(self.probs)[:-1].astype(float)

    @property
    def hull(self) -> tuple[float, float]:
        """Smallest interval containing every digit sum: [min d, max d] * lam/(1-lam)."""
        r = self.lam / (1.0 - self.lam)
        return min(self.digits) * r, max(self.digits) * r

    @property
    def integer_digits(self) -> bool:
        return all(float(d).is_integer() for d in self.digits)

    @property
    def exact_available(self) -> bool:
        return self.min_poly is not None and self.integer_digits

    def require_exact(self) -> ThetaRing:
        if self.min_poly is None:
            raise ExactModeUnavailable("exact mode needs a minimal polynomial (--minpoly)")
        if not self.integer_digits:
            raise ExactModeUnavailable("exact mode needs integer digit values")
        return self.ring

    def powers(self, n: int) -> np.ndarray:
        """lam^0 .. lam^n by repeated multiplication (bit-identical across backends)."""
        out = np.empty(n + 1)
        out[0] = 1.0
        for k in range(1, n + 1):
            out[k] = out[k - 1] * self.lam
        return out

    def as_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "arity": self.arity,
            "digits": list(self.digits),
            "probs": list(self.probs),
            "min_poly": self.min_poly.format() if self.min_poly else None,
        }


def digit_sum_value(digits: Sequence[int], params: ParameterSet, exact: bool = True):
    """Value of ``sum_j d_{a_j} lam^j`` for a sequence of digit indices a_1..a_n.

    In exact mode returns an AlgebraicValue with scale n (the sum times
    theta^n); otherwise a float by Horner evaluation.
    """
    idx = [int(a) for a in digits]
    if any(a < 0 or a >= params.m for a in idx):
        raise InvalidParameters(f"digit index out of range 0..{params.m - 1}")
    if exact:
        ring = params.require_exact()
        if len(idx) > EXACT_MAX_DEPTH:
            raise InvalidParameters(f"exact digit sums are limited to {EXACT_MAX_DEPTH} terms")
        vals = [int(params.digits[a]) for a in idx]
        # theta^n * sum a_j theta^-j = sum a_j theta^(n-j), built by Horner in theta.
        row = ring.zeros(1)
        for v in vals:
            row = ring.mul_theta(row)
            row[0, 0] += v
        return AlgebraicValue(tuple(int(c) for c in row[0]), ring, len(vals))
    acc = 0.0
    for a in reversed(idx):
        acc = params.lam * (params.digits[a] + acc)
    return acc


