"""Digit expansions x = sum_j a_j lam^j: branch enumeration, the greedy
expansion and the interval covering test for binary digits.

After emitting digits a_1..a_k the scaled residual is
r_k = (x - sum_{j<=k} a_j lam^j) / lam^k, and r_{k+1} = theta * r_k - a_{k+1}.
A prefix extends to a full expansion exactly when every residual stays in
the hull [min d, max d] * lam/(1-lam).

Exact arithmetic is used throughout: Z[theta] when a minimal polynomial is
known (x must then be rational), otherwise rational arithmetic in the
binary fraction that the float lam denotes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (CoverFailed, DepthTooLarge, DigitSetUnsupported, InvalidParameters,
                     NonConvergent, ResidualOutOfRange)
from .intervals import IntervalSet
from .params import ParameterSet

RESIDUAL_TOL = 1e-12
COVER_SLACK = 1e-12
MAX_STATES = 2**22
MAX_COVER_DEPTH = 100_000


@dataclass(frozen=True)
class ExpansionState:
    residual: float
    depth: int = 0
    prefix: tuple = field(default=())


def residual_range(params: ParameterSet) -> tuple[float, float]:
    """Interval the scaled residual must stay in: [min d, max d] * lam / (1 - lam)."""
    return params.hull


def children(state: ExpansionState, params: ParameterSet) -> set[float]:
    """Digits d with theta * residual - d back in the residual range."""
    lo, hi = residual_range(params)
    r = state.residual
    if r < lo - RESIDUAL_TOL or r > hi + RESIDUAL_TOL:
        raise ResidualOutOfRange(f"residual {r!r} outside [{lo!r}, {hi!r}]")
    out = set()
    for d in params.digits:
        nxt = r / params.lam - d
        if lo - RESIDUAL_TOL <= nxt <= hi + RESIDUAL_TOL:
            out.add(d)
    return out


def step(state: ExpansionState, digit: float, params: ParameterSet) -> ExpansionState:
    return ExpansionState(state.residual / params.lam - digit, state.depth + 1,
                          state.prefix + (digit,))


# -- exact residual arithmetic ---------------------------------------------

def as_fraction(x) -> Fraction:
    """Rational value of ``x``; floats are read through their shortest decimal form."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


class _RingResiduals:
    """Residuals q * r_k as Z[theta] rows, for x = p / q."""

    def __init__(self, params: ParameterSet, x):
        self.ring = params.require_exact()
        fx = as_fraction(x)
        self.p, self.q = fx.numerator, fx.denominator
        self.ints = [int(d) for d in params.digits]
        self.dmin, self.dmax = min(self.ints), max(self.ints)

    def start(self) -> np.ndarray:
        return self.ring.const(self.p)

    def valid(self, rows: np.ndarray) -> np.ndarray:
        """Rows R with q*dmin <= (theta - 1) R <= q*dmax."""
        scaled = self.ring.mul_theta(rows) - rows
        low = self.ring.sign(scaled - self.ring.const(self.q * self.dmin, len(rows))) >= 0
        high = self.ring.sign(self.ring.const(self.q * self.dmax, len(rows)) - scaled) >= 0
        return low & high

    def advance(self, rows: np.ndarray, digit: int) -> np.ndarray:
        return self.ring.mul_theta(rows) - self.ring.const(digit * self.q, len(rows))

    def to_float(self, rows: np.ndarray) -> np.ndarray:
        return self.ring.to_float(rows) / self.q


class _RationalResiduals:
    """Residuals with lam taken as the exact binary fraction u / 2^e of the float.

    The level-k residual is stored as an integer N with r_k = N / (q u^k), so
    a step is N' = 2^e N - d q u^(k+1) and no gcd is ever taken.
    """

    def __init__(self, params: ParameterSet, x):
        lam = Fraction(params.lam)
        self.u, den = lam.numerator, lam.denominator
        self.e = den.bit_length() - 1
        fx = Fraction(x)
        self.p, self.q = fx.numerator, fx.denominator
        self.digits = [Fraction(d) for d in params.digits]
        if any(d.denominator != 1 for d in self.digits):
            # Scale x and digits by a common denominator so digits are integers.
            lcm = 1
            for d in self.digits:
                lcm = lcm * d.denominator // np.gcd(lcm, d.denominator)
            self.digits = [d * lcm for d in self.digits]
            self.p *= lcm
        self.ints = [int(d) for d in self.digits]
        self.dmin, self.dmax = min(self.ints), max(self.ints)
        self.gap = den - self.u  # lam/(1-lam) = u / gap

    def start(self) -> int:
        return self.p

    def inside(self, n: int, k: int) -> bool:
        """dmin u/gap <= N/(q u^k) <= dmax u/gap."""
        scale = self.q * self.u ** (k + 1)
        lhs = n * self.gap
        return self.dmin * scale <= lhs <= self.dmax * scale

    def advance(self, n: int, digit: int, k: int) -> int:
        return (n << self.e) - digit * self.q * self.u ** (k + 1)


def _check_x(params: ParameterSet, x) -> None:
    lo, hi = residual_range(params)
    xf = float(x)
    if not (lo - RESIDUAL_TOL <= xf <= hi + RESIDUAL_TOL):
        raise ResidualOutOfRange(f"x={xf!r} outside [{lo!r}, {hi!r}]")


def _use_ring(params: ParameterSet, exact: bool | None) -> bool:
    if exact is None:
        return params.exact_available
    if exact:
        params.require_exact()
    return bool(exact)


def count_prefixes(x, params: ParameterSet, depth: int, exact: bool | None = None) -> int:
    """Number of digit prefixes of length ``depth`` that extend to an expansion of x.

    Prefixes reaching the same residual are merged, so the work is bounded
    by the number of distinct residuals per level.
    """
    if depth < 0:
        raise InvalidParameters("depth must be nonnegative")
    _check_x(params, x)
    if _use_ring(params, exact):
        res = _RingResiduals(params, x)
        rows = res.start()
        if not res.valid(rows)[0]:
            raise ResidualOutOfRange(f"x={x} outside the residual range")
        counts = np.ones(1, dtype=np.int64)
        for _ in range(depth):
            nxt, cnt = [], []
            for d in res.ints:
                child = res.advance(rows, d)
                keep = res.valid(child)
                nxt.append(child[keep])
                cnt.append(counts[keep])
            allrows = np.concatenate(nxt)
            if len(allrows) == 0:
                return 0
            rows, inv = np.unique(allrows, axis=0, return_inverse=True)
            counts = np.bincount(inv.ravel(), weights=np.concatenate(cnt)).astype(np.int64)
            if len(rows) > MAX_STATES:
                raise DepthTooLarge(f"more than {MAX_STATES} distinct residuals")
        return int(counts.sum())
    res = _RationalResiduals(params, x)
    if not res.inside(res.start(), 0):
        raise ResidualOutOfRange(f"x={x} outside the residual range")
    states = {res.start(): 1}
    for k in range(depth):
        nxt: dict[int, int] = {}
        for n, c in states.items():
            for d in res.ints:
                child = res.advance(n, d, k)
                if res.inside(child, k + 1):
                    nxt[child] = nxt.get(child, 0) + c
        states = nxt
        if len(states) > MAX_STATES:
            raise DepthTooLarge(f"more than {MAX_STATES} distinct residuals")
    return sum(states.values())


def enumerate_prefixes(x, params: ParameterSet, depth: int) -> list[tuple]:
    """All extendable prefixes of length ``depth`` (float residual test), for small depths."""
    out = []
    stack = [ExpansionState(float(x))]
    while stack:
        s = stack.pop()
        if s.depth == depth:
            out.append(s.prefix)
            continue
        for d in sorted(children(s, params)):
            stack.append(step(s, d, params))
    return sorted(out)


def greedy(x, params: ParameterSet, depth: int, exact: bool | None = None) -> list[float]:
    """Expansion digits d_1..d_depth choosing the largest admissible digit at every step."""
    if depth < 0:
        raise InvalidParameters("depth must be nonnegative")
    _check_x(params, x)
    digits_desc = sorted(params.digits, reverse=True)
    out: list[float] = []
    if _use_ring(params, exact):
        res = _RingResiduals(params, x)
        row = res.start()
        if not res.valid(row)[0]:
            raise ResidualOutOfRange(f"x={x} outside the residual range")
        for _ in range(depth):
            for d in digits_desc:
                child = res.advance(row, int(d))
                if res.valid(child)[0]:
                    row = child
                    out.append(d)
                    break
        return out
    res = _RationalResiduals(params, x)
    n = res.start()
    if not res.inside(n, 0):
        raise ResidualOutOfRange(f"x={x} outside the residual range")
    order = sorted(zip(res.ints, params.digits), reverse=True)
    for k in range(depth):
        for d_int, d in order:
            child = res.advance(n, d_int, k)
            if res.inside(child, k + 1):
                n = child
                out.append(d)
                break
    return out


def eq_star_depth(params: ParameterSet) -> int | None:
    """Smallest L >= 3 with lam^2 + ... + lam^L > 1, or None when lam^2 / (1 - lam) <= 1."""
    if params.min_poly is not None:
        ring = params.ring
        # lam^2/(1-lam) > 1  <=>  theta + 1 - theta^2 > 0
        if ring.sign(np.array([ring.reduce([1, 1, -1])]))[0] <= 0:
            return None
        L = 3
        while L <= MAX_COVER_DEPTH:
            # theta^L (sum_{j=2}^L lam^j - 1) = sum_{j=2}^L theta^(L-j) - theta^L
            coeffs = [1] * (L - 1) + [0, -1]
            if ring.sign(np.array([ring.reduce(coeffs)]))[0] > 0:
                return L
            L += 1
        raise NonConvergent(f"no L <= {MAX_COVER_DEPTH} found")
    lam = params.lam
    if lam * lam / (1 - lam) <= 1 + 1e-12:
        return None
    total = lam * lam
    L = 2
    while total <= 1:
        L += 1
        total += lam**L
        if L > MAX_COVER_DEPTH:
            raise NonConvergent(f"no L <= {MAX_COVER_DEPTH} found")
    return max(L, 3)


# -- covering test ---------------------------------------------------------

@dataclass(frozen=True)
class CoverReport:
    """Result of checking that U = (alpha, beta) is covered by both level-L families.

    ``margin`` is the smallest overlap between consecutive covering intervals
    inside U (capped at |U|); ``subinterval_length`` is the resulting admissible
    subinterval length (zero on failure).
    """

    L: int
    alpha: float
    beta: float
    margin: float
    witness_gaps: list
    family_margins: tuple
    subinterval_length: float

    @property
    def success(self) -> bool:
        return self.margin > 0 and not self.witness_gaps

    def as_dict(self) -> dict:
        return {"L": self.L, "alpha": self.alpha, "beta": self.beta, "success": self.success,
                "margin": self.margin, "subinterval_length": self.subinterval_length,
                "witness_gaps": [list(g) for g in self.witness_gaps]}


def xi(word: Sequence[int], lam: float) -> float:
    """sum_j word_j lam^j."""
    acc = 0.0
    for a in reversed(word):
        acc = lam * (a + acc)
    return acc


def u_interval(lam: float, L: int) -> tuple[float, float]:
    a = lam**L / (1 - lam**L)
    return a, lam / (1 - lam) - a


def family(lam: float, L: int, last: int, prefix: Sequence[int] = ()) -> np.ndarray:
    """Endpoints of xi(prefix + a + last) + lam^(|prefix| + L) U for all a in {0,1}^(L-1)."""
    alpha, beta = u_interval(lam, L)
    n = len(prefix) + L
    words = ((np.arange(2 ** (L - 1))[:, None] >> np.arange(L - 2, -1, -1)[None, :]) & 1)
    base = np.array([xi(list(prefix) + list(w) + [last], lam) for w in words])
    scale = lam**n
    return np.column_stack([base + scale * alpha, base + scale * beta])


def _family_margin(ends: np.ndarray, lo: float, hi: float, slack: float):
    """Smallest overlap of consecutive covering intervals across (lo, hi), and the gaps.

    For x in (lo, hi), reach(x) is the furthest right endpoint of an interval
    starting at or before x; a subinterval [x, x+c] of (lo, hi) fits in one
    interval iff c <= reach(x) - x or reach(x) >= hi.
    """
    order = np.argsort(ends[:, 0], kind="stable")
    left, right = ends[order, 0], ends[order, 1]
    gaps = []
    margin = hi - lo
    start = left <= lo + slack
    if not start.any():
        gaps.append((lo, float(left.min())))
        reach = lo
    else:
        reach = float(right[start].max())
    for a, b in zip(left[~start], right[~start]):
        if a >= hi - slack:
            break
        if reach < hi:
            margin = min(margin, reach - a)
            if a >= reach:
                gaps.append((reach, float(a)))
        reach = max(reach, float(b))
    if reach < hi - slack:
        gaps.append((reach, hi))
        margin = min(margin, reach - hi)
    return margin, gaps


def _require_binary(params: ParameterSet) -> None:
    if sorted(params.digits) != [0.0, 1.0]:
        raise DigitSetUnsupported("the covering test needs the digit set {0, 1}")


def cover_check(params: ParameterSet, L: int | None = None, slack: float = COVER_SLACK) -> CoverReport:
    """Check U = (alpha, beta) is covered by the intervals U_{a0} and by the U_{a1}, |a| = L-1.

    The endpoints alpha and beta are allowed to touch the covering union
    (they are exact endpoints of U_{0..01} and U_{1..10}); interior junctions
    must overlap strictly.
    """
    _require_binary(params)
    if L is None:
        L = eq_star_depth(params)
        if L is None:
            raise InvalidParameters(f"lambda={params.lam} <= g: no admissible L, pass one explicitly")
    if L < 2:
        raise InvalidParameters("L must be >= 2")
    lam = params.lam
    alpha, beta = u_interval(lam, L)
    if beta <= alpha:
        return CoverReport(L, alpha, beta, beta - alpha, [(alpha, beta)], (0.0, 0.0), 0.0)
    margins, gaps, contained = [], [], True
    for last in (0, 1):
        ends = family(lam, L, last)
        m, g = _family_margin(ends, alpha, beta, slack)
        union = IntervalSet.union_of(ends[:, 0], ends[:, 1])
        contained = contained and union.contains_interval(alpha, beta, slack)
        margins.append(m)
        gaps.extend(g)
    margin = min(margins)
    ok = margin > 0 and not gaps and contained
    clamp = lam**L * (beta - alpha) / 4
    c = min(margin, clamp) * (1 - 1e-9) if ok else 0.0
    return CoverReport(L, alpha, beta, margin, sorted(gaps), tuple(margins), c)


def lemma31_constant(params: ParameterSet, L: int | None = None) -> float:
    """Length c > 0 such that any J in U with |J| <= c lies in one U_{a0} and one U_{a'1}.

    Clamped strictly below lam^L |U| / 4.
    """
    rep = cover_check(params, L)
    if not rep.success:
        raise CoverFailed(f"covering fails at lambda={params.lam}, L={rep.L}; gaps {rep.witness_gaps[:3]}")
    return rep.subinterval_length


def rescaled_margin(params: ParameterSet, L: int, prefix: Sequence[int]) -> float:
    """Junction margin of the families U_{prefix a j} across U_prefix, divided by lam^|prefix|."""
    _require_binary(params)
    lam = params.lam
    alpha, beta = u_interval(lam, L)
    n = len(prefix)
    base = xi(prefix, lam)
    lo, hi = base + lam**n * alpha, base + lam**n * beta
    m = min(_family_margin(family(lam, L, last, prefix), lo, hi, COVER_SLACK * lam**n)[0]
            for last in (0, 1))
    return m / lam**n
