"""Fourier side: characteristic functions of the digit law and of the
self-similar measure, the second moment E|mu_n^(t)|^2 of the random measure
in closed form and by Monte Carlo, its upper bound, and truncated Sobolev
norms.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import InvalidParameters, NonConvergent
from .params import ParameterSet
from .tree import _check_full, replicate_keys

MAX_FACTORS = 10**6
DEFAULT_TOL = 1e-12
# Frequencies per Monte-Carlo chunk, to bound memory.
_MC_CHUNK = 512


def eta_hat(params: ParameterSet, t):
    """Characteristic function sum_d p_d exp(i t d) of the digit law."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=complex)
    for d, p in zip(params.digits, params.probs):
        out = out + p * np.exp(1j * t * d)
    return out


def eta_hat_sq(params: ParameterSet, t) -> np.ndarray:
    return np.abs(eta_hat(params, t)) ** 2


@dataclass(frozen=True)
class SpectrumSample:
    t: np.ndarray
    value: np.ndarray
    truncation_error: np.ndarray
    factors: int

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.value)


def tail_bound(params: ParameterSet, t, n_factors: int) -> np.ndarray:
    """Bound on |1 - prod_{n > N} eta^(t lam^n)| from |1 - eta^(s)| <= max|d| |s|."""
    b = params.max_abs_digit * np.abs(np.asarray(t, dtype=float)) * params.lam ** (n_factors + 1) \
        / (1.0 - params.lam)
    return np.expm1(b)


def factors_needed(params: ParameterSet, t_abs_max: float, tol: float) -> int:
    """Smallest N with max|d| |t| lam^(N+1) / (1 - lam) <= tol."""
    scale = params.max_abs_digit * t_abs_max / (1.0 - params.lam)
    if not math.isfinite(scale):
        raise NonConvergent(f"|t|={t_abs_max:g} is too large for a truncated product")
    if scale <= tol:
        return 0
    n = math.ceil(math.log(tol / scale) / math.log(params.lam)) - 1
    n = max(n, 0)
    while scale * params.lam ** (n + 1) > tol:
        n += 1
    if n > MAX_FACTORS:
        raise NonConvergent(f"|t|={t_abs_max:g} needs {n} product factors (limit {MAX_FACTORS})")
    return n


def nu_hat(params: ParameterSet, t, tol: float = DEFAULT_TOL) -> SpectrumSample:
    """Truncated infinite product prod_{n>=1} eta^(t lam^n) with a certified error bound."""
    if tol <= 0:
        raise InvalidParameters("tol must be positive")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = factors_needed(params, float(np.max(np.abs(t))) if t.size else 0.0, tol)
    val = np.ones(t.shape, dtype=complex)
    pw = params.powers(n)
    for k in range(1, n + 1):
        val = val * eta_hat(params, t * pw[k])
    return SpectrumSample(t, val, tail_bound(params, t, n), n)


def nu_hat_sq(params: ParameterSet, t, tol: float = DEFAULT_TOL) -> np.ndarray:
    return np.abs(nu_hat(params, t, tol).value) ** 2


def _suffix_products(params: ParameterSet, n: int, t) -> np.ndarray:
    """P[k] = prod_{j=k+1}^{n} |eta^(t lam^j)|^2 for k = 0..n, shape (n+1, len(t))."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pw = params.powers(n)
    sq = np.array([eta_hat_sq(params, t * pw[j]) for j in range(1, n + 1)]).reshape(n, t.size)
    out = np.ones((n + 1, t.size))
    for k in range(n - 1, -1, -1):
        out[k] = out[k + 1] * sq[k]
    return out


def expected_mu_hat_sq(params: ParameterSet, n: int, t) -> np.ndarray:
    """Closed form of E|mu_n^(t)|^2 averaged over all label configurations.

    Two leaves whose paths split at depth k contribute prod_{j>k} |eta^(t lam^j)|^2;
    a fraction (l-1) l^(-k-1) of leaf pairs split at depth k and l^-n coincide.
    """
    if n < 1:
        raise InvalidParameters("n must be >= 1")
    ell = params.arity
    P = _suffix_products(params, n, t)
    w = (ell - 1) * float(ell) ** -(np.arange(n) + 1.0)
    out = w @ P[:n] + float(ell) ** -n
    return out if np.ndim(t) else out[0]


def expected_mu_hat_sq_limit(params: ParameterSet, t, tol: float = DEFAULT_TOL) -> np.ndarray:
    """n -> infinity limit (l-1) sum_{k>=0} l^(-k-1) |nu^(t lam^k)|^2, truncated at l^-K < tol."""
    ell = params.arity
    K = max(1, math.ceil(math.log(tol) / -math.log(ell)))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    pw = params.powers(K)
    acc = np.zeros(t.shape)
    for k in range(K):
        acc = acc + (ell - 1) * float(ell) ** -(k + 1) * nu_hat_sq(params, t * pw[k], tol)
    return acc


class MonteCarloEstimate(NamedTuple):
    estimate: np.ndarray
    stderr: np.ndarray


def mc_mu_hat_sq(params: ParameterSet, n: int, t, reps: int, seed: int) -> MonteCarloEstimate:
    """Average of |l^-n sum_v exp(i t f(v))|^2 over ``reps`` independent labelled trees."""
    if reps < 100:
        raise InvalidParameters("mc_mu_hat_sq needs reps >= 100")
    total = _check_full(params, n)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    keys = replicate_keys(seed, reps)
    samples = np.empty((reps, t.size))
    chunk = max(1, _MC_CHUNK * 256 // total)
    for start in range(0, reps, chunk):
        vals = kernels.leaf_values_batch(keys[start:start + chunk], params.arity, n,
                                         params.thresholds, params.digit_array, params.powers(n))
        for i, ti in enumerate(t):
            samples[start:start + chunk, i] = np.abs(np.exp(1j * ti * vals).mean(axis=1)) ** 2
    est = samples.mean(axis=0)
    err = samples.std(axis=0, ddof=1) / np.sqrt(reps)
    return MonteCarloEstimate(est, err)


def mu_hat_sq_upper_bound(params: ParameterSet, n: int | None, s: int, t,
                          tol: float = DEFAULT_TOL) -> np.ndarray:
    """Upper bound l^-s + (l-1) sum_{k<s} l^(-k-1) Q_k(t) for E|mu_n^(t)|^2.

    With a finite ``n``, Q_k = prod_{j=k+1}^{n} |eta^(t lam^j)|^2 and the bound
    holds for E|mu_n^|^2 itself.  With ``n=None``, Q_k = |nu^(t lam^k)|^2 and it
    bounds the limit.  The bound is tightest for t in [theta^(s-1), theta^s].
    """
    if s < 1 or (n is not None and s > n - 1):
        raise InvalidParameters(f"need 1 <= s <= n-1, got s={s}, n={n}")
    ell = params.arity
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lo, hi = params.theta ** (s - 1), params.theta**s
    if np.any((np.abs(t) < lo * (1 - 1e-12)) | (np.abs(t) > hi * (1 + 1e-12))):
        warnings.warn(f"some t lie outside [theta^{s - 1}, theta^{s}] = [{lo:g}, {hi:g}]",
                      stacklevel=2)
    if n is None:
        pw = params.powers(s)
        Q = np.array([nu_hat_sq(params, t * pw[k], tol) for k in range(s)])
    else:
        Q = _suffix_products(params, n, t)[:s]
    w = (ell - 1) * float(ell) ** -(np.arange(s) + 1.0)
    return float(ell) ** -s + w @ Q


# -- Sobolev norms ---------------------------------------------------------

@dataclass(frozen=True)
class SobolevEstimate:
    gamma: float
    t_max: float
    value: float
    converged: bool
    tail_fraction: float

    def as_dict(self) -> dict:
        return {"gamma": self.gamma, "t_max": self.t_max, "value": self.value,
                "converged": self.converged, "tail_fraction": self.tail_fraction}


def default_grid_step(params: ParameterSet) -> float:
    """Step giving 16 samples per period 2*pi/max|d| of the digit characteristic function."""
    return 2 * math.pi / params.max_abs_digit / 16


def _trapezoid_cumulative(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def sobolev_profile(params: ParameterSet, gamma: float, t_max: float,
                    grid_step: float | None = None, integrand=None):
    """Grid, and cumulative integral of 2 * g(t) t^(2 gamma) over [0, t] for t on the grid.

    ``g`` defaults to |nu^(t)|^2; the factor 2 accounts for the symmetric
    half-line.
    """
    if gamma < 0:
        raise InvalidParameters("gamma must be >= 0")
    if t_max <= 1:
        raise InvalidParameters("t_max must exceed 1")
    h = grid_step or default_grid_step(params)
    # fixed step from 0, so a larger t_max only appends grid points
    k = np.arange(math.ceil(t_max / h))
    t = np.append(k * h, t_max)
    g = nu_hat_sq(params, t) if integrand is None else integrand(t)
    y = g * t ** (2 * gamma)
    return t, 2.0 * _trapezoid_cumulative(y, t)


def sobolev_norm(params: ParameterSet, gamma: float, t_max: float,
                 grid_step: float | None = None) -> SobolevEstimate:
    """Trapezoidal estimate of int_{-T}^{T} |nu^(t)|^2 |t|^(2 gamma) dt.

    ``converged`` means [T/10, T] contributes less than 1% of the total.
    """
    t, cum = sobolev_profile(params, gamma, t_max, grid_step)
    total = float(cum[-1])
    head = float(np.interp(t_max / 10, t, cum))
    frac = (total - head) / total if total > 0 else 0.0
    return SobolevEstimate(float(gamma), float(t_max), total, frac < 0.01, frac)


class ComparisonConstants(NamedTuple):
    affine: float
    slope: float


def sobolev_comparison_constants(params: ParameterSet, gamma: float) -> ComparisonConstants:
    """Constants (C1, C2) with int_{|t|<=theta^S} E|mu^|^2 |t|^(2g) <= C1 + C2 * int_{|t|<=theta^S} |nu^|^2 |t|^(2g).

    Obtained by summing the upper bound over blocks [theta^(s-1), theta^s];
    requires lam^(1 + 2 gamma) > 1/l.
    """
    ell = params.arity
    rho = params.theta ** (1 + 2 * gamma) / ell
    if rho >= 1:
        raise InvalidParameters(f"need lam^(1+2 gamma) > 1/l; got ratio {rho:g} >= 1")
    c2 = (ell - 1) / ell / (1 - rho)
    c1 = 2 / (1 + 2 * gamma) + 2 * (1 - params.lam) * rho / (1 - rho)
    return ComparisonConstants(c1, c2)
