"""Random digit labels on the l-ary tree, leaf values and Galton-Watson clusters.

Labels come from a counter-based hash of (seed, depth, vertex index), so any
vertex can be queried lazily and a vertex always sees the same digit no matter
which path or order it was reached by.  Vertices are addressed by their
depth and their base-l index within that level (0-based branches, depth-first
order), stored as a 128-bit (hi, lo) pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import DepthTooLarge, InvalidParameters
from .params import EXACT_MAX_DEPTH, ParameterSet

# Full enumeration is limited to this many leaves.
MAX_LEAVES = 2**26
# Vertex indices are 128-bit, which bounds the depth of a binary tree.
MAX_PATH_BITS = 128
DEFAULT_SEED = 20240229

_STREAM_MULT = 0xD6E8FEB86659FD93
_MASK = (1 << 64) - 1


def derive_seed(seed: int, stream: int) -> int:
    """Independent 64-bit seed for replicate ``stream`` of a run seeded with ``seed``."""
    base = kernels.mix64_int(int(seed) & _MASK)
    return kernels.mix64_int((base + int(stream) * _STREAM_MULT) & _MASK)


def derive_seeds(seed: int, count: int) -> np.ndarray:
    """Vectorized ``derive_seed`` for streams 0..count-1."""
    base = np.uint64(kernels.mix64_int(int(seed) & _MASK))
    with np.errstate(over="ignore"):
        z = base + np.arange(count, dtype=np.uint64) * np.uint64(_STREAM_MULT)
    # mix64 adds its increment internally, matching mix64_int.
    return kernels.mix64(z)


def replicate_keys(seed: int, count: int) -> np.ndarray:
    """Hash keys of the label oracles for replicates 0..count-1."""
    return kernels.mix64(derive_seeds(seed, count))


def path_index(path: Sequence[int], arity: int) -> tuple[int, int]:
    """(hi, lo) words of the base-``arity`` integer spelled by ``path``."""
    idx = 0
    for b in path:
        if not 0 <= int(b) < arity:
            raise InvalidParameters(f"branch index {b} outside 0..{arity - 1}")
        idx = idx * arity + int(b)
    if idx >> MAX_PATH_BITS:
        raise DepthTooLarge(f"path of length {len(path)} does not fit in a {MAX_PATH_BITS}-bit index")
    return idx >> 64, idx & _MASK


def max_depth(arity: int) -> int:
    """Deepest level whose vertex indices fit in 128 bits."""
    d = 0
    while arity ** (d + 1) <= 2**MAX_PATH_BITS:
        d += 1
    return d


@dataclass(frozen=True)
class LabelOracle:
    """Deterministic map from tree vertices to digit indices.

    ``overrides`` pins the digit index of chosen vertices, keyed by
    ``(depth, index)``; it is used to build specific label configurations.
    """

    seed: int
    params: ParameterSet
    overrides: Mapping[tuple[int, int], int] = field(default_factory=dict)

    @property
    def key(self) -> int:
        return kernels.mix64_int(int(self.seed) & _MASK)

    def digits(self, depth: int, hi, lo) -> np.ndarray:
        """Digit indices of the vertices ``(depth, hi * 2^64 + lo)``."""
        hi = np.atleast_1d(np.asarray(hi, dtype=np.uint64))
        lo = np.atleast_1d(np.asarray(lo, dtype=np.uint64))
        out = kernels.vertex_digits(self.key, depth, hi, lo, self.params.thresholds)
        if self.overrides:
            for (d, idx), val in self.overrides.items():
                if d != depth:
                    continue
                hit = (hi == np.uint64(idx >> 64)) & (lo == np.uint64(idx & _MASK))
                out[hit] = val
        return out

    def label(self, path: Sequence[int]) -> int:
        """Digit index of the vertex reached by ``path`` (0-based branches)."""
        if len(path) == 0:
            raise InvalidParameters("the root carries no label")
        hi, lo = path_index(path, self.params.arity)
        return int(self.digits(len(path), hi, lo)[0])

    def path_digits(self, path: Sequence[int]) -> list[int]:
        """Digit indices a_{v|1}, ..., a_{v|n} along ``path``."""
        return [self.label(path[:k]) for k in range(1, len(path) + 1)]

    def with_overrides(self, extra: Mapping[tuple[int, int], int]) -> "LabelOracle":
        merged = dict(self.overrides)
        merged.update(extra)
        return LabelOracle(self.seed, self.params, merged)

    def replicate(self, stream: int) -> "LabelOracle":
        return LabelOracle(derive_seed(self.seed, stream), self.params)


def _check_full(params: ParameterSet, depth: int) -> int:
    if depth < 0:
        raise InvalidParameters("depth must be nonnegative")
    total = params.arity**depth
    if total > MAX_LEAVES:
        raise DepthTooLarge(
            f"{params.arity}^{depth} leaves exceeds the full-enumeration limit 2^26; use sample mode")
    return total


def _walk(oracle: LabelOracle, depth: int):
    """Level-by-level enumeration through ``oracle.digits`` (honours overrides)."""
    p = oracle.params
    pw = p.powers(depth)
    dv = p.digit_array
    vals = np.zeros(1)
    words = np.zeros((1, 0), dtype=np.int64)
    idx = np.zeros(1, dtype=np.uint64)
    branch = np.arange(p.arity, dtype=np.uint64)
    for k in range(1, depth + 1):
        idx = (np.repeat(idx * np.uint64(p.arity), p.arity).reshape(-1, p.arity) + branch).ravel()
        d = oracle.digits(k, np.zeros_like(idx), idx)
        vals = np.repeat(vals, p.arity) + dv[d] * pw[k]
        words = np.hstack([np.repeat(words, p.arity, axis=0), d[:, None]])
    return vals, words


def leaf_values(oracle: LabelOracle, depth: int, mode: str = "full", count: int = 0,
                sample_seed: int | None = None) -> np.ndarray:
    """Values f(v) = sum_j a_{v|j} lam^j of level-``depth`` vertices.

    ``mode="full"`` returns all l^depth values in depth-first order.
    ``mode="sample"`` returns ``count`` values at uniformly drawn leaves of the
    same labelled tree.
    """
    p = oracle.params
    if mode == "full":
        _check_full(p, depth)
        if oracle.overrides:
            return _walk(oracle, depth)[0]
        vals, _ = kernels.leaf_values(oracle.key, p.arity, depth, p.thresholds,
                                      p.digit_array, p.powers(depth))
        return vals
    if mode == "sample":
        return sample_leaves(oracle, depth, count, sample_seed)[0]
    raise InvalidParameters(f"unknown mode {mode!r}; expected 'full' or 'sample'")


def sample_leaves(oracle: LabelOracle, depth: int, count: int, sample_seed: int | None = None):
    """Uniform random leaves of the oracle's tree: (values, (hi, lo) indices)."""
    p = oracle.params
    if depth > max_depth(p.arity):
        raise DepthTooLarge(f"depth {depth} exceeds the 128-bit path limit {max_depth(p.arity)}")
    if count < 0:
        raise InvalidParameters("count must be nonnegative")
    s = derive_seed(oracle.seed, 1) if sample_seed is None else sample_seed
    rng = np.random.default_rng(s)
    branches = rng.integers(0, p.arity, size=(count, depth), dtype=np.uint64)
    pw = p.powers(depth)
    dv = p.digit_array
    vals = np.zeros(count)
    hi = np.zeros(count, dtype=np.uint64)
    lo = np.zeros(count, dtype=np.uint64)
    for k in range(1, depth + 1):
        hi, lo = kernels.child_index(hi, lo, p.arity, branches[:, k - 1])
        vals = vals + dv[oracle.digits(k, hi, lo)] * pw[k]
    return vals, (hi, lo)


def leaf_words(oracle: LabelOracle, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Leaf values and digit-index words (rows a_{v|1..n}) in depth-first order."""
    p = oracle.params
    _check_full(p, depth)
    if oracle.overrides:
        return _walk(oracle, depth)
    vals, codes = kernels.leaf_values(oracle.key, p.arity, depth, p.thresholds,
                                      p.digit_array, p.powers(depth))
    if codes is None:
        return _walk(oracle, depth)
    return vals, decode_words(codes, p.m, depth)


def word_counts(oracle: LabelOracle, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct digit-index words along level-``depth`` paths (sorted) and their multiplicities."""
    p = oracle.params
    _check_full(p, depth)
    codes = None
    if not oracle.overrides:
        codes = kernels.leaf_values(oracle.key, p.arity, depth, p.thresholds,
                                    p.digit_array, p.powers(depth))[1]
    if codes is not None:
        uniq, counts = np.unique(codes, return_counts=True)
        return decode_words(uniq, p.m, depth), counts
    return np.unique(_walk(oracle, depth)[1], axis=0, return_counts=True)


def decode_words(codes: np.ndarray, m: int, depth: int) -> np.ndarray:
    """Base-m integers to digit-index rows (most significant digit first)."""
    codes = np.asarray(codes, dtype=np.int64)
    out = np.empty((len(codes), depth), dtype=np.int64)
    rest = codes.copy()
    for j in range(depth - 1, -1, -1):
        out[:, j] = rest % m
        rest //= m
    return out


def exact_rows(words: np.ndarray, params: ParameterSet) -> np.ndarray:
    """theta^n * f for each digit-index word, as Z[theta] coefficient rows."""
    ring = params.require_exact()
    words = np.atleast_2d(words)
    n = words.shape[1]
    if n > EXACT_MAX_DEPTH:
        raise DepthTooLarge(f"exact values are limited to depth {EXACT_MAX_DEPTH}")
    ints = np.array([int(d) for d in params.digits], dtype=np.int64)
    rows = ring.zeros(len(words))
    for j in range(n):
        rows = ring.mul_theta(rows)
        rows[:, 0] += ints[words[:, j]]
    return rows


class PrefixCount(NamedTuple):
    count: int
    values: np.ndarray
    exact_rows: np.ndarray | None


def distinct_prefixes(oracle: LabelOracle, n: int, exact: bool = False,
                      tol: float = 1e-11) -> PrefixCount:
    """Number K_n of distinct digit words along level-n paths, plus distinct values.

    Values are deduplicated exactly in Z[theta] when ``exact`` is set, else
    up to the absolute tolerance ``tol``.
    """
    if n == 0:
        rows = oracle.params.require_exact().zeros(1) if exact else None
        return PrefixCount(1, np.zeros(1), rows)
    uniq = word_counts(oracle, n)[0]
    from .measure import dedup_exact, dedup_float  # local import: measure imports tree

    if exact:
        rows = exact_rows(uniq, oracle.params)
        rows, _, fv = dedup_exact(rows, np.ones(len(rows)), oracle.params, n)
        return PrefixCount(len(uniq), fv, rows)
    fv = words_to_values(uniq, oracle.params)
    fv, _ = dedup_float(fv, np.ones(len(fv)), tol)
    return PrefixCount(len(uniq), fv, None)


def words_to_values(words: np.ndarray, params: ParameterSet) -> np.ndarray:
    """Float values of digit-index words, summed in the same order as the kernels."""
    pw = params.powers(words.shape[1])
    dv = params.digit_array
    acc = np.zeros(len(words))
    for j in range(words.shape[1]):
        acc = acc + dv[words[:, j]] * pw[j + 1]
    return acc


# -- Galton-Watson clusters ------------------------------------------------

@dataclass(frozen=True)
class GWCluster:
    """Level sizes of the cluster of target-labelled vertices below a root.

    ``extinction_level`` is the first level with no vertex, or None if the
    cluster survives to ``max_depth``.
    """

    level_sizes: tuple[int, ...]
    max_depth: int

    @property
    def extinction_level(self) -> int | None:
        for k, s in enumerate(self.level_sizes):
            if s == 0:
                return k
        return None

    @property
    def survived(self) -> bool:
        return self.extinction_level is None


def _target_index(params: ParameterSet, target: float) -> int:
    try:
        return params.digits.index(float(target))
    except ValueError:
        raise InvalidParameters(f"target digit {target} not among {params.digits}") from None


def gw_cluster(seed: int, max_depth: int, params: ParameterSet | None = None,
               target: float = 1.0) -> GWCluster:
    """Cluster of ``target`` labels hanging below the root of the tree seeded by ``seed``.

    With binary arity and uniform {0, 1} labels the level sizes form a
    critical Galton-Watson process with offspring law (1/4, 1/2, 1/4).
    """
    if max_depth < 1:
        raise InvalidParameters("max_depth must be >= 1")
    params = params or ParameterSet(lam=0.5)
    key = np.array([LabelOracle(seed, params).key], dtype=np.uint64)
    sizes = kernels.gw_level_sizes(key, max_depth, params.arity, params.thresholds,
                                   _target_index(params, target))
    return GWCluster(tuple(int(s) for s in sizes[0]), max_depth)


def gw_level_sizes(seed: int, reps: int, max_depth: int, params: ParameterSet | None = None,
                   target: float = 1.0) -> np.ndarray:
    """Level sizes for ``reps`` independent clusters, shape (reps, max_depth + 1)."""
    params = params or ParameterSet(lam=0.5)
    return kernels.gw_level_sizes(replicate_keys(seed, reps), max_depth, params.arity,
                                  params.thresholds, _target_index(params, target))


class SurvivalPoint(NamedTuple):
    depth: int
    prob: float
    stderr: float


def survival_curve(depths: Iterable[int], reps: int, seed: int = DEFAULT_SEED,
                   params: ParameterSet | None = None, target: float = 1.0) -> list[SurvivalPoint]:
    """Fraction of clusters still alive at each depth, with binomial standard errors."""
    depths = [int(d) for d in depths]
    if reps < 1000:
        raise InvalidParameters("survival_curve needs reps >= 1000")
    if not depths or min(depths) < 0:
        raise InvalidParameters("depths must be a nonempty list of nonnegative integers")
    top = max(max(depths), 1)
    sizes = gw_level_sizes(seed, reps, top, params, target)
    out = []
    for d in depths:
        p = float(np.mean(sizes[:, d] > 0))
        out.append(SurvivalPoint(d, p, float(np.sqrt(p * (1 - p) / reps))))
    return out


def loglog_slope(points: Sequence[SurvivalPoint]) -> float:
    """Least-squares slope of log P against log n."""
    x = np.log([pt.depth for pt in points])
    y = np.log([pt.prob for pt in points])
    return float(np.polyfit(x, y, 1)[0])
