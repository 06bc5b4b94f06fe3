"""Pure numpy implementation of the hot kernels.

Bit-for-bit compatible with the compiled ``_ckernels`` module; used when the
extension is not built or when BRW_PURE_PYTHON=1.
"""
import numpy as np

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
DEPTH_MULT = 0xD1B54A32D192ED03
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GAMMA = np.uint64(GAMMA)
_U53 = 1.0 / (1 << 53)


def mix64(z):
    """splitmix64 finalizer on uint64 arrays (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z + _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def mix64_int(z: int) -> int:
    z = (z + GAMMA) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def level_key(key: int, depth: int) -> int:
    return mix64_int(key ^ ((depth * DEPTH_MULT) & MASK))


def _level_keys(keys, depth):
    keys = np.asarray(keys, dtype=np.uint64)
    with np.errstate(over="ignore"):
        dk = np.uint64((depth * DEPTH_MULT) & MASK)
    return mix64(keys ^ dk)


def _digits_from_hash(h, thresholds):
    u = (h >> np.uint64(11)).astype(np.float64) * _U53
    return np.searchsorted(thresholds, u, side="right").astype(np.int64)


def vertex_digits(key, depth, hi, lo, thresholds):
    """Digit indices for vertices (depth, index) where index = hi * 2^64 + lo."""
    lk = np.uint64(level_key(int(key), int(depth)))
    h = mix64(mix64(lk ^ np.asarray(lo, dtype=np.uint64)) ^ np.asarray(hi, dtype=np.uint64))
    return _digits_from_hash(h, np.asarray(thresholds, dtype=np.float64))


def vertex_digits_multi(keys, depth, hi, lo, thresholds):
    """Like vertex_digits but with one tree key per vertex."""
    lk = _level_keys(keys, depth)
    h = mix64(mix64(lk ^ np.asarray(lo, dtype=np.uint64)) ^ np.asarray(hi, dtype=np.uint64))
    return _digits_from_hash(h, np.asarray(thresholds, dtype=np.float64))


def leaf_values(key, arity, depth, thresholds, digit_values, powers):
    """All level-``depth`` values f(v) in depth-first order, plus digit words.

    Returns (values, words); ``words`` encodes the digit indices along the
    path in base m (m = number of digits), or is None if it would overflow.
    """
    m = len(digit_values)
    dv = np.asarray(digit_values, dtype=np.float64)
    track_words = m ** depth < 2**63
    vals = np.zeros(1)
    words = np.zeros(1, dtype=np.int64)
    idx = np.zeros(1, dtype=np.uint64)
    branch = np.arange(arity, dtype=np.uint64)
    for k in range(1, depth + 1):
        idx = (np.repeat(idx * np.uint64(arity), arity).reshape(-1, arity) + branch).ravel()
        d = vertex_digits(key, k, np.zeros_like(idx), idx, thresholds)
        vals = np.repeat(vals, arity) + dv[d] * powers[k]
        if track_words:
            words = np.repeat(words, arity) * m + d
    return vals, (words if track_words else None)


def leaf_values_batch(keys, arity, depth, thresholds, digit_values, powers):
    """leaf_values for many independent trees; returns shape (len(keys), arity**depth)."""
    keys = np.asarray(keys, dtype=np.uint64)
    dv = np.asarray(digit_values, dtype=np.float64)
    reps = len(keys)
    vals = np.zeros((reps, 1))
    idx = np.zeros(1, dtype=np.uint64)
    branch = np.arange(arity, dtype=np.uint64)
    for k in range(1, depth + 1):
        idx = (np.repeat(idx * np.uint64(arity), arity).reshape(-1, arity) + branch).ravel()
        lk = _level_keys(keys, k)
        h = mix64(mix64(lk[:, None] ^ idx[None, :]) ^ np.uint64(0))
        d = _digits_from_hash(h, np.asarray(thresholds, dtype=np.float64))
        vals = np.repeat(vals, arity, axis=1) + dv[d] * powers[k]
    return vals


def gw_level_sizes(keys, max_depth, arity, thresholds, target):
    """Level sizes of the cluster of ``target``-labelled vertices below each root.

    The root counts as present.  Returns int64 array (len(keys), max_depth + 1).
    """
    keys = np.asarray(keys, dtype=np.uint64)
    reps = len(keys)
    sizes = np.zeros((reps, max_depth + 1), dtype=np.int64)
    sizes[:, 0] = 1
    rep = np.arange(reps)
    hi = np.zeros(reps, dtype=np.uint64)
    lo = np.zeros(reps, dtype=np.uint64)
    thr = np.asarray(thresholds, dtype=np.float64)
    for k in range(1, max_depth + 1):
        if rep.size == 0:
            break
        rep = np.repeat(rep, arity)
        hi, lo = child_index(np.repeat(hi, arity), np.repeat(lo, arity), arity,
                             np.tile(np.arange(arity, dtype=np.uint64), len(rep) // arity))
        d = vertex_digits_multi(keys[rep], k, hi, lo, thr)
        keep = d == target
        rep, hi, lo = rep[keep], hi[keep], lo[keep]
        sizes[:, k] = np.bincount(rep, minlength=reps)
    return sizes


def child_index(hi, lo, arity, c):
    """(hi, lo) * arity + c with 128-bit carry, on uint64 arrays."""
    hi = np.asarray(hi, dtype=np.uint64)
    lo = np.asarray(lo, dtype=np.uint64)
    c = np.asarray(c, dtype=np.uint64)
    a = np.uint64(arity)
    m32 = np.uint64(0xFFFFFFFF)
    s32 = np.uint64(32)
    with np.errstate(over="ignore"):
        x0 = (lo & m32) * a
        x1 = (lo >> s32) * a + (x0 >> s32)
        carry = x1 >> s32
        new_lo = (x1 << s32) | (x0 & m32)
        lo2 = new_lo + c
        carry = carry + (lo2 < new_lo).astype(np.uint64)
        hi2 = hi * a + carry
    return hi2, lo2
