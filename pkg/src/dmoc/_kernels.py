"""Compiled pair kernels.

Every pairwise pass shares one distance primitive (``_dist``) so that the
exact, minibatch, seminorm and geometry routes see bitwise-identical
distances.  Work is split into interleaved row tasks; each chunk keeps a
private reduction buffer and buffers are merged by ``max``/``min``, which is
exact on floats, so results never depend on the thread count.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import numba
import numpy as np
from numba import njit, prange

# the bundled TBB is too old for numba; avoid the warning it triggers
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

EUCLIDEAN = 0
MANHATTAN = 1

GRID_EXPLICIT = 0
GRID_EXPONENTIAL = 1
GRID_LINEAR = 2

RHO_IDENTITY = 0
RHO_POWER = 1
RHO_TABLE = 2


def max_threads() -> int:
    return numba.config.NUMBA_NUM_THREADS


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        return numba.get_num_threads()
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return min(threads, max_threads())


@contextmanager
def thread_count(threads: int | None):
    """Temporarily set the numba thread count (clamped to the pool size)."""
    n = resolve_threads(threads)
    previous = numba.get_num_threads()
    numba.set_num_threads(n)
    try:
        yield n
    finally:
        numba.set_num_threads(previous)


def n_chunks(n_tasks: int, threads: int) -> int:
    return max(1, min(n_tasks, 8 * threads))


@njit(cache=True, inline="always")
def _dist(A, i, B, j, kind):
    acc = 0.0
    if kind == EUCLIDEAN:
        for c in range(A.shape[1]):
            d = A[i, c] - B[j, c]
            acc += d * d
        return math.sqrt(acc)
    for c in range(A.shape[1]):
        acc += abs(A[i, c] - B[j, c])
    return acc


@njit(cache=True)
def dist_one(a, b, kind):
    return _dist(a.reshape(1, -1), 0, b.reshape(1, -1), 0, kind)


@njit(cache=True, inline="always")
def _bucket(scales, gkind, t0, inv_step, r):
    # smallest k with r <= scales[k]; -1 if r exceeds the last scale
    K = scales.shape[0]
    if r > scales[K - 1]:
        return -1
    if r <= scales[0]:
        return 0
    if gkind == GRID_EXPONENTIAL:
        k = int(math.ceil(math.log(r / t0) * inv_step))
    elif gkind == GRID_LINEAR:
        k = int(math.ceil((r - t0) * inv_step))
    else:
        lo = 1
        hi = K - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if scales[mid] >= r:
                hi = mid
            else:
                lo = mid + 1
        return lo
    if k < 1:
        k = 1
    elif k > K - 1:
        k = K - 1
    # closed form may be off by one at bucket boundaries
    while k > 1 and r <= scales[k - 1]:
        k -= 1
    while r > scales[k]:
        k += 1
    return k


@njit(cache=True)
def bucket_many(scales, gkind, t0, inv_step, r):
    out = np.empty(r.shape[0], dtype=np.int64)
    for p in range(r.shape[0]):
        out[p] = _bucket(scales, gkind, t0, inv_step, r[p])
    return out


@njit(cache=True, inline="always")
def _rho(code, beta, kt, kv, r):
    if code == RHO_IDENTITY:
        return r
    if code == RHO_POWER:
        return r**beta
    n = kt.shape[0]
    if r <= kt[0]:
        return kv[0]
    if r >= kt[n - 1]:
        return kv[n - 1]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if kt[mid] <= r:
            lo = mid
        else:
            hi = mid
    w = (r - kt[lo]) / (kt[hi] - kt[lo])
    return kv[lo] + w * (kv[hi] - kv[lo])


@njit(cache=True)
def rho_many(code, beta, kt, kv, t):
    out = np.empty(t.shape[0])
    for p in range(t.shape[0]):
        out[p] = _rho(code, beta, kt, kv, t[p])
    return out


@njit(parallel=True, cache=True)
def batched_dmoc(X, Y, kx, ky, order, C, B, scales, gkind, t0, inv_step, nchunks):
    """Per-bucket max of d_Y over within-batch pairs, then prefix max.

    The exact estimator is the special case ``C == N``, ``B == 1``.
    Returns (omega, pair_count, zero_distance_conflicts).
    """
    K = scales.shape[0]
    rows = C - 1
    n_tasks = B * rows
    partial = np.zeros((nchunks, K))
    counts = np.zeros(nchunks, dtype=np.int64)
    conflicts = np.zeros(nchunks, dtype=np.int64)
    for c in prange(nchunks):
        buf = partial[c]
        cnt = 0
        bad = 0
        for task in range(c, n_tasks, nchunks):
            b = task // rows
            a = task - b * rows
            base = b * C
            i = order[base + a]
            for q in range(a + 1, C):
                j = order[base + q]
                r = _dist(X, i, X, j, kx)
                cnt += 1
                k = _bucket(scales, gkind, t0, inv_step, r)
                if k < 0:
                    continue
                s = _dist(Y, i, Y, j, ky)
                if s > buf[k]:
                    buf[k] = s
                if r == 0.0 and s > 0.0:
                    bad += 1
        counts[c] = cnt
        conflicts[c] = bad
    omega = np.zeros(K)
    for c in range(nchunks):
        for k in range(K):
            if partial[c, k] > omega[k]:
                omega[k] = partial[c, k]
    for k in range(1, K):
        if omega[k - 1] > omega[k]:
            omega[k] = omega[k - 1]
    return omega, counts.sum(), conflicts.sum()


@njit(parallel=True, cache=True)
def batched_seminorm(X, Y, kx, ky, order, C, B, code, beta, kt, kv, nchunks):
    """Max of s / rho(r) over within-batch pairs with r > 0.

    Ties resolve to the lexicographically smallest (i, j) in original
    indices.  Returns (value, i, j, r, zero_i, zero_j) where zero_i >= 0
    marks a zero-distance pair with differing values.
    """
    rows = C - 1
    n_tasks = B * rows
    best = np.full(nchunks, -1.0)
    bi = np.full(nchunks, -1, dtype=np.int64)
    bj = np.full(nchunks, -1, dtype=np.int64)
    br = np.zeros(nchunks)
    zi = np.full(nchunks, -1, dtype=np.int64)
    zj = np.full(nchunks, -1, dtype=np.int64)
    for c in prange(nchunks):
        for task in range(c, n_tasks, nchunks):
            b = task // rows
            a = task - b * rows
            base = b * C
            for q in range(a + 1, C):
                i = order[base + a]
                j = order[base + q]
                if j < i:
                    i, j = j, i
                r = _dist(X, i, X, j, kx)
                s = _dist(Y, i, Y, j, ky)
                if r == 0.0:
                    if s > 0.0 and (zi[c] < 0 or i < zi[c] or (i == zi[c] and j < zj[c])):
                        zi[c] = i
                        zj[c] = j
                    continue
                v = s / _rho(code, beta, kt, kv, r)
                if v > best[c] or (
                    v == best[c] and (i < bi[c] or (i == bi[c] and j < bj[c]))
                ):
                    best[c] = v
                    bi[c] = i
                    bj[c] = j
                    br[c] = r
    value = -1.0
    oi = -1
    oj = -1
    orr = 0.0
    ozi = -1
    ozj = -1
    for c in range(nchunks):
        if best[c] > value or (
            best[c] == value and bi[c] >= 0 and (bi[c] < oi or (bi[c] == oi and bj[c] < oj))
        ):
            value = best[c]
            oi = bi[c]
            oj = bj[c]
            orr = br[c]
        if zi[c] >= 0 and (ozi < 0 or zi[c] < ozi or (zi[c] == ozi and zj[c] < ozj)):
            ozi = zi[c]
            ozj = zj[c]
    return value, oi, oj, orr, ozi, ozj


@njit(parallel=True, cache=True)
def geometry(X, kx, nchunks):
    """(min r, max r, min positive r) over all pairs i < j."""
    N = X.shape[0]
    lo = np.full(nchunks, np.inf)
    hi = np.zeros(nchunks)
    lo_pos = np.full(nchunks, np.inf)
    for c in prange(nchunks):
        for i in range(c, N - 1, nchunks):
            for j in range(i + 1, N):
                r = _dist(X, i, X, j, kx)
                if r < lo[c]:
                    lo[c] = r
                if r > hi[c]:
                    hi[c] = r
                if r > 0.0 and r < lo_pos[c]:
                    lo_pos[c] = r
    return lo.min(), hi.max(), lo_pos.min()


@njit(parallel=True, cache=True)
def fill(X, R, kx):
    """Max over rows of R of the distance to the nearest row of X."""
    M = R.shape[0]
    nearest = np.empty(M)
    for m in prange(M):
        best = np.inf
        for i in range(X.shape[0]):
            r = _dist(R, m, X, i, kx)
            if r < best:
                best = r
        nearest[m] = best
    return nearest.max()


@njit(parallel=True, cache=True)
def pair_values(X, Y, kx, ky, I, J):
    P = I.shape[0]
    r = np.empty(P)
    s = np.empty(P)
    for p in prange(P):
        r[p] = _dist(X, I[p], X, J[p], kx)
        s[p] = _dist(Y, I[p], Y, J[p], ky)
    return r, s
