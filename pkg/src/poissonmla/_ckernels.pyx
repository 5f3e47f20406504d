# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: per-service subtree weights and the subset DP for exact OPT."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()


def service_weights(const int64_t[::1] parent, const double[::1] weight, int64_t root,
                    const int64_t[::1] locations, const int64_t[::1] assignment, Py_ssize_t n_services):
    """Weight of the union of root-paths of each service's locations.

    Requests are visited grouped by service; a per-vertex stamp marks the
    service that last paid for the edge, so each edge is counted once.
    """
    cdef Py_ssize_t m = locations.shape[0]
    cdef Py_ssize_t n = parent.shape[0]
    out = np.zeros(n_services, dtype=np.float64)
    cdef double[::1] acc = out
    if m == 0:
        return out
    cdef int64_t[::1] order = np.argsort(assignment, kind="stable").astype(np.int64)
    cdef int64_t[::1] stamp = np.full(n, -1, dtype=np.int64)
    cdef Py_ssize_t i
    cdef int64_t u, s
    cdef double total
    for i in range(m):
        s = assignment[order[i]]
        u = locations[order[i]]
        total = 0.0
        while u != root and stamp[u] != s:
            stamp[u] = s
            total += weight[u]
            u = parent[u]
        acc[s] += total
    return out


def opt_subset_dp(const uint64_t[::1] group_masks, const double[::1] group_weights, const double[::1] times):
    """Minimum-cost partition of m <= 20 requests into blocks.

    ``group_masks[g]`` is the set of requests whose root-path uses edge group g.
    A block B pays the weight of every group it touches plus |B|*max(t) - sum(t).
    Returns (cost, choice) where choice[S] is the block containing lowbit(S)
    in an optimal split of S.
    """
    cdef Py_ssize_t m = times.shape[0]
    cdef Py_ssize_t ng = group_masks.shape[0]
    cdef Py_ssize_t full = (<Py_ssize_t>1 << m) - 1
    cdef Py_ssize_t nsub = full + 1
    cost_arr = np.zeros(nsub, dtype=np.float64)
    f_arr = np.zeros(nsub, dtype=np.float64)
    choice_arr = np.zeros(nsub, dtype=np.int64)
    cdef double[::1] cost = cost_arr
    cdef double[::1] f = f_arr
    cdef int64_t[::1] choice = choice_arr
    cdef double[::1] tmax = np.zeros(nsub, dtype=np.float64)
    cdef double[::1] tsum = np.zeros(nsub, dtype=np.float64)
    cdef int64_t[::1] cnt = np.zeros(nsub, dtype=np.int64)
    cdef Py_ssize_t B, S, low, rest, sub, blk, j, g
    cdef double w, val, best
    for B in range(1, nsub):
        low = B & (-B)
        j = 0
        while (<Py_ssize_t>1 << j) != low:
            j += 1
        rest = B ^ low
        tsum[B] = tsum[rest] + times[j]
        cnt[B] = cnt[rest] + 1
        tmax[B] = times[j] if (rest == 0 or times[j] > tmax[rest]) else tmax[rest]
        w = 0.0
        for g in range(ng):
            if group_masks[g] & <uint64_t>B:
                w += group_weights[g]
        cost[B] = w + cnt[B] * tmax[B] - tsum[B]
    f[0] = 0.0
    for S in range(1, nsub):
        low = S & (-S)
        rest = S ^ low
        best = cost[S]
        choice[S] = S
        sub = rest
        while sub != 0:
            sub = (sub - 1) & rest
            blk = sub | low
            if blk == S:
                continue
            val = cost[blk] + f[S ^ blk]
            if val < best:
                best = val
                choice[S] = blk
        f[S] = best
    return f_arr[full], choice_arr
