"""Pure-Python/numpy versions of the compiled kernels (same signatures and results)."""

import numpy as np


def service_weights(parent, weight, root, locations, assignment, n_services):
    out = np.zeros(n_services, dtype=np.float64)
    m = len(locations)
    if m == 0:
        return out
    parent = np.asarray(parent).tolist()
    weight = np.asarray(weight).tolist()
    locs = np.asarray(locations).tolist()
    assign = np.asarray(assignment).tolist()
    stamp = [-1] * len(parent)
    for i in np.argsort(assignment, kind="stable").tolist():
        s = assign[i]
        u = locs[i]
        total = 0.0
        while u != root and stamp[u] != s:
            stamp[u] = s
            total += weight[u]
            u = parent[u]
        out[s] += total
    return out


def opt_subset_dp(group_masks, group_weights, times):
    m = len(times)
    nsub = 1 << m
    times = [float(t) for t in times]
    masks = [int(x) for x in group_masks]
    gw = [float(x) for x in group_weights]
    cost = [0.0] * nsub
    tmax = [0.0] * nsub
    tsum = [0.0] * nsub
    cnt = [0] * nsub
    for B in range(1, nsub):
        low = B & -B
        j = low.bit_length() - 1
        rest = B ^ low
        tsum[B] = tsum[rest] + times[j]
        cnt[B] = cnt[rest] + 1
        tmax[B] = times[j] if (rest == 0 or times[j] > tmax[rest]) else tmax[rest]
        w = 0.0
        for g, mk in enumerate(masks):
            if mk & B:
                w += gw[g]
        cost[B] = w + cnt[B] * tmax[B] - tsum[B]
    f = [0.0] * nsub
    choice = [0] * nsub
    for S in range(1, nsub):
        low = S & -S
        rest = S ^ low
        best = cost[S]
        ch = S
        sub = rest
        while sub:
            sub = (sub - 1) & rest
            blk = sub | low
            val = cost[blk] + f[S ^ blk]
            if val < best:
                best = val
                ch = blk
        f[S] = best
        choice[S] = ch
    return f[nsub - 1], np.asarray(choice, dtype=np.int64)
