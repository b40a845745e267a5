"""Vectorized numpy kernels.  Same contracts as ``_numba``."""
import numpy as np


def sort_groups(bids, workloads, offsets, capacity, eps):
    n = len(offsets) - 1
    N, K = bids.shape
    counts = np.diff(offsets)
    L = max(int(counts.max(initial=0)), 1)

    ap = np.repeat(np.arange(n), counts)
    slot = np.arange(N) - offsets[ap]

    ratio = np.full((n, L, K), -np.inf)
    ratio[ap, slot] = bids / workloads[:, None]
    load = np.zeros((n, L))
    load[ap, slot] = workloads

    # stable sort on the negated ratio: descending ratio, ascending member slot on ties
    order = np.argsort(-ratio, axis=1, kind="stable")
    pprs = np.take_along_axis(ratio, order, axis=1)
    prefix = np.cumsum(np.take_along_axis(np.broadcast_to(load[:, :, None], (n, L, K)), order, axis=1), axis=1)

    valid = np.arange(L)[None, :, None] < counts[:, None, None]
    s = np.sum(valid & (prefix <= capacity[None, None, :] + eps), axis=1).astype(np.int64)

    rank_pad = np.empty_like(order)
    np.put_along_axis(rank_pad, order, np.arange(L)[None, :, None], axis=1)
    rank = rank_pad[ap, slot]

    pprs = np.where(valid, pprs, 0.0)
    prefix = np.where(valid, prefix, 0.0)
    return s, pprs.transpose(0, 2, 1).copy(), prefix.transpose(0, 2, 1).copy(), rank


def asc_batch(B, reserve, perm, u_frmg, use_frmg, top2):
    T, n, K = B.shape
    D = B - reserve[None, None, :]
    sigma = np.full((T, n), -1, dtype=np.int64)
    price = np.zeros((T, n))
    rows = np.arange(T)
    for x in range(n):
        if use_frmg:
            rnd = np.ones(T, dtype=np.int64) if top2 <= 1 else 1 + (u_frmg[:, x] * top2).astype(np.int64)
            rnd = np.minimum(rnd, n * K)
            flat = D.transpose(0, 2, 1).reshape(T, K * n)  # k-major: ties -> smaller k, then smaller i
            order = np.argsort(-flat, axis=1, kind="stable")
            pick = order[rows, rnd - 1]
            k = pick // n
            i = pick % n
        else:
            i = perm[:, x]
            k = np.argmax(D[rows, i, :], axis=1)
        d = D[rows, i, k]
        own = B[rows, i, k]
        comp = B[rows, :, k]
        ok_comp = (comp >= reserve[k][:, None]) & (comp <= own[:, None])
        ok_comp[rows, i] = False
        best = np.where(ok_comp, comp, -np.inf).max(axis=1)
        profitable = d > 0
        match = profitable & ok_comp.any(axis=1)
        reject = profitable & ~match

        t, ii, kk = rows[match], i[match], k[match]
        sigma[t, ii] = kk
        price[t, ii] = best[match]
        D[t, ii, :] = 0.0
        D[t, :, kk] = 0.0
        D[rows[reject], i[reject], k[reject]] = 0.0
    return sigma, price
