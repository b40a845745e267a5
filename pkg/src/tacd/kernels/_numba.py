"""Loop kernels compiled with numba."""
import numpy as np
from numba import njit


@njit(cache=True)
def sort_groups(bids, workloads, offsets, capacity, eps):
    n = offsets.shape[0] - 1
    N, K = bids.shape
    L = 1
    for i in range(n):
        L = max(L, offsets[i + 1] - offsets[i])
    s = np.zeros((n, K), dtype=np.int64)
    pprs = np.zeros((n, K, L))
    prefix = np.zeros((n, K, L))
    rank = np.zeros((N, K), dtype=np.int64)
    for i in range(n):
        lo = offsets[i]
        cnt = offsets[i + 1] - lo
        neg = np.empty(cnt)
        for k in range(K):
            for j in range(cnt):
                neg[j] = -bids[lo + j, k] / workloads[lo + j]
            order = np.argsort(neg, kind="mergesort")
            total = 0.0
            count = 0
            for pos in range(cnt):
                j = order[pos]
                total += workloads[lo + j]
                pprs[i, k, pos] = -neg[j]
                prefix[i, k, pos] = total
                rank[lo + j, k] = pos
                if total <= capacity[k] + eps:
                    count += 1
            s[i, k] = count
    return s, pprs, prefix, rank


@njit(cache=True)
def _frmg_pick(D, rnd):
    n, K = D.shape
    picked = np.zeros((n, K), dtype=np.bool_)
    bi = 0
    bk = 0
    for _ in range(rnd):
        best = -np.inf
        found = False
        for k in range(K):
            for i in range(n):
                if picked[i, k]:
                    continue
                if not found or D[i, k] > best:
                    best = D[i, k]
                    bi = i
                    bk = k
                    found = True
        picked[bi, bk] = True
    return bi, bk


@njit(cache=True)
def asc_batch(B, reserve, perm, u_frmg, use_frmg, top2):
    T, n, K = B.shape
    sigma = np.full((T, n), -1, dtype=np.int64)
    price = np.zeros((T, n))
    D = np.empty((n, K))
    for t in range(T):
        for i in range(n):
            for k in range(K):
                D[i, k] = B[t, i, k] - reserve[k]
        for x in range(n):
            if use_frmg:
                rnd = 1
                if top2 > 1:
                    rnd = 1 + int(u_frmg[t, x] * top2)
                rnd = min(rnd, n * K)
                i, k = _frmg_pick(D, rnd)
            else:
                i = perm[t, x]
                k = 0
                for kk in range(1, K):
                    if D[i, kk] > D[i, k]:
                        k = kk
            if D[i, k] > 0:
                own = B[t, i, k]
                best = -np.inf
                found = False
                for j in range(n):
                    if j == i:
                        continue
                    b = B[t, j, k]
                    if b >= reserve[k] and b <= own and b > best:
                        best = b
                        found = True
                if found:
                    sigma[t, i] = k
                    price[t, i] = best
                    for kk in range(K):
                        D[i, kk] = 0.0
                    for ii in range(n):
                        D[ii, k] = 0.0
                else:
                    D[i, k] = 0.0
    return sigma, price
