"""Compiled inner loops: GF(2) elimination on packed words and the greedy colorers.

Node arrays use 0-based users; ``know`` and ``pkt_cachers`` are user bitmasks.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def rank_words(a):
    """Rank of a packed GF(2) matrix; destroys ``a``. Column order is irrelevant to rank."""
    rows, nw = a.shape
    rank = 0
    for w in range(nw):
        for b in range(64):
            if rank == rows:
                return rank
            bit = np.uint64(1) << np.uint64(b)
            piv = -1
            for r in range(rank, rows):
                if a[r, w] & bit:
                    piv = r
                    break
            if piv < 0:
                continue
            if piv != rank:
                for x in range(w, nw):
                    tmp = a[piv, x]
                    a[piv, x] = a[rank, x]
                    a[rank, x] = tmp
            for r in range(piv + 1, rows):
                if a[r, w] & bit:
                    for x in range(w, nw):
                        a[r, x] ^= a[rank, x]
            rank += 1
    return rank


@njit(cache=True)
def rref_words(a, cols):
    """Reduced row echelon form in place; returns ``(rank, pivot column of each pivot row)``."""
    rows, nw = a.shape
    pivots = np.empty(rows, dtype=np.int64)
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        w = c >> 6
        bit = np.uint64(1) << np.uint64(c & 63)
        piv = -1
        for r in range(rank, rows):
            if a[r, w] & bit:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for x in range(w, nw):
                tmp = a[piv, x]
                a[piv, x] = a[rank, x]
                a[rank, x] = tmp
        for r in range(rows):
            if r != rank and a[r, w] & bit:
                for x in range(w, nw):
                    a[r, x] ^= a[rank, x]
        pivots[rank] = c
        rank += 1
    return rank, pivots[:rank]


@njit(cache=True)
def _compatible(w, members, size, user, pkt, pkt_cachers):
    # no edge in either direction between w and any member
    uw = user[w]
    pw = pkt[w]
    cw = pkt_cachers[pw]
    for t in range(size):
        u = members[t]
        pu = pkt[u]
        if pu == pw:
            continue
        if not (pkt_cachers[pu] >> uw) & 1:
            return False
        if not (cw >> user[u]) & 1:
            return False
    return True


@njit(cache=True)
def _shuffle(arr, n):
    for i in range(n - 1, 0, -1):
        j = np.random.randint(0, i + 1)
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp


@njit(cache=True)
def _greedy_extend(cands, ncand, members, size, user, pkt, pkt_cachers):
    for c in range(ncand):
        w = cands[c]
        if _compatible(w, members, size, user, pkt, pkt_cachers):
            members[size] = w
            size += 1
    return size


@njit(cache=True)
def _collect_by_level(pool, npool, v, i, superset, alive, level, pkt, know, num_users, out, counts):
    """Candidates from hierarchies >= i, grouped by hierarchy, shuffled within each."""
    kv = know[v]
    for j in range(num_users + 2):
        counts[j] = 0
    for p in range(npool):
        w = pool[p]
        if not alive[w] or level[w] < i or pkt[w] == pkt[v]:
            continue
        if ((know[w] & kv) == kv) == superset:
            counts[level[w] + 1] += 1
    for j in range(1, num_users + 2):
        counts[j] += counts[j - 1]
    total = counts[num_users + 1]
    fill = counts.copy()
    for p in range(npool):
        w = pool[p]
        if not alive[w] or level[w] < i or pkt[w] == pkt[v]:
            continue
        if ((know[w] & kv) == kv) == superset:
            out[fill[level[w]]] = w
            fill[level[w]] += 1
    for j in range(num_users + 1):
        lo = counts[j]
        nseg = counts[j + 1] - lo
        if nseg > 1:
            _shuffle(out[lo:], nseg)
    return total


@njit(cache=True)
def ahglc_kernel(user, pkt, know, level, pkt_cachers, pkt_ptr, pkt_nodes, num_users, seed):
    """Lowest-to-highest hierarchy greedy coloring with superset-first search.

    Returns ``(color, num_colors, m)`` where ``m`` is the final relaxation.
    """
    np.random.seed(seed)
    n = user.shape[0]
    color = -np.ones(n, dtype=np.int64)
    alive = np.ones(n, dtype=np.bool_)
    remaining = n
    ncolors = 0
    m = 0
    queue = np.empty(n, dtype=np.int64)
    pool = np.empty(n, dtype=np.int64)
    cands = np.empty(n, dtype=np.int64)
    members = np.empty(n, dtype=np.int64)
    counts = np.zeros(num_users + 2, dtype=np.int64)
    while remaining > 0:
        for i in range(1, num_users + 1):
            nq = 0
            npool = 0
            for v in range(n):
                if alive[v] and level[v] >= i:
                    pool[npool] = v
                    npool += 1
                    if level[v] == i:
                        queue[nq] = v
                        nq += 1
            if nq == 0:
                continue
            _shuffle(queue, nq)
            for q in range(nq):
                v = queue[q]
                if not alive[v]:
                    continue
                members[0] = v
                size = 1
                p = pkt[v]
                for t in range(pkt_ptr[p], pkt_ptr[p + 1]):
                    u = pkt_nodes[t]
                    if u != v and alive[u]:
                        members[size] = u
                        size += 1
                nc = _collect_by_level(pool, npool, v, i, True, alive, level, pkt, know, num_users, cands, counts)
                size = _greedy_extend(cands, nc, members, size, user, pkt, pkt_cachers)
                if size < i - m:
                    nc = _collect_by_level(pool, npool, v, i, False, alive, level, pkt, know, num_users, cands, counts)
                    size = _greedy_extend(cands, nc, members, size, user, pkt, pkt_cachers)
                if size >= i - m:
                    for t in range(size):
                        color[members[t]] = ncolors
                        alive[members[t]] = False
                    ncolors += 1
                    remaining -= size
        if remaining > 0:
            m += 1
    return color, ncolors, m


@njit(cache=True)
def hglc_kernel(user, pkt, know, level, pkt_cachers, num_users, seed):
    """Highest-to-lowest hierarchy greedy coloring with demotion of failed nodes."""
    np.random.seed(seed)
    n = user.shape[0]
    level = level.copy()
    color = -np.ones(n, dtype=np.int64)
    alive = np.ones(n, dtype=np.bool_)
    ncolors = 0
    queue = np.empty(n, dtype=np.int64)
    cands = np.empty(n, dtype=np.int64)
    members = np.empty(n, dtype=np.int64)
    for i in range(num_users, 0, -1):
        nq = 0
        for v in range(n):
            if alive[v] and level[v] == i:
                queue[nq] = v
                nq += 1
        _shuffle(queue, nq)
        for q in range(nq):
            v = queue[q]
            if not alive[v] or level[v] != i:
                continue
            members[0] = v
            size = 1
            nc = 0
            for t in range(nq):
                w = queue[t]
                if w != v and alive[w] and level[w] == i:
                    cands[nc] = w
                    nc += 1
            if nc:
                _shuffle(cands, nc)
                size = _greedy_extend(cands, nc, members, size, user, pkt, pkt_cachers)
            if size >= i:
                for t in range(size):
                    color[members[t]] = ncolors
                    alive[members[t]] = False
                ncolors += 1
            else:
                level[v] = i - 1
    return color, ncolors
