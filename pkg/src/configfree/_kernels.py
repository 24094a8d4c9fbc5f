"""Compiled search kernels for independent sets in uniform hypergraphs.

Vertices are ``0 .. m-1`` and ``edges`` is an ``(E, k)`` int32 array.  A search
state assigns every vertex 0 (undecided), 1 (in the set) or 2 (out).
"""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def _propagate(st, edges, deg):
    """Force exclusions and free inclusions; returns False on a conflict.

    An edge whose only undecided vertex is ``u`` (the rest chosen) forces
    ``u`` out.  An undecided vertex lying in at most one live edge can always
    be taken: any independent set missing it can swap it in for another
    vertex of that edge.
    """
    E, k = edges.shape
    m = st.shape[0]
    while True:
        changed = True
        while changed:
            changed = False
            for e in range(E):
                r = 0
                u = -1
                dead = False
                for j in range(k):
                    s = st[edges[e, j]]
                    if s == 2:
                        dead = True
                        break
                    if s == 0:
                        r += 1
                        u = edges[e, j]
                if dead:
                    continue
                if r == 0:
                    return False
                if r == 1:
                    st[u] = 2
                    changed = True
        for i in range(m):
            deg[i] = 0
        for e in range(E):
            dead = False
            for j in range(k):
                if st[edges[e, j]] == 2:
                    dead = True
                    break
            if dead:
                continue
            for j in range(k):
                if st[edges[e, j]] == 0:
                    deg[edges[e, j]] += 1
        forced = False
        for i in range(m):
            if st[i] == 0 and deg[i] <= 1:
                st[i] = 1
                forced = True
                break
        if not forced:
            return True


@nb.njit(cache=True)
def _packing(st, edges, used):
    """Number of pairwise disjoint live edges, counted on undecided vertices, short ones first."""
    E, k = edges.shape
    for i in range(used.shape[0]):
        used[i] = 0
    pack = 0
    for want in range(2, k + 1):
        for e in range(E):
            r = 0
            skip = False
            for j in range(k):
                v = edges[e, j]
                s = st[v]
                if s == 2:
                    skip = True
                    break
                if s == 0:
                    r += 1
                    if used[v]:
                        skip = True
            if skip or r != want:
                continue
            for j in range(k):
                v = edges[e, j]
                if st[v] == 0:
                    used[v] = 1
            pack += 1
    return pack


@nb.njit(cache=True)
def decide_free_set(m, edges, target, node_limit):
    """Search for an independent set of size ``>= target``.

    Returns ``(status, nodes, state)`` with status 1 (found; ``state == 1``
    marks the set), 0 (none exists) or -1 (node limit hit).
    """
    stack = np.zeros((2 * m + 4, m), np.uint8)
    sp = 1
    nodes = 0
    deg = np.zeros(m, np.int64)
    used = np.zeros(m, np.uint8)
    empty = np.zeros(m, np.uint8)
    while sp > 0:
        sp -= 1
        st = stack[sp].copy()
        nodes += 1
        if node_limit > 0 and nodes > node_limit:
            return -1, nodes, empty
        if not _propagate(st, edges, deg):
            continue
        n_in = 0
        n_open = 0
        for i in range(m):
            if st[i] == 1:
                n_in += 1
            elif st[i] == 0:
                n_open += 1
        if n_in >= target:
            return 1, nodes, st
        if n_open == 0:
            continue
        if n_in + n_open - _packing(st, edges, used) < target:
            continue
        v = -1
        best = -1
        for i in range(m):
            if st[i] == 0 and deg[i] > best:
                best = deg[i]
                v = i
        stack[sp, :] = st
        stack[sp, v] = 2
        sp += 1
        stack[sp, :] = st
        stack[sp, v] = 1
        sp += 1
    return 0, nodes, empty
