# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled transport kernels.

Same algorithms and pivoting rules as ``_transport_py``, with the basis tree
kept in fixed-size adjacency arrays.
"""
import numpy as np

from libc.math cimport INFINITY


cdef Py_ssize_t _nw_fill(double[::1] a, double[::1] b, double[:, ::1] flow,
                         Py_ssize_t[:, ::1] cells):
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t n = b.shape[0]
    cdef Py_ssize_t i = 0, j = 0, k = 0
    cdef double x
    while True:
        cells[k, 0] = i
        cells[k, 1] = j
        k += 1
        if i == m - 1 and j == n - 1:
            flow[i, j] = b[j]
            break
        if i == m - 1:
            x = b[j]
            flow[i, j] = x
            a[i] -= x
            j += 1
        elif j == n - 1:
            x = a[i]
            flow[i, j] = x
            b[j] -= x
            i += 1
        elif a[i] < b[j]:
            x = a[i]
            flow[i, j] = x
            b[j] -= x
            i += 1
        else:
            x = b[j]
            flow[i, j] = x
            a[i] -= x
            j += 1
    return k


def northwest_corner(supply, demand):
    cdef double[::1] a = np.array(supply, dtype=np.float64)
    cdef double[::1] b = np.array(demand, dtype=np.float64)
    cdef Py_ssize_t m = a.shape[0], n = b.shape[0]
    flow = np.zeros((m, n))
    cells = np.zeros((m + n - 1, 2), dtype=np.intp)
    _nw_fill(a, b, flow, cells)
    return flow, [tuple(c) for c in cells.tolist()]


def monotone_coupling(supply, demand):
    cdef double[::1] a = np.array(supply, dtype=np.float64)
    cdef double[::1] b = np.array(demand, dtype=np.float64)
    cdef Py_ssize_t m = a.shape[0], n = b.shape[0]
    flow = np.zeros((m, n))
    cells = np.zeros((m + n - 1, 2), dtype=np.intp)
    _nw_fill(a, b, flow, cells)
    rows = cells[:, 0].copy()
    cols = cells[:, 1].copy()
    return rows, cols, flow[rows, cols]


cdef int _tree_walk(Py_ssize_t m, Py_ssize_t n, double[:, ::1] cost,
                    Py_ssize_t[:, ::1] row_adj, Py_ssize_t[::1] row_deg,
                    Py_ssize_t[:, ::1] col_adj, Py_ssize_t[::1] col_deg,
                    double[::1] u, double[::1] v,
                    Py_ssize_t[::1] parent, Py_ssize_t[::1] depth,
                    Py_ssize_t[::1] queue, unsigned char[::1] seen):
    cdef Py_ssize_t head = 0, tail = 1, node, i, j, k, t
    for k in range(m + n):
        seen[k] = 0
    seen[0] = 1
    u[0] = 0.0
    parent[0] = -1
    depth[0] = 0
    queue[0] = 0
    while head < tail:
        node = queue[head]
        head += 1
        if node < m:
            for t in range(row_deg[node]):
                j = row_adj[node, t]
                k = m + j
                if not seen[k]:
                    seen[k] = 1
                    v[j] = cost[node, j] - u[node]
                    parent[k] = node
                    depth[k] = depth[node] + 1
                    queue[tail] = k
                    tail += 1
        else:
            j = node - m
            for t in range(col_deg[j]):
                i = col_adj[j, t]
                if not seen[i]:
                    seen[i] = 1
                    u[i] = cost[i, j] - v[j]
                    parent[i] = node
                    depth[i] = depth[node] + 1
                    queue[tail] = i
                    tail += 1
    return head == m + n


cdef inline void _drop(Py_ssize_t[:, ::1] adj, Py_ssize_t[::1] deg, Py_ssize_t node, Py_ssize_t other):
    cdef Py_ssize_t t
    for t in range(deg[node]):
        if adj[node, t] == other:
            deg[node] -= 1
            adj[node, t] = adj[node, deg[node]]
            return


def network_simplex(cost_in, supply, demand, double tol, Py_ssize_t max_iter):
    cdef double[:, ::1] cost = np.ascontiguousarray(cost_in, dtype=np.float64)
    cdef Py_ssize_t m = cost.shape[0], n = cost.shape[1]
    cdef double[::1] a = np.array(supply, dtype=np.float64)
    cdef double[::1] b = np.array(demand, dtype=np.float64)

    flow_arr = np.zeros((m, n))
    cdef double[:, ::1] flow = flow_arr
    cells_arr = np.zeros((m + n - 1, 2), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] cells = cells_arr
    _nw_fill(a, b, flow, cells)

    basic_arr = np.zeros((m, n), dtype=np.uint8)
    cdef unsigned char[:, ::1] basic = basic_arr
    cdef Py_ssize_t[:, ::1] row_adj = np.zeros((m, n), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] col_adj = np.zeros((n, m), dtype=np.intp)
    cdef Py_ssize_t[::1] row_deg = np.zeros(m, dtype=np.intp)
    cdef Py_ssize_t[::1] col_deg = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t k, ri, cj0
    for k in range(m + n - 1):
        ri = cells[k, 0]
        cj0 = cells[k, 1]
        basic[ri, cj0] = 1
        row_adj[ri, row_deg[ri]] = cj0
        row_deg[ri] += 1
        col_adj[cj0, col_deg[cj0]] = ri
        col_deg[cj0] += 1

    u_arr = np.zeros(m)
    v_arr = np.zeros(n)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef Py_ssize_t[::1] parent = np.zeros(m + n, dtype=np.intp)
    cdef Py_ssize_t[::1] depth = np.zeros(m + n, dtype=np.intp)
    cdef Py_ssize_t[::1] queue = np.zeros(m + n, dtype=np.intp)
    cdef unsigned char[::1] seen = np.zeros(m + n, dtype=np.uint8)
    # path buffers: up_a holds the column-side climb, up_b the row-side climb
    cdef Py_ssize_t[::1] up_a = np.zeros(m + n, dtype=np.intp)
    cdef Py_ssize_t[::1] up_b = np.zeros(m + n, dtype=np.intp)
    cdef Py_ssize_t[::1] path = np.zeros(m + n + 1, dtype=np.intp)

    cdef bint bland = False
    cdef Py_ssize_t degenerate_run = 0
    cdef Py_ssize_t stall_limit = m * n + 10
    cdef Py_ssize_t pivots = 0
    cdef Py_ssize_t i, j, p, q, na, nb, plen, x, y, ci, cj, li, lj
    cdef Py_ssize_t node_a, node_b
    cdef double best, rc, ui, theta, f

    while True:
        if not _tree_walk(m, n, cost, row_adj, row_deg, col_adj, col_deg, u, v, parent, depth, queue, seen):
            raise RuntimeError("basis is not a spanning tree")

        p = -1
        q = -1
        best = -tol
        for i in range(m):
            ui = u[i]
            for j in range(n):
                if basic[i, j]:
                    continue
                rc = cost[i, j] - ui - v[j]
                if rc < best:
                    best = rc
                    p = i
                    q = j
                    if bland:
                        break
            if bland and p >= 0:
                break
        if p < 0:
            return flow_arr, u_arr, v_arr, pivots
        if pivots >= max_iter:
            raise RuntimeError(f"network simplex exceeded {max_iter} pivots")

        node_a = m + q
        node_b = p
        na = 0
        nb = 0
        while depth[node_a] > depth[node_b]:
            up_a[na] = node_a
            na += 1
            node_a = parent[node_a]
        while depth[node_b] > depth[node_a]:
            up_b[nb] = node_b
            nb += 1
            node_b = parent[node_b]
        while node_a != node_b:
            up_a[na] = node_a
            na += 1
            node_a = parent[node_a]
            up_b[nb] = node_b
            nb += 1
            node_b = parent[node_b]
        plen = 0
        for k in range(na):
            path[plen] = up_a[k]
            plen += 1
        path[plen] = node_a
        plen += 1
        for k in range(nb - 1, -1, -1):
            path[plen] = up_b[k]
            plen += 1

        theta = INFINITY
        li = -1
        lj = -1
        for k in range(0, plen - 1, 2):
            x = path[k]
            y = path[k + 1]
            if x < m:
                ci = x
                cj = y - m
            else:
                ci = y
                cj = x - m
            f = flow[ci, cj]
            if f < theta or (f == theta and ci * n + cj < li * n + lj):
                theta = f
                li = ci
                lj = cj

        for k in range(plen - 1):
            x = path[k]
            y = path[k + 1]
            if x < m:
                ci = x
                cj = y - m
            else:
                ci = y
                cj = x - m
            if k % 2 == 0:
                flow[ci, cj] -= theta
            else:
                flow[ci, cj] += theta
        flow[p, q] = theta
        flow[li, lj] = 0.0
        basic[li, lj] = 0
        _drop(row_adj, row_deg, li, lj)
        _drop(col_adj, col_deg, lj, li)
        basic[p, q] = 1
        row_adj[p, row_deg[p]] = q
        row_deg[p] += 1
        col_adj[q, col_deg[q]] = p
        col_deg[q] += 1

        pivots += 1
        if theta == 0.0:
            degenerate_run += 1
            if degenerate_run > stall_limit:
                bland = True
        else:
            degenerate_run = 0
