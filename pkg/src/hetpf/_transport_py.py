"""Pure-Python transport kernels.

Reference implementation of the two hot loops used by :mod:`hetpf.transport`:
the network simplex on a dense bipartite transportation graph and the
north-west corner coupling. ``_transport_cy.pyx`` mirrors this file step by
step; both must take the same pivots so results agree bit for bit.
"""
import numpy as np


def northwest_corner(supply, demand):
    """North-west corner allocation.

    Returns ``(flow, cells)`` where ``cells`` lists the ``m + n - 1`` visited
    cells in order. The last row absorbs any rounding mismatch between the
    marginal totals so that every column sum is reproduced exactly.
    """
    m = supply.shape[0]
    n = demand.shape[0]
    a = np.array(supply, dtype=np.float64)
    b = np.array(demand, dtype=np.float64)
    flow = np.zeros((m, n))
    cells = []
    i = 0
    j = 0
    while True:
        cells.append((i, j))
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
    return flow, cells


def monotone_coupling(supply, demand):
    """Monotone coupling of already sorted marginals as ``(rows, cols, mass)``.

    The ``m + n - 1`` north-west corner cells are listed in visiting order;
    some may carry zero mass.
    """
    flow, cells = northwest_corner(supply, demand)
    idx = np.array(cells, dtype=np.intp)
    return idx[:, 0], idx[:, 1], flow[idx[:, 0], idx[:, 1]]


def _tree_walk(m, n, cost, row_adj, col_adj, u, v, parent, depth):
    # BFS from row 0; nodes 0..m-1 are rows, m..m+n-1 are columns.
    seen = [False] * (m + n)
    seen[0] = True
    u[0] = 0.0
    parent[0] = -1
    depth[0] = 0
    queue = [0]
    head = 0
    while head < len(queue):
        node = queue[head]
        head += 1
        if node < m:
            for j in row_adj[node]:
                k = m + j
                if not seen[k]:
                    seen[k] = True
                    v[j] = cost[node, j] - u[node]
                    parent[k] = node
                    depth[k] = depth[node] + 1
                    queue.append(k)
        else:
            j = node - m
            for i in col_adj[j]:
                if not seen[i]:
                    seen[i] = True
                    u[i] = cost[i, j] - v[j]
                    parent[i] = node
                    depth[i] = depth[node] + 1
                    queue.append(i)
    if head != m + n:
        raise RuntimeError("basis is not a spanning tree")


def network_simplex(cost, supply, demand, tol, max_iter):
    """Solve ``min <cost, T>`` over nonnegative ``T`` with the given marginals.

    Parameters
    ----------
    cost : ndarray, shape (m, n)
    supply : ndarray, shape (m,)
        Row sums.
    demand : ndarray, shape (n,)
        Column sums; ``sum(supply)`` must equal ``sum(demand)`` up to rounding.
    tol : float
        Reduced costs above ``-tol`` count as nonnegative.
    max_iter : int
        Pivot budget.

    Returns
    -------
    flow, u, v, n_pivots
        Optimal plan and dual potentials with ``u[i] + v[j] == cost[i, j]`` on
        the final spanning-tree basis.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    m, n = cost.shape
    flow, cells = northwest_corner(supply, demand)
    row_adj = [[] for _ in range(m)]
    col_adj = [[] for _ in range(n)]
    basic = np.zeros((m, n), dtype=bool)
    for i, j in cells:
        row_adj[i].append(j)
        col_adj[j].append(i)
        basic[i, j] = True

    u = np.zeros(m)
    v = np.zeros(n)
    parent = [0] * (m + n)
    depth = [0] * (m + n)
    bland = False
    degenerate_run = 0
    stall_limit = m * n + 10
    pivots = 0

    while True:
        _tree_walk(m, n, cost, row_adj, col_adj, u, v, parent, depth)

        # pricing; ties resolve to the first cell in row-major order
        rc = cost - u[:, None] - v[None, :]
        rc[basic] = np.inf
        if bland:
            hits = np.flatnonzero(rc < -tol)
            if hits.size == 0:
                return flow, u, v, pivots
            p, q = divmod(int(hits[0]), n)
        else:
            k = int(np.argmin(rc))
            p, q = divmod(k, n)
            if not rc[p, q] < -tol:
                return flow, u, v, pivots
        if pivots >= max_iter:
            raise RuntimeError(f"network simplex exceeded {max_iter} pivots")

        # path in the tree from column q to row p
        a = m + q
        b = p
        up_a = []
        up_b = []
        while depth[a] > depth[b]:
            up_a.append(a)
            a = parent[a]
        while depth[b] > depth[a]:
            up_b.append(b)
            b = parent[b]
        while a != b:
            up_a.append(a)
            a = parent[a]
            up_b.append(b)
            b = parent[b]
        path = up_a + [a] + up_b[::-1]

        # alternate signs starting with a minus on the edge touching column q
        minus = []
        plus = []
        for k in range(len(path) - 1):
            x = path[k]
            y = path[k + 1]
            cell = (x, y - m) if x < m else (y, x - m)
            (minus if k % 2 == 0 else plus).append(cell)

        theta = np.inf
        leave = None
        for i, j in minus:
            f = flow[i, j]
            if f < theta or (f == theta and i * n + j < leave[0] * n + leave[1]):
                theta = f
                leave = (i, j)

        for i, j in plus:
            flow[i, j] += theta
        for i, j in minus:
            flow[i, j] -= theta
        flow[p, q] = theta
        li, lj = leave
        flow[li, lj] = 0.0

        basic[li, lj] = False
        row_adj[li].remove(lj)
        col_adj[lj].remove(li)
        basic[p, q] = True
        row_adj[p].append(q)
        col_adj[q].append(p)

        pivots += 1
        if theta == 0.0:
            degenerate_run += 1
            if degenerate_run > stall_limit:
                bland = True
        else:
            degenerate_run = 0
