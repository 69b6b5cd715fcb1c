"""Integer kernels for the finite-space hot loops.

All distances are int64 in units of ``1/scale`` (see
:class:`boxdim.spaces.FiniteMetricSpace`), so every kernel is exact.
``UNREACHED`` marks pairs with no connecting path.

Each public kernel has a loop version compiled with numba (``_nb_*``) and a
vectorized numpy version (``_np_*``).  The module-level names point at the
numba versions unless ``BOXDIM_DISABLE_NUMBA`` is set or numba is missing.
The coloring search is inherently sequential and has only the loop version.
"""

import numpy as np

from ._accel import HAVE_NUMBA, njit

UNREACHED = np.iinfo(np.int64).max // 4


# all-pairs shortest paths on regular digraphs


@njit
def _sssp_dial(nbr, wts, src, dist, head, nxt, val, ncirc):
    n, deg = nbr.shape
    for i in range(n):
        dist[i] = UNREACHED
    for i in range(ncirc):
        head[i] = -1
    top = 0
    dist[src] = 0
    val[top] = src
    nxt[top] = head[0]
    head[0] = top
    top += 1
    pending = 1
    cur = 0
    while pending > 0:
        b = cur % ncirc
        while head[b] != -1:
            e = head[b]
            head[b] = nxt[e]
            pending -= 1
            v = val[e]
            if dist[v] != cur:
                continue
            for j in range(deg):
                u = nbr[v, j]
                nd = cur + wts[j]
                if nd < dist[u]:
                    dist[u] = nd
                    bb = nd % ncirc
                    val[top] = u
                    nxt[top] = head[bb]
                    head[bb] = top
                    top += 1
                    pending += 1
        cur += 1


@njit
def _nb_apsp_schreier(nbr, wts):
    n, deg = nbr.shape
    out = np.empty((n, n), dtype=np.int64)
    wmax = 1
    for j in range(deg):
        if wts[j] > wmax:
            wmax = wts[j]
    ncirc = wmax + 1
    head = np.empty(ncirc, dtype=np.int64)
    cap = n * deg + 1
    nxt = np.empty(cap, dtype=np.int64)
    val = np.empty(cap, dtype=np.int64)
    dist = np.empty(n, dtype=np.int64)
    for s in range(n):
        _sssp_dial(nbr, wts, s, dist, head, nxt, val, ncirc)
        for i in range(n):
            out[s, i] = dist[i]
    return out


def _np_apsp_schreier(nbr, wts):
    # Bellman-Ford on all sources at once; column v of dt.T holds d(., v)
    n, deg = nbr.shape
    dt = np.full((n, n), UNREACHED, dtype=np.int64)
    np.fill_diagonal(dt, 0)
    while True:
        before = dt.copy()
        for j in range(deg):
            np.minimum.at(dt, nbr[:, j], np.minimum(dt + wts[j], UNREACHED))
        if np.array_equal(before, dt):
            break
    return np.ascontiguousarray(dt.T)


# member diameters


@njit
def _nb_member_diameters(dist, ptr, idx):
    m = ptr.shape[0] - 1
    out = np.zeros(m, dtype=np.int64)
    for k in range(m):
        best = 0
        for a in range(ptr[k], ptr[k + 1]):
            pa = idx[a]
            for b in range(a + 1, ptr[k + 1]):
                d = dist[pa, idx[b]]
                if d > best:
                    best = d
        out[k] = best
    return out


def _np_member_diameters(dist, ptr, idx):
    out = np.zeros(len(ptr) - 1, dtype=np.int64)
    for k in range(len(ptr) - 1):
        sel = idx[ptr[k] : ptr[k + 1]]
        if sel.size > 1:
            out[k] = dist[np.ix_(sel, sel)].max()
    return out


# threshold components


@njit
def _nb_threshold_components(dist, thr, mask):
    n = dist.shape[0]
    lab = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    nlab = 0
    for s in range(n):
        if not mask[s] or lab[s] != -1:
            continue
        lab[s] = nlab
        top = 0
        stack[top] = s
        top += 1
        while top > 0:
            top -= 1
            v = stack[top]
            for u in range(n):
                if mask[u] and lab[u] == -1 and dist[v, u] <= thr:
                    lab[u] = nlab
                    stack[top] = u
                    top += 1
        nlab += 1
    return lab


def _np_threshold_components(dist, thr, mask):
    n = dist.shape[0]
    mask = np.asarray(mask, dtype=bool)
    adj = (dist <= thr) & mask[None, :]
    lab = np.full(n, -1, dtype=np.int64)
    nlab = 0
    for s in range(n):
        if not mask[s] or lab[s] != -1:
            continue
        comp = np.zeros(n, dtype=bool)
        comp[s] = True
        frontier = comp.copy()
        while frontier.any():
            reach = adj[frontier].any(axis=0) & ~comp
            comp |= reach
            frontier = reach
        lab[comp] = nlab
        nlab += 1
    return lab


# metric axioms


@njit
def _nb_metric_violations(dist):
    n = dist.shape[0]
    bad = 0
    for i in range(n):
        if dist[i, i] != 0:
            bad += 1
        for j in range(n):
            if dist[i, j] != dist[j, i]:
                bad += 1
            if i != j and dist[i, j] <= 0:
                bad += 1
    for k in range(n):
        for i in range(n):
            dik = dist[i, k]
            for j in range(n):
                if dist[i, j] > dik + dist[k, j]:
                    bad += 1
    return bad


def _np_metric_violations(dist):
    n = dist.shape[0]
    off = ~np.eye(n, dtype=bool)
    bad = int((np.diag(dist) != 0).sum() + (dist != dist.T).sum() + (dist[off] <= 0).sum())
    for k in range(n):
        bad += int((dist > dist[:, k, None] + dist[None, k, :]).sum())
    return bad


# coloring search


@njit
def _component_ok(p, c, color, ptr, idx, dist, su, comp, seen):
    # R-component of p among points of colour c has diameter <= su?
    top = 0
    comp[top] = p
    top += 1
    seen[p] = True
    head = 0
    while head < top:
        v = comp[head]
        head += 1
        for a in range(ptr[v], ptr[v + 1]):
            u = idx[a]
            if color[u] == c and not seen[u]:
                seen[u] = True
                comp[top] = u
                top += 1
    ok = True
    for i in range(top):
        if not ok:
            break
        for j in range(i + 1, top):
            if dist[comp[i], comp[j]] > su:
                ok = False
                break
    for i in range(top):
        seen[comp[i]] = False
    return ok


@njit
def color_search(order, ptr, idx, dist, su, k, node_cap):
    """Depth-first search for a ``k``-colouring with small monochromatic components.

    Points are coloured in ``order``; ``ptr, idx`` is the CSR list of
    neighbours within distance ``R``.  A colouring is valid when every
    ``R``-component of every colour class has diameter ``<= su``.  New
    colours are opened only as ``max used + 1``.

    Returns ``(status, colours, nodes)`` with status 1 (found), 0 (exhausted,
    none exists) or -1 (node cap reached).
    """
    n = order.shape[0]
    color = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return 1, color, 0
    trial = np.zeros(n, dtype=np.int64)
    maxused = np.full(n + 1, -1, dtype=np.int64)
    comp = np.empty(n, dtype=np.int64)
    seen = np.zeros(n, dtype=np.bool_)
    d = 0
    nodes = 0
    while True:
        if d == n:
            return 1, color, nodes
        if d < 0:
            return 0, color, nodes
        p = order[d]
        c = trial[d]
        limit = min(k - 1, maxused[d] + 1)
        placed = False
        while c <= limit:
            nodes += 1
            if nodes > node_cap:
                return -1, color, nodes
            color[p] = c
            if _component_ok(p, c, color, ptr, idx, dist, su, comp, seen):
                placed = True
                break
            color[p] = -1
            c += 1
        if placed:
            trial[d] = c + 1
            maxused[d + 1] = max(maxused[d], c)
            d += 1
            if d < n:
                trial[d] = 0
        else:
            color[p] = -1
            trial[d] = 0
            d -= 1
            if d >= 0:
                color[order[d]] = -1


if HAVE_NUMBA:
    apsp_schreier = _nb_apsp_schreier
    member_diameters = _nb_member_diameters
    threshold_components = _nb_threshold_components
    metric_violations = _nb_metric_violations
else:
    apsp_schreier = _np_apsp_schreier
    member_diameters = _np_member_diameters
    threshold_components = _np_threshold_components
    metric_violations = _np_metric_violations
