"""Scale-R dimension solvers on finite metric spaces.

Two witness formulations are supported:

* colourings: ``k`` families of pairwise ``R``-separated sets of diameter
  ``<= S`` covering the space (a colouring whose monochromatic
  ``R``-components have diameter ``<= S``);
* covers: bound ``<= S``, Lebesgue number ``>= R``, minimal multiplicity.

Lower bounds are only claimed where a search was exhaustive.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .covers import (
    Cover,
    bound,
    check_cover,
    component_cover,
    greedy_clique_cover,
    greedy_slab_cover,
    maximal_cliques,
    multiplicity,
    pullback_cover,
)
from .errors import ParameterError, PreconditionError, ResourceError, UnsupportedSpaceError
from .spaces import FiniteMetricSpace, as_fraction

NODE_CAP = int(os.environ.get("BOXDIM_NODE_CAP", 50_000_000))
EXACT_POINT_CAP = int(os.environ.get("BOXDIM_EXACT_POINT_CAP", 64))

EXACT = "exact"
UPPER = "upper-bound-only"


@dataclass
class ScaleDimWitness:
    space: str
    R: Fraction
    S: Fraction
    kind: str  # "cover" or "coloring"
    value: int
    certificate: object
    optimality: str
    transcript: list = field(default_factory=list)

    @property
    def exact(self) -> bool:
        return self.optimality == EXACT


# colourings


def _neighbour_csr(X: FiniteMetricSpace, R) -> tuple[np.ndarray, np.ndarray]:
    near = X.dist <= X.units(R)
    np.fill_diagonal(near, False)
    counts = near.sum(axis=1)
    ptr = np.zeros(len(X) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum(counts)
    idx = np.nonzero(near)[1].astype(np.int64)
    return ptr, idx


def coloring_order(X: FiniteMetricSpace) -> np.ndarray:
    """Decreasing eccentricity, ties by index."""
    ecc = X.eccentricities()
    return np.array(sorted(range(len(X)), key=lambda i: (-int(ecc[i]), i)), dtype=np.int64)


def color_families(X: FiniteMetricSpace, colors, R) -> list[list[frozenset]]:
    """Split each colour class into its ``R``-components."""
    colors = np.asarray(colors)
    fams = []
    for c in range(int(colors.max()) + 1 if len(colors) else 0):
        mask = colors == c
        lab = X.components(R, mask)
        fams.append([frozenset(np.flatnonzero(lab == k).tolist()) for k in range(int(lab.max()) + 1)])
    return fams


def check_coloring(X: FiniteMetricSpace, colors, R, S) -> bool:
    su = X.units(S)
    for fam in color_families(X, colors, R):
        for piece in fam:
            idx = sorted(piece)
            if X.dist[np.ix_(idx, idx)].max() > su:
                return False
    return True


def exact_min_colors(X: FiniteMetricSpace, R, S, node_cap: int = NODE_CAP) -> ScaleDimWitness:
    """Least ``k`` admitting a colouring with monochromatic ``R``-components of diameter ``<= S``.

    Each ``k`` from 1 upwards is searched exhaustively.  If the node cap cuts
    off some smaller ``k``, the first colouring found is reported as an upper
    bound only.
    """
    R, S = as_fraction(R), as_fraction(S)
    if R < 0 or S < 0:
        raise ParameterError("R and S must be >= 0")
    n = len(X)
    ptr, idx = _neighbour_csr(X, R)
    order = coloring_order(X)
    su = X.units(S)
    transcript = []
    capped = False
    for k in range(1, n + 1):
        status, colors, nodes = kernels.color_search(order, ptr, idx, X.dist, su, k, node_cap)
        transcript.append({"k": k, "status": int(status), "nodes": int(nodes)})
        if status == 1:
            colors = colors.tolist()
            opt = UPPER if capped else EXACT
            return ScaleDimWitness(X.label, R, S, "coloring", k, {"colors": colors, "families": color_families(X, colors, R)}, opt, transcript)
        if status == -1:
            capped = True
    # singletons always work (k = n), unreachable in practice
    raise ResourceError("no colouring found")


def colors_to_cover(w: ScaleDimWitness, X: FiniteMetricSpace) -> Cover:
    """Enlarge every coloured piece by ``R/2``.

    Same-coloured pieces are more than ``R`` apart, so the enlargements stay
    disjoint: multiplicity ``<= k``, bound ``<= S + R``, Lebesgue ``>= R/2``.
    """
    if w.kind != "coloring":
        raise ParameterError("colors_to_cover needs a colouring witness")
    half = w.R / 2
    members = [X.neighbourhood(piece, half) for fam in w.certificate["families"] for piece in fam]
    return Cover(X, members, half, w.S + w.R)


# covers: all subsets


def _clique_partition_search(X: FiniteMetricSpace, cliques, su: int, k: int, node_cap: int):
    """Group cliques so that unions have diameter <= su and every point lies in <= k unions.

    A short probe in lexicographic clique order (consecutive cliques are close,
    good at finding groupings) precedes the exhaustive pass in order of
    decreasing clique size (good at refuting).
    """
    probe = min(node_cap, 200_000)
    try:
        ok, groups, nodes = _grouping_dfs(X, sorted(sorted(c) for c in cliques), su, k, probe)
        if ok:
            return ok, groups, nodes
    except ResourceError:
        nodes = probe
    ok, groups, more = _grouping_dfs(X, sorted((sorted(c) for c in cliques), key=lambda c: (-len(c), c)), su, k, node_cap)
    return ok, groups, nodes + more


def _grouping_dfs(X: FiniteMetricSpace, cliques, su: int, k: int, node_cap: int):
    n = len(X)
    dist = X.dist
    groups: list[set] = []
    count = np.zeros(n, dtype=np.int64)
    assign = [-1] * len(cliques)
    nodes = 0

    def place(i: int) -> bool:
        nonlocal nodes
        if i == len(cliques):
            return True
        c = cliques[i]
        options = list(range(len(groups))) + [len(groups)]
        for g in options:
            nodes += 1
            if nodes > node_cap:
                raise ResourceError("clique partition search exceeded node cap")
            if g == len(groups):
                if (count[c] + 1 > k).any():
                    continue
                groups.append(set(c))
                count[c] += 1
                assign[i] = g
                if place(i + 1):
                    return True
                groups.pop()
                count[c] -= 1
                continue
            grp = groups[g]
            new = [p for p in c if p not in grp]
            if (count[new] + 1 > k).any():
                continue
            if new and dist[np.ix_(new, list(grp) + new)].max() > su:
                continue
            grp.update(new)
            count[new] += 1
            assign[i] = g
            if place(i + 1):
                return True
            grp.difference_update(new)
            count[new] -= 1
        return False

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10 * len(cliques) + 100))
    try:
        ok = place(0)
    finally:
        sys.setrecursionlimit(old)
    return ok, [frozenset(g) for g in groups], nodes


def _min_mult_all(X: FiniteMetricSpace, R, S, node_cap: int) -> ScaleDimWitness:
    su = X.units(S)
    cliques = list(maximal_cliques(X, R))
    if any(X.dist[np.ix_(c, c)].max() > su for c in cliques if len(c) > 1):
        raise PreconditionError(f"an R-clique has diameter above S={S}; no valid cover exists")
    greedy = greedy_clique_cover(X, R, S)
    ub = multiplicity(greedy)
    transcript = [{"greedy": ub}]
    capped = False
    for k in range(1, ub):
        try:
            ok, groups, nodes = _clique_partition_search(X, cliques, su, k, node_cap)
        except ResourceError:
            transcript.append({"k": k, "status": -1})
            capped = True
            continue
        transcript.append({"k": k, "status": int(ok), "nodes": nodes})
        if ok:
            cover = Cover(X, groups, R, S)
            return ScaleDimWitness(X.label, R, S, "cover", multiplicity(cover), cover, UPPER if capped else EXACT, transcript)
    return ScaleDimWitness(X.label, R, S, "cover", ub, greedy, UPPER if capped else EXACT, transcript)


# covers: arcs on a cycle


def cycle_order(X: FiniteMetricSpace) -> tuple[list[int], int]:
    """Point indices in cyclic order and the step length in units.

    Torus coordinates are used when present; otherwise the metric itself must
    be that of an evenly spaced cycle.
    """
    st = X.structure
    if st.get("kind") == "torus" and len(st.get("moduli", ())) == 1 and "coords" in st:
        (m,) = st["moduli"]
        coords = [c[0] for c in st["coords"]]
        order = sorted(range(len(X)), key=lambda i: coords[i])
        step = int(X.dist[order[0], order[1 % m]]) if m > 1 else 1
        return order, step
    order, step = _walk_cycle(X)
    if order is None:
        raise UnsupportedSpaceError(f"{X.label}: arcs need a cyclic structure")
    return order, step


def _walk_cycle(X: FiniteMetricSpace):
    m = len(X)
    if m == 1:
        return [0], 1
    d = X.dist
    step = int(d[0][d[0] > 0].min())
    order, prev = [0], -1
    while len(order) < m:
        cur = order[-1]
        nxt = [j for j in np.flatnonzero(d[cur] == step).tolist() if j != prev and j not in order[-1:]]
        nxt = [j for j in nxt if j not in order] or nxt
        if not nxt or nxt[0] in order:
            return None, step
        prev = cur
        order.append(nxt[0])
    idx = np.array(order)
    k = np.arange(m)
    gap = np.abs(k[:, None] - k[None, :])
    want = step * np.minimum(gap, m - gap)
    if not np.array_equal(d[np.ix_(idx, idx)], want):
        return None, step
    return order, step


def _arc_diameter_units(p: int, m: int, step: int) -> int:
    return step * min(p - 1, m // 2)


def _arc_starts(m: int, r: int, lmax: int, k: int, node_cap: int):
    """Cyclic compositions of ``m`` windows into runs of length ``<= lmax``
    with at most ``k - 1`` run starts in any ``r`` consecutive windows.
    A start at 0 is assumed (rotation)."""
    limit = k - 1
    nodes = 0
    failed = set()

    def window_ok(starts, pos):
        # starts in (pos - r, pos]
        return sum(1 for s in starts if pos - r < s <= pos) <= limit

    def closes(starts):
        # windows wrapping past m: positions m .. m + r - 1 with starts shifted
        ext = starts + [s + m for s in starts if s < r]
        return all(window_ok(ext, p) for p in range(m, m + r))

    def dfs(starts):
        nonlocal nodes
        nodes += 1
        if nodes > node_cap:
            raise ResourceError("arc search exceeded node cap")
        last = starts[-1]
        key = (tuple(s for s in starts if s < r), last, tuple(s for s in starts if s > last - r))
        if key in failed:
            return None
        rest = m - last
        if 1 <= rest <= lmax and closes(starts):
            return list(starts)
        for gap in range(min(lmax, rest - 1), 0, -1):
            nxt = last + gap
            starts.append(nxt)
            if window_ok(starts, nxt):
                got = dfs(starts)
                if got is not None:
                    return got
            starts.pop()
        failed.add(key)
        return None

    return dfs([0]), nodes


def _min_mult_arcs(X: FiniteMetricSpace, R, S, node_cap: int) -> ScaleDimWitness:
    order, step = cycle_order(X)
    m = len(order)
    Ru, Su = X.units(R), X.units(S)
    r = Ru // step
    transcript = []
    if 2 * r >= m - 1:
        # the whole cycle has diameter <= R
        if X.dist.max() > Su:
            raise PreconditionError("the space has diameter <= R but > S; no valid cover exists")
        cover = Cover(X, [range(m)], R, S)
        return ScaleDimWitness(X.label, R, S, "cover", 1, cover, EXACT, transcript)
    if step * r > Su:
        raise PreconditionError(f"an R-window has diameter above S={S}; no valid cover exists")
    whole_ok = step * (m // 2) <= Su
    if whole_ok:
        transcript.append({"k": 1, "status": 1})
        return ScaleDimWitness(X.label, R, S, "cover", 1, Cover(X, [range(m)], R, S), EXACT, transcript)
    if m <= 3 * r:
        # short cycles have R-cliques that are not windows (e.g. {0, r, 2r})
        return _min_mult_arcs_brute(X, order, step, R, S, transcript)
    # a run of L windows covers L + r points
    lmax = 0
    while lmax + 1 + r < m and _arc_diameter_units(lmax + 1 + r, m, step) <= Su:
        lmax += 1
    transcript.append({"k": 1, "status": 0, "reason": "runs overlap in r >= 1 points" if r else "search"})
    k0 = 2 if r >= 1 else 1
    for k in range(k0, m + 1):
        starts, nodes = _arc_starts(m, r, lmax, k, node_cap)
        transcript.append({"k": k, "status": int(starts is not None), "nodes": nodes})
        if starts is not None:
            bounds = starts + [m]
            members = []
            for a, b in zip(bounds, bounds[1:]):
                members.append([order[x % m] for x in range(a, b + r)])
            cover = Cover(X, members, R, S)
            return ScaleDimWitness(X.label, R, S, "cover", multiplicity(cover), cover, EXACT, transcript)
    raise ResourceError("arc search failed")


ARC_BRUTE_CAP = 22


def _min_mult_arcs_brute(X, order, step, R, S, transcript) -> ScaleDimWitness:
    """All sets of arcs, for cycles too short for the window argument."""
    import itertools

    m = len(order)
    Su = X.units(S)
    arcs = []
    for length in range(1, m):
        if _arc_diameter_units(length, m, step) <= Su:
            arcs.extend(frozenset(order[(a + i) % m] for i in range(length)) for a in range(m))
    if step * (m // 2) <= Su:
        arcs.append(frozenset(range(m)))
    arcs = list(dict.fromkeys(arcs))
    if len(arcs) > ARC_BRUTE_CAP:
        raise ResourceError(f"{len(arcs)} arcs exceed the brute-force cap {ARC_BRUTE_CAP}")
    masks = [sum(1 << p for p in a) for a in arcs]
    cliques = [sum(1 << p for p in c) for c in maximal_cliques(X, R)]
    full = (1 << m) - 1
    best = None
    for size in range(1, len(arcs) + 1):
        for combo in itertools.combinations(range(len(arcs)), size):
            union = 0
            for i in combo:
                union |= masks[i]
            if union != full:
                continue
            if not all(any(c & ~masks[i] == 0 for i in combo) for c in cliques):
                continue
            mult = max(sum(1 for i in combo if masks[i] >> p & 1) for p in range(m))
            if best is None or mult < best[0]:
                best = (mult, combo)
    transcript.append({"brute_force_arcs": len(arcs)})
    if best is None:
        raise PreconditionError("no arc cover satisfies the bound and Lebesgue targets")
    cover = Cover(X, [arcs[i] for i in best[1]], R, S)
    return ScaleDimWitness(X.label, R, S, "cover", best[0], cover, EXACT, transcript)


def exact_min_multiplicity(X: FiniteMetricSpace, R, S, shape: str = "all-subsets", node_cap: int = NODE_CAP) -> ScaleDimWitness:
    """Least multiplicity of an ``S``-bounded cover with Lebesgue number ``>= R``.

    ``shape="arcs"`` searches covers by arcs of a cycle; ``"all-subsets"``
    searches all covers (every cover can be shrunk to unions of maximal
    ``R``-cliques, so grouping cliques is exhaustive).
    """
    R, S = as_fraction(R), as_fraction(S)
    if shape == "arcs":
        w = _min_mult_arcs(X, R, S, node_cap)
    elif shape in ("all", "all-subsets"):
        if len(X) > EXACT_POINT_CAP:
            raise ResourceError(f"{len(X)} points exceed the exact search cap {EXACT_POINT_CAP}", attained=None)
        w = _min_mult_all(X, R, S, node_cap)
    else:
        raise ParameterError(f"unknown shape {shape!r}")
    chk = check_cover(w.certificate, R)
    if not chk.ok(w.value, S):
        raise AssertionError("solver certificate failed the cover checkers")
    return w


# profiles


Constructor = Callable[[FiniteMetricSpace, Fraction, Fraction], "Cover | None"]


def arcs_constructor(X, R, S_max):
    try:
        return exact_min_multiplicity(X, R, S_max, "arcs").certificate
    except (UnsupportedSpaceError, PreconditionError):
        return None


def slab_constructor(X, R, S_max):
    st = X.structure
    if st.get("kind") != "torus" or len(st.get("moduli", ())) != 2:
        return None
    try:
        return greedy_slab_cover(X, R, S_max)
    except (UnsupportedSpaceError, PreconditionError):
        return None


def _run_start_sets(n: int, gap: int):
    # subsets of Z/n containing 0 whose cyclic gaps are all >= gap
    def rec(cur):
        yield cur
        for x in range(cur[-1] + gap, n - gap + 1):
            yield from rec(cur + [x])
    yield from rec([0])


def shift_pullback_constructor(X, R, S_max, max_mult: int = 2):
    """Pull back arc covers of the shift cycle of a lamplighter quotient.

    Every set of run starts with gaps above ``R`` gives arcs overlapping in
    ``R`` points; each is pulled back and split into ``R``-components.  The
    cover with the smallest bound among those of multiplicity ``<= max_mult``
    is returned.
    """
    shifts = X.structure.get("shift")
    if shifts is None:
        return None
    n = max(shifts) + 1
    base = cycle_space(n)
    r = int(R)
    best = None
    for starts in _run_start_sets(n, r + 1):
        if len(starts) == 1:
            members = [range(n)]
        else:
            bounds = starts + [n]
            members = [{x % n for x in range(a, b + r)} for a, b in zip(bounds, bounds[1:])]
        cov = pullback_cover(X, shifts, Cover(base, members), R)
        if cov.S <= S_max and multiplicity(cov) <= max_mult:
            if best is None or (cov.S, multiplicity(cov)) < (best.S, multiplicity(best)):
                best = cov
    return best


CONSTRUCTOR_NODE_CAP = 200_000


def exact_constructor(X, R, S_max):
    if len(X) > EXACT_POINT_CAP:
        return None
    try:
        return exact_min_multiplicity(X, R, S_max, "all-subsets", node_cap=CONSTRUCTOR_NODE_CAP).certificate
    except (PreconditionError, ResourceError):
        return None


def clique_constructor(X, R, S_max):
    try:
        return greedy_clique_cover(X, R, S_max)
    except PreconditionError:
        return None


DEFAULT_CONSTRUCTORS: tuple = (arcs_constructor, slab_constructor, shift_pullback_constructor, exact_constructor, clique_constructor)


def cycle_space(m: int, step: int = 1, label: str | None = None) -> FiniteMetricSpace:
    """The cycle ``C_m`` with points ``0..m-1`` in cyclic order."""
    i = np.arange(m)
    d = np.abs(i[:, None] - i[None, :])
    d = np.minimum(d, m - d) * step
    return FiniteMetricSpace(list(range(m)), d, 1, label or f"C_{m}", structure={"kind": "torus", "moduli": (m,), "coords": [(x,) for x in range(m)]})


def torus_space(moduli: Sequence[int], label: str | None = None) -> FiniteMetricSpace:
    """Product of cycles with the l1 metric; points in lexicographic order."""
    import itertools

    moduli = tuple(moduli)
    coords = list(itertools.product(*[range(m) for m in moduli]))
    c = np.array(coords, dtype=np.int64).reshape(len(coords), len(moduli))
    d = np.zeros((len(coords), len(coords)), dtype=np.int64)
    for a, m in enumerate(moduli):
        diff = np.abs(c[:, a, None] - c[None, :, a])
        d += np.minimum(diff, m - diff)
    return FiniteMetricSpace(coords, d, 1, label or "x".join(f"C_{m}" for m in moduli), structure={"kind": "torus", "moduli": moduli, "coords": coords})


@dataclass
class DimProfile:
    n: int
    S: Fraction
    witnesses: list
    optimality: str
    lower_bounds: list  # per space: least multiplicity proven necessary at S_max

    def __iter__(self):
        return iter((self.n, self.S, self.witnesses))


def multiplicity_lower_bound(X: FiniteMetricSpace, R, S, k_max: int, node_cap: int = 5_000_000) -> int:
    """Largest ``k <= k_max`` such that every multiplicity below ``k`` is refuted.

    Multiplicity ``j`` is refuted when the exhaustive clique-grouping search
    finds no ``S``-bounded cover with Lebesgue ``>= R`` and multiplicity ``<= j``.
    """
    R, S = as_fraction(R), as_fraction(S)
    su = X.units(S)
    cliques = list(maximal_cliques(X, R))
    if any(X.dist[np.ix_(c, c)].max() > su for c in cliques if len(c) > 1):
        return k_max
    k = 1
    while k < k_max:
        try:
            ok, _, _ = _clique_partition_search(X, cliques, su, k, node_cap)
        except ResourceError:
            break
        if ok:
            break
        k += 1
    return k


def component_diameter(X: FiniteMetricSpace, R) -> Fraction:
    return bound(component_cover(X, R)) if len(X) else Fraction(0)


def dim_profile(
    spaces: Sequence[FiniteMetricSpace],
    R,
    S_max=None,
    constructors: Sequence[Constructor] | None = None,
) -> DimProfile:
    """Least ``n`` with one ``S <= S_max`` serving the whole family at scale ``R``.

    ``S_max`` defaults to ``4R``.  Multiplicity 1 is decided exactly: a
    partition with Lebesgue ``>= R`` is a union of ``R``-components, so it
    exists iff every ``R``-component has diameter ``<= S``.  Larger
    multiplicities come from the constructors; the profile is exact only when
    every space attaining the maximum carries a matching lower bound.
    """
    R = as_fraction(R)
    S_max = 4 * R if S_max is None else as_fraction(S_max)
    constructors = DEFAULT_CONSTRUCTORS if constructors is None else tuple(constructors)
    candidates = []
    lower = []
    for X in spaces:
        cands = []
        cd = component_diameter(X, R)
        if cd <= S_max:
            cands.append(component_cover(X, R))
            lower.append(1)
        else:
            lower.append(2)
            for make in constructors:
                cov = make(X, R, S_max)
                if cov is None:
                    continue
                chk = check_cover(cov, R)
                if not chk.lebesgue_ok or chk.bound > S_max:
                    continue
                cov.S = chk.bound
                cands.append(cov)
                if chk.multiplicity <= lower[-1]:
                    break
        if not cands:
            raise ResourceError(f"{X.label}: no constructor produced a cover with bound <= {S_max}")
        candidates.append(cands)
    mults = [min(multiplicity(c) for c in cands) for cands in candidates]
    top = max(mults, default=1)
    chosen = [min((c for c in cands if multiplicity(c) <= top), key=lambda c: (c.S, multiplicity(c))) for cands in candidates]
    S = max((c.S for c in chosen), default=Fraction(0))
    # multiplicity 2 is forced by the component argument; beyond that each
    # smaller multiplicity has to be refuted by exhaustive search
    for i, X in enumerate(spaces):
        if mults[i] > 2 and lower[i] == 2 and len(X) <= EXACT_POINT_CAP:
            lower[i] = multiplicity_lower_bound(X, R, S_max, mults[i])
    exact = all(lower[i] >= top for i in range(len(spaces)) if mults[i] == top)
    witnesses = [
        ScaleDimWitness(X.label, R, c.S, "cover", multiplicity(c), c, EXACT if lower[i] >= multiplicity(c) else UPPER)
        for i, (X, c) in enumerate(zip(spaces, chosen))
    ]
    return DimProfile(top - 1, S, witnesses, EXACT if exact else UPPER, lower)
