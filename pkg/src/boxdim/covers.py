"""Covers of finite metric spaces and their exact checkers.

A cover stores members as frozensets of point indices.  Multiplicity, bound
and Lebesgue number are computed exactly against the space's integer
distance table.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from . import kernels
from .errors import DomainError, IntegrityError, ParameterError, PreconditionError, ResourceError, UnsupportedSpaceError
from .spaces import FiniteMetricSpace, as_fraction, format_rational, parse_rational

CLIQUE_CAP = int(os.environ.get("BOXDIM_CLIQUE_CAP", 2_000_000))


@dataclass(eq=False)
class Cover:
    space: FiniteMetricSpace
    members: list
    R: Fraction | None = None
    S: Fraction | None = None

    def __post_init__(self):
        n = len(self.space)
        mem = []
        for m in self.members:
            m = frozenset(int(i) for i in m)
            if not m:
                raise DomainError("cover members must be non-empty")
            if min(m) < 0 or max(m) >= n:
                raise DomainError("member refers to a point outside the space")
            mem.append(m)
        self.members = mem
        covered = set().union(*mem) if mem else set()
        if len(covered) != n:
            raise DomainError(f"members miss {n - len(covered)} points of {self.space.label}")
        self.R = None if self.R is None else as_fraction(self.R)
        self.S = None if self.S is None else as_fraction(self.S)

    def __len__(self) -> int:
        return len(self.members)

    def __repr__(self) -> str:
        return f"Cover({self.space.label!r}, members={len(self.members)})"

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        ptr = np.zeros(len(self.members) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(m) for m in self.members])
        idx = np.fromiter(itertools.chain.from_iterable(sorted(m) for m in self.members), dtype=np.int64, count=int(ptr[-1]))
        return ptr, idx

    def point_counts(self) -> np.ndarray:
        _, idx = self.csr()
        return np.bincount(idx, minlength=len(self.space))

    def member_diameters(self) -> list[Fraction]:
        ptr, idx = self.csr()
        d = kernels.member_diameters(self.space.dist, ptr, idx)
        return [Fraction(int(x), self.space.scale) for x in d]


def multiplicity(c: Cover) -> int:
    """Largest number of members sharing a point."""
    return int(c.point_counts().max()) if len(c.space) else 0


def has_empty_intersections(c: Cover, k: int, cap: int = 2_000_000) -> bool:
    """Every ``k`` distinct members have empty common intersection (literal check)."""
    if k > len(c.members):
        return True
    total = math.comb(len(c.members), k)
    if total > cap:
        raise ResourceError(f"{total} member {k}-subsets exceed cap {cap}")
    for combo in itertools.combinations(c.members, k):
        inter = combo[0]
        for m in combo[1:]:
            inter = inter & m
            if not inter:
                break
        if inter:
            return False
    return True


def bound(c: Cover) -> Fraction:
    """Largest member diameter."""
    return max(c.member_diameters(), default=Fraction(0))


def maximal_cliques(space: FiniteMetricSpace, R, cap: int = CLIQUE_CAP) -> Iterable[list[int]]:
    """Maximal sets of pairwise distance ``<= R`` (maximal cliques of the R-graph)."""
    g = nx.Graph()
    g.add_nodes_from(range(len(space)))
    g.add_edges_from(space.proximity_edges(R))
    for k, clique in enumerate(nx.find_cliques(g)):
        if k >= cap:
            raise ResourceError(f"more than {cap} maximal cliques at R={R}")
        yield clique


def lebesgue_failures(c: Cover, R, restrict: Iterable[int] | None = None, limit: int = 1) -> list[frozenset]:
    """Diameter-``<= R`` sets (maximal cliques) contained in no member."""
    space = c.space
    if restrict is not None:
        keep = sorted(set(restrict))
        sub = space.subspace(keep)
        back = keep
    else:
        sub, back = space, None
    by_point: list[list[frozenset]] = [[] for _ in range(len(space))]
    for m in c.members:
        for p in m:
            by_point[p].append(m)
    out = []
    for clique in maximal_cliques(sub, R):
        pts = [back[i] for i in clique] if back is not None else clique
        first = min(pts, key=lambda p: len(by_point[p]))
        if not any(m.issuperset(pts) for m in by_point[first]):
            out.append(frozenset(pts))
            if len(out) >= limit:
                break
    return out


def lebesgue_at_least(c: Cover, R, restrict: Iterable[int] | None = None) -> bool:
    """Every subset of diameter ``<= R`` lies in one member.

    ``restrict`` limits the check to subsets of the given points.
    """
    R = as_fraction(R)
    if R < 0:
        raise ParameterError("R must be >= 0")
    return not lebesgue_failures(c, R, restrict)


@dataclass(frozen=True)
class CoverCheck:
    multiplicity: int
    bound: Fraction
    lebesgue_ok: bool

    def ok(self, mult: int | None = None, S=None) -> bool:
        return (
            self.lebesgue_ok
            and (mult is None or self.multiplicity <= mult)
            and (S is None or self.bound <= as_fraction(S))
        )


def check_cover(c: Cover, R=None, restrict=None) -> CoverCheck:
    R = c.R if R is None else R
    leb = True if R is None else lebesgue_at_least(c, R, restrict)
    return CoverCheck(multiplicity(c), bound(c), leb)


# constructors


def trivial_cover(space: FiniteMetricSpace, R=None) -> Cover:
    return Cover(space, [range(len(space))], R, space.diameter())


def component_cover(space: FiniteMetricSpace, R) -> Cover:
    """The ``R``-components: the finest cover of multiplicity 1 with Lebesgue ``>= R``."""
    lab = space.components(R)
    members = [np.flatnonzero(lab == k).tolist() for k in range(int(lab.max()) + 1)] if len(space) else []
    c = Cover(space, members, R)
    c.S = bound(c)
    return c


def refine_by_components(space: FiniteMetricSpace, members: Sequence[Iterable[int]], R) -> list[frozenset]:
    """Split each member into its ``R``-components."""
    out = []
    for m in members:
        mask = np.zeros(len(space), dtype=np.bool_)
        mask[list(m)] = True
        lab = space.components(R, mask)
        for k in range(int(lab.max()) + 1 if mask.any() else 0):
            out.append(frozenset(np.flatnonzero(lab == k).tolist()))
    return out


def absorb_cliques(space: FiniteMetricSpace, blocks: Sequence[Iterable[int]], R) -> list[frozenset]:
    """Enlarge a partition into blocks so that every maximal ``R``-clique is in a member.

    Each clique goes to the block holding most of its points (ties: lowest block).
    """
    block_of = np.full(len(space), -1, dtype=np.int64)
    blocks = [sorted(b) for b in blocks]
    for k, b in enumerate(blocks):
        block_of[b] = k
    if (block_of < 0).any():
        raise DomainError("blocks must partition the space")
    return _absorb(space, blocks, maximal_cliques(space, R))


def _absorb(space, blocks, cliques) -> list[frozenset]:
    block_of = np.full(len(space), -1, dtype=np.int64)
    blocks = [sorted(b) for b in blocks]
    for k, b in enumerate(blocks):
        block_of[b] = k
    extra: list[set] = [set() for _ in blocks]
    for clique in cliques:
        owners = block_of[clique]
        if (owners == owners[0]).all():
            continue
        counts = np.bincount(owners, minlength=len(blocks))
        extra[int(np.argmax(counts))].update(clique)
    return [frozenset(b) | frozenset(e) for b, e in zip(blocks, extra)]


def greedy_clique_cover(space: FiniteMetricSpace, R, S) -> Cover:
    """Group maximal ``R``-cliques into members of diameter ``<= S``.

    Cliques are visited in order of their least point; each joins the first
    existing member that stays within ``S``, else starts a new one.
    """
    R, S = as_fraction(R), as_fraction(S)
    su = space.units(S)
    cliques = sorted((sorted(c) for c in maximal_cliques(space, R)))
    if any(space.dist[np.ix_(c, c)].max() > su for c in cliques):
        raise PreconditionError(f"some R-clique has diameter above S={S}")
    members: list[set] = []
    for c in cliques:
        for m in members:
            idx = list(m | set(c))
            if space.dist[np.ix_(idx, idx)].max() <= su:
                m.update(c)
                break
        else:
            members.append(set(c))
    cover = Cover(space, members, R, S)
    return cover


def _torus_coords(space: FiniteMetricSpace) -> tuple[tuple[int, ...], np.ndarray]:
    st = space.structure
    if st.get("kind") != "torus" or "coords" not in st:
        raise UnsupportedSpaceError(f"{space.label}: no recognized cyclic or torus coordinates")
    moduli = tuple(st["moduli"])
    coords = np.array(st["coords"], dtype=np.int64).reshape(len(space), len(moduli))
    return moduli, coords


def _cuts(m: int, width: int, offset: int = 0) -> list[int]:
    """Cut positions on Z/m splitting it into ``m // width`` near-equal arcs."""
    k = max(1, m // width)
    return sorted({(offset + (i * m) // k) % m for i in range(k)})


def _arc_index(x: np.ndarray, cuts: list[int], m: int) -> np.ndarray:
    shifted = (x - cuts[0]) % m
    rel = [(c - cuts[0]) % m for c in cuts]
    return np.searchsorted(rel, shifted, side="right") - 1


def torus_blocks(moduli: tuple[int, ...], coords: np.ndarray, width: int, height: int, shift: int = 0) -> list[list[int]]:
    """Brick partition of a cycle or 2-torus.

    Rows of the given ``height``; inside row ``r`` the columns are cut every
    ``width`` starting at ``r * shift``.
    """
    if len(moduli) == 1:
        (m,) = moduli
        lab = _arc_index(coords[:, 0], _cuts(m, width), m)
    elif len(moduli) == 2:
        mx, my = moduli
        rows = _cuts(my, height)
        row = _arc_index(coords[:, 1], rows, my)
        col = np.zeros(len(coords), dtype=np.int64)
        ncols = max(1, mx // width)
        for r in range(len(rows)):
            sel = row == r
            col[sel] = _arc_index(coords[sel, 0], _cuts(mx, width, r * shift), mx)
        lab = row * (ncols + 1) + col
    else:
        raise UnsupportedSpaceError("brick covers are implemented for cycles and 2-tori")
    return [np.flatnonzero(lab == k).tolist() for k in np.unique(lab)]


def _band_candidates(space: FiniteMetricSpace, moduli, coords, R, S_max):
    """Pullbacks of arc covers along one coordinate (full circles in the others)."""
    from .dimsolve import exact_min_multiplicity

    for axis, m in enumerate(moduli):
        others = [i for i in range(len(moduli)) if i != axis]
        on_axis = [i for i in range(len(space)) if not coords[i, others].any()]
        on_axis.sort(key=lambda i: coords[i, axis])
        across = [i for i in range(len(space)) if coords[i, axis] == 0]
        rest = space.subset_diameter(across)
        base = space.subspace(on_axis, f"{space.label}|axis{axis}")
        base.structure = {"kind": "torus", "moduli": (m,), "coords": [(x,) for x in range(m)]}
        for s_units in sorted(set(base.dist.ravel().tolist())):
            s_arc = Fraction(s_units, space.scale)
            if s_arc + rest > S_max:
                break
            try:
                w = exact_min_multiplicity(base, R, s_arc, "arcs")
            except (PreconditionError, ResourceError):
                continue
            yield pullback_cover(space, coords[:, axis].tolist(), w.certificate, R)


def greedy_slab_cover(Q, R, S_max=None) -> Cover:
    """Low-bound cover of a cycle or 2-torus quotient with multiplicity ``<= n+1``.

    Candidates are arc pullbacks along each coordinate (slabs) and staggered
    bricks enlarged by clique absorption.  Every candidate is run through the
    checkers; the one with the smallest bound (then multiplicity) is
    returned.  ``S_max`` defaults to ``4 n R``.
    """
    space = Q.space if hasattr(Q, "space") else Q
    R = as_fraction(R)
    moduli, coords = _torus_coords(space)
    n = len(moduli)
    if n not in (1, 2):
        raise UnsupportedSpaceError("brick covers are implemented for cycles and 2-tori")
    S_max = 4 * n * R if S_max is None else as_fraction(S_max)
    cliques = [sorted(c) for c in maximal_cliques(space, R)]
    best, best_key = None, None

    def consider(cover):
        nonlocal best, best_key
        chk = check_cover(cover, R)
        if not chk.ok(n + 1, S_max):
            return
        key = (chk.bound, chk.multiplicity, len(cover))
        if best_key is None or key < best_key:
            cover.S = chk.bound
            best, best_key = cover, key

    for cover in _band_candidates(space, moduli, coords, R, S_max):
        consider(cover)
    if n == 2:
        mx, my = moduli
        for height in range(1, my + 1):
            for width in range(1, mx):
                for shift in sorted({0, width // 2, (width + 1) // 2}):
                    blocks = torus_blocks(moduli, coords, width, height, shift)
                    consider(Cover(space, _absorb(space, blocks, cliques), R))
    if best is None:
        raise PreconditionError(f"{space.label}: no slab or brick cover with multiplicity <= {n + 1} and bound <= {S_max} at R={R}")
    return best


# lifting


def lift_cover(G, Q, U: Cover, W: FiniteMetricSpace, S, R=None):
    """Lift a cover of ``G/H`` to the window ``W`` of ``G``.

    A point ``x`` of ``W`` is put, for each member ``U_i`` containing its
    coset, into the member keyed ``(i, b x)`` where ``b`` is the unique
    element of ``B_S(e)`` moving ``xH`` to the least coset of ``U_i``.
    Returns ``(cover, keys)``.
    """
    from .separation import collision_length

    S = as_fraction(S)
    rho = collision_length(Q)
    if not 3 * S < rho:
        raise PreconditionError(
            f"quotient map is injective only below radius {rho}; lifting needs injectivity on B_(3S) with 3S = {3 * S}"
        )
    ub = bound(U)
    if ub > S:
        raise PreconditionError(f"cover bound {ub} exceeds S={S}")
    fam = G.family
    ball = G.ball_lengths(math.floor(S * G.scale))
    elems = sorted(ball, key=lambda b: (ball[b], repr(b)))
    perms = np.stack([Q.permutation(b) for b in elems])
    anchors = [min(m) for m in U.members]
    # how[i][c] = index of the ball element taking coset c to anchor i
    how = []
    for a, m in zip(anchors, U.members):
        table = {}
        for j in range(len(elems)):
            for c in np.flatnonzero(perms[j] == a).tolist():
                if c in m:
                    if c in table:
                        raise IntegrityError("anchor element not unique; injectivity check inconsistent")
                    table[c] = j
        if set(table) != set(m):
            raise IntegrityError("member is not within S of its anchor")
        how.append(table)
    groups: dict = {}
    for p, x in enumerate(W.points):
        c = Q.project(x)
        for i, m in enumerate(U.members):
            if c in m:
                key = (i, fam.mul(elems[how[i][c]], x))
                groups.setdefault(key, set()).add(p)
    keys = sorted(groups, key=lambda k: (k[0], repr(k[1])))
    cover = Cover(W, [groups[k] for k in keys], U.R if R is None else R, S)
    return cover, keys


def nominal_points(W: FiniteMetricSpace, G, radius) -> list[int]:
    """Indices of window points within ``radius`` of the identity."""
    ball = G.ball_lengths(math.floor(as_fraction(radius) * G.scale))
    return [i for i, p in enumerate(W.points) if p in ball]


# text format


def write_cover(c: Cover, path=None) -> str:
    head = f"space={c.space.label.replace(' ', '_')}"
    if c.R is not None:
        head += f" R={format_rational(c.R)}"
    if c.S is not None:
        head += f" S={format_rational(c.S)}"
    lines = [head] + [f"{k}: " + " ".join(str(p) for p in sorted(m)) for k, m in enumerate(c.members)]
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def read_cover(text: str, space: FiniteMetricSpace) -> Cover:
    """Parse the cover format; point tokens are indices into ``space``."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise DomainError("empty cover file")
    head = {}
    for tok in lines[0].split():
        if "=" not in tok:
            raise DomainError(f"bad cover header {lines[0]!r}")
        k, v = tok.split("=", 1)
        head[k] = v
    members = []
    for ln in lines[1:]:
        if ":" not in ln:
            raise DomainError(f"bad member line {ln!r}")
        _, rest = ln.split(":", 1)
        members.append([int(t) for t in rest.split()])
    R = parse_rational(head["R"]) if "R" in head else None
    S = parse_rational(head["S"]) if "S" in head else None
    return Cover(space, members, R, S)


def pullback_cover(space: FiniteMetricSpace, labels: Sequence[int], base: Cover, R) -> Cover:
    """Pull a cover back along a 1-Lipschitz map and split into ``R``-components.

    ``labels[p]`` is the image of point ``p`` in ``base.space``.  Multiplicity
    does not grow, and Lebesgue ``>= R`` is inherited from the base cover.
    """
    labels = np.asarray(labels, dtype=np.int64)
    pre = [np.flatnonzero(np.isin(labels, sorted(m))).tolist() for m in base.members]
    members = refine_by_components(space, [p for p in pre if p], R)
    cover = Cover(space, members, R)
    cover.S = bound(cover)
    return cover
