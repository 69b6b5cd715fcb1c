"""Finite quotients ``G/H`` as Schreier graphs with exact quotient metrics.

A finite-index subgroup is always given as a preimage ``H = phi^-1(T0)`` under
a homomorphism ``phi`` from the host onto (a subgroup of) a finite target.
Cosets ``gH`` correspond to left cosets ``phi(g) T0`` inside the image, and a
generator ``s`` moves ``gH`` to ``sgH``.
"""

from __future__ import annotations

import heapq
import io
import itertools
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from . import finite, kernels
from .errors import DomainError, IntegrityError, ParameterError, ResourceError
from .groups import Element, FreeAbelian, Heisenberg3, InfiniteDihedral, MarkedGroup, SemidirectZnZ, WreathLamp
from .spaces import FiniteMetricSpace, format_rational, parse_rational

INDEX_CAP = int(os.environ.get("BOXDIM_INDEX_CAP", 100_000))


@dataclass(frozen=True, eq=False)
class SubgroupSpec:
    """``H = phi^-1(subgroup)`` where ``phi`` sends the family's default
    generators to ``images`` in ``target``."""

    host: MarkedGroup
    target: finite.FiniteGroup
    images: tuple
    subgroup: frozenset
    label: str = "H"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        fam = self.host.family
        if len(self.images) != len(fam.default_generators()):
            raise DomainError(f"{self.label}: need one image per default generator of {fam!r}")
        object.__setattr__(self, "subgroup", frozenset(self.subgroup))
        if not self.target.is_subgroup(self.subgroup):
            raise IntegrityError(f"{self.label}: subgroup_of_target is not a subgroup")
        for rel in fam.relators(self._relator_period()):
            if self._eval_word(rel) != self.target.identity:
                raise IntegrityError(f"{self.label}: homomorphism violates relator {rel}")

    def _relator_period(self) -> int:
        if isinstance(self.host.family, WreathLamp):
            return self.target.order_of(self.images[1])
        return 1

    def _eval_word(self, word):
        T = self.target
        out = T.identity
        for i, e in word:
            out = T.mul(out, T.power(self.images[i], e))
        return out

    def hom(self, g: Element):
        """Image of a host element in the target."""
        return self._eval_word(self.host.family.to_word(g))

    def contains(self, g: Element) -> bool:
        return self.hom(g) in self.subgroup

    @cached_property
    def image(self) -> list:
        return self.target.closure(self.images, cap=max(INDEX_CAP * 8, finite.DEFAULT_ORDER_CAP))

    @cached_property
    def core(self) -> frozenset:
        """``T0`` intersected with the image of the host."""
        im = set(self.image)
        return frozenset(t for t in self.subgroup if t in im)

    @cached_property
    def index(self) -> int:
        return len(self.image) // len(self.core)

    def coset_key(self, t) -> frozenset:
        return frozenset(self.target.mul(t, h) for h in self.core)

    def __repr__(self) -> str:
        return f"SubgroupSpec({self.label!r}, host={self.host.family!r}, index={self.index})"


def preimage_spec(G: MarkedGroup, target, images, subgroup_gens=(), label="H", **meta) -> SubgroupSpec:
    sub = frozenset(target.closure(subgroup_gens))
    return SubgroupSpec(G, target, tuple(images), sub, label, dict(meta))


def congruence_spec(G: MarkedGroup, m: int | Sequence[int]) -> SubgroupSpec:
    """Level-m congruence kernel for free abelian, Heisenberg and semidirect hosts.

    For free abelian hosts ``m`` may be a tuple of per-coordinate moduli.
    """
    fam = G.family
    if isinstance(fam, FreeAbelian):
        moduli = tuple([int(m)] * fam.n) if isinstance(m, int) else tuple(int(x) for x in m)
        if len(moduli) != fam.n or any(x < 1 for x in moduli):
            raise ParameterError("need one positive modulus per coordinate")
        T = finite.cyclic_product(moduli)
        images = [tuple(int(i == j) % moduli[j] for j in range(fam.n)) for i in range(fam.n)]
        label = "+".join(f"{x}Z" for x in moduli)
        return SubgroupSpec(G, T, tuple(images), frozenset([T.identity]), label, {"kind": "torus", "moduli": moduli})
    if isinstance(fam, Heisenberg3):
        T = finite.heisenberg_mod(m)
        return SubgroupSpec(G, T, ((1 % m, 0, 0), (0, 1 % m, 0)), frozenset([T.identity]), f"H3[{m}]", {"kind": "heisenberg", "level": m})
    if isinstance(fam, SemidirectZnZ):
        return semidirect_congruence_spec(G, m)
    raise DomainError(f"no congruence subgroups for {fam!r}")


def semidirect_congruence_spec(G: MarkedGroup, m: int, period: int | None = None, subgroup_gens=()) -> SubgroupSpec:
    fam = G.family
    period = finite.matrix_order_mod(fam.A, m) if period is None else period
    T = finite.semidirect_mod(fam.A, m, period)
    n = fam.n
    images = [(tuple(int(i == j) % m for j in range(n)), 0) for i in range(n)] + [((0,) * n, 1 % period)]
    sub = frozenset(T.closure(subgroup_gens))
    return SubgroupSpec(G, T, tuple(images), sub, f"SD[{m},{period}]" + ("" if not subgroup_gens else f"<{len(sub)}>"), {"level": m, "period": period})


def linear_spec(G: MarkedGroup, rows: Sequence[Sequence[int]], moduli: Sequence[int], label=None) -> SubgroupSpec:
    """Kernel of ``v -> (rows . v) mod moduli`` on a free abelian host."""
    fam = G.family
    if not isinstance(fam, FreeAbelian):
        raise DomainError("linear_spec needs a free abelian host")
    moduli = tuple(int(x) for x in moduli)
    T = finite.cyclic_product(moduli)
    images = [tuple(rows[r][i] % moduli[r] for r in range(len(moduli))) for i in range(fam.n)]
    return SubgroupSpec(G, T, tuple(images), frozenset([T.identity]), label or f"ker{tuple(map(tuple, rows))}mod{moduli}")


def wreath_level_spec(G: MarkedGroup, n: int, subgroup_gens=(), label=None) -> SubgroupSpec:
    """Preimage of ``subgroup_gens`` (default trivial) under ``Z/k wr Z -> Z/k wr Z/n``."""
    fam = G.family
    if not isinstance(fam, WreathLamp):
        raise DomainError("wreath_level_spec needs a lamplighter host")
    k = fam.k
    T = finite.wreath_mod(k, n)
    a = (tuple(int(x == 0) for x in range(n)), 0)
    t = ((0,) * n, 1 % n)
    sub = frozenset(T.closure(subgroup_gens))
    meta = {"kind": "wreath", "k": k, "level": n}
    return SubgroupSpec(G, T, (a, t), sub, label or (f"W[{n}]" if len(sub) == 1 else f"W[{n}]<{len(sub)}>"), meta)


def dihedral_rotation_spec(G: MarkedGroup, n: int) -> SubgroupSpec:
    """``<r^n>``: kernel of ``D_inf -> D_n``."""
    if not isinstance(G.family, InfiniteDihedral):
        raise DomainError("needs an infinite dihedral host")
    T = finite.dihedral(n)
    return SubgroupSpec(G, T, ((1 % n, 0), (0, 1)), frozenset([T.identity]), f"<r^{n}>")


def dihedral_reflection_spec(G: MarkedGroup, n: int, j: int = 0) -> SubgroupSpec:
    """``<r^n, r^j s>``: preimage of an order-2 reflection subgroup of ``D_n``."""
    if not isinstance(G.family, InfiniteDihedral):
        raise DomainError("needs an infinite dihedral host")
    T = finite.dihedral(n)
    return SubgroupSpec(G, T, ((1 % n, 0), (0, 1)), frozenset([(0, 0), (j % n, 1)]), f"<r^{n},r^{j}s>")


def trivial_spec(G: MarkedGroup) -> SubgroupSpec:
    """``H = G``."""
    T = finite.cyclic_product(())
    return SubgroupSpec(G, T, tuple(() for _ in G.family.default_generators()), frozenset([()]), "G")


class FiniteQuotient:
    """The coset space ``G/H`` with its Schreier graph and exact quotient metric.

    Cosets are numbered in order of distance from the basepoint ``H`` (coset 0),
    except on tori, where they follow the coordinate order.
    ``reps[c]`` is a shortest host element in coset ``c``.
    """

    def __init__(self, spec: SubgroupSpec, index_cap: int = INDEX_CAP):
        if spec.index > index_cap:
            raise ResourceError(f"index {spec.index} exceeds cap {index_cap}", attained=spec.index)
        self.spec = spec
        G = spec.host
        T = spec.target
        self.moves = G.moves
        self.move_images = [spec.hom(s) for s, _ in self.moves]
        self.wts = np.array([w for _, w in self.moves], dtype=np.int64)
        self.scale = G.scale

        # provisional coset ids over the image
        prov = {}
        prov_rep = []
        for t in spec.image:
            if t in prov:
                continue
            cid = len(prov_rep)
            prov_rep.append(t)
            for h in spec.core:
                prov[T.mul(t, h)] = cid
        nprov = len(prov_rep)

        # Dijkstra over cosets from the basepoint, recording host representatives
        start = prov[T.identity]
        order, reps = [], {}
        best = {start: 0}
        heap = [(0, 0, start, G.identity())]
        tick = itertools.count(1)
        while heap:
            d, _, c, g = heapq.heappop(heap)
            if c in reps:
                continue
            reps[c] = g
            order.append(c)
            for (s, w), img in zip(self.moves, self.move_images):
                c2 = prov[T.mul(img, prov_rep[c])]
                if c2 not in reps and d + w < best.get(c2, d + w + 1):
                    best[c2] = d + w
                    heapq.heappush(heap, (d + w, next(tick), c2, G.family.mul(s, g)))
        if len(order) != nprov:
            raise IntegrityError(f"{spec.label}: Schreier graph is disconnected")
        if spec.meta.get("kind") == "torus":
            # coordinate order, so coset k of Z/m is the residue k
            order.sort(key=lambda c: prov_rep[c])
        renum = {c: i for i, c in enumerate(order)}
        self.coset_of = {t: renum[c] for t, c in prov.items()}
        self.reps_target = [prov_rep[c] for c in order]
        self.reps = [reps[c] for c in order]
        n = len(order)
        self.n = n
        nbr = np.empty((n, len(self.moves)), dtype=np.int64)
        for i, t in enumerate(self.reps_target):
            for j, img in enumerate(self.move_images):
                nbr[i, j] = self.coset_of[T.mul(img, t)]
        self.nbr = nbr
        self.dist = kernels.apsp_schreier(nbr, self.wts)
        if (self.dist >= kernels.UNREACHED).any():
            raise IntegrityError(f"{spec.label}: Schreier graph is disconnected")
        structure = dict(spec.meta)
        if structure.get("kind") == "torus":
            structure["coords"] = [tuple(t) for t in self.reps_target]
        elif structure.get("kind") == "wreath" and all(h[1] == 0 for h in spec.core):
            structure["shift"] = [t[1] for t in self.reps_target]
        self.space = FiniteMetricSpace(
            list(range(n)), self.dist, self.scale, f"{G.family!r}/{spec.label}", check=n <= 400, structure=structure
        )

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"FiniteQuotient({self.space.label}, index={self.n})"

    @property
    def label(self) -> str:
        return self.spec.label

    @property
    def basepoint(self) -> int:
        return 0

    def project(self, g: Element) -> int:
        """Quotient map ``g -> gH``."""
        return self.coset_of[self.spec.hom(g)]

    def act_target(self, t, c: int) -> int:
        return self.coset_of[self.spec.target.mul(t, self.reps_target[c])]

    def act(self, g: Element, c: int) -> int:
        """Left action of a host element on cosets."""
        return self.act_target(self.spec.hom(g), c)

    def permutation(self, g: Element) -> np.ndarray:
        t = self.spec.hom(g)
        return np.array([self.act_target(t, c) for c in range(self.n)], dtype=np.int64)

    def distance(self, x: int, y: int) -> Fraction:
        return Fraction(int(self.dist[x, y]), self.scale)

    def move_labels(self) -> list[str]:
        G = self.spec.host
        names = {}
        for g, name in zip(G.generators, G.names):
            names.setdefault(g, name)
            names.setdefault(G.family.inv(g), name + "^-1")
        return [names.get(s, repr(s)) for s, _ in self.moves]

    def edges(self):
        labels = self.move_labels()
        for c in range(self.n):
            for j in range(len(self.moves)):
                yield c, int(self.nbr[c, j]), Fraction(int(self.wts[j]), self.scale), labels[j]

    def export_edges(self, path=None, extra_header: dict | None = None) -> str:
        """Schreier edge list; written to ``path`` if given, returned as text."""
        buf = io.StringIO()
        header = {"label": self.spec.label, "group": repr(self.spec.host.family), "index": self.n}
        header.update(extra_header or {})
        buf.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        for a, b, w, lab in self.edges():
            buf.write(f"{a} {b} {format_rational(w)} {lab}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def build_quotient(spec: SubgroupSpec, index_cap: int = INDEX_CAP) -> FiniteQuotient:
    return FiniteQuotient(spec, index_cap=index_cap)


def quotient_distance(Q: FiniteQuotient, x: int, y: int) -> Fraction:
    """``d_{G/H}(x, y)``: weighted Schreier shortest path."""
    if not (0 <= x < Q.n and 0 <= y < Q.n):
        raise DomainError(f"coset out of range for index {Q.n}")
    return Q.distance(x, y)


def parse_header(line: str) -> dict[str, str]:
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def read_edge_list(text: str, label: str | None = None) -> FiniteMetricSpace:
    """Load an edge-list export as a finite metric space (shortest-path metric).

    Edges are read as undirected.  Vertex labels are the integers that appear.
    """
    header = {}
    edges = []
    verts = set()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            header.update(parse_header(line))
            continue
        parts = line.split()
        if len(parts) < 3:
            raise DomainError(f"malformed edge line {line!r}")
        a, b = int(parts[0]), int(parts[1])
        w = parse_rational(parts[2])
        if w <= 0:
            raise DomainError(f"edge weight must be positive: {line!r}")
        edges.append((a, b, w))
        verts.update((a, b))
    if "index" in header:
        verts.update(range(int(header["index"])))
    points = sorted(verts)
    pos = {p: i for i, p in enumerate(points)}
    scale = 1
    for _, _, w in edges:
        scale = math.lcm(scale, w.denominator)
    adj = [dict() for _ in points]
    for a, b, w in edges:
        iw = int(w * scale)
        i, j = pos[a], pos[b]
        if i == j:
            continue
        adj[i][j] = min(adj[i].get(j, iw), iw)
        adj[j][i] = min(adj[j].get(i, iw), iw)
    n = len(points)
    # one regular layer per distinct weight, padded with self loops
    layers = []
    for w in sorted({w for a in adj for w in a.values()}):
        dw = max(sum(1 for x in a.values() if x == w) for a in adj)
        lay = np.tile(np.arange(n, dtype=np.int64)[:, None], (1, dw))
        for i, a in enumerate(adj):
            js = [j for j, x in sorted(a.items()) if x == w]
            lay[i, : len(js)] = js
        layers.append((lay, np.full(dw, w, dtype=np.int64)))
    if layers:
        nbr = np.concatenate([l for l, _ in layers], axis=1)
        wts = np.concatenate([w for _, w in layers])
    else:
        nbr = np.arange(n, dtype=np.int64)[:, None]
        wts = np.ones(1, dtype=np.int64)
    dist = kernels.apsp_schreier(nbr, wts)
    structure = {}
    if "moduli" in header:
        structure["kind"] = "torus"
        structure["moduli"] = tuple(int(x) for x in header["moduli"].split(","))
    return FiniteMetricSpace(points, dist, scale, label or header.get("label", "edges"), structure=structure)


def __getattr__(name):
    # pushforward lives with the extension machinery, which imports this module
    if name == "pushforward_family":
        from .extension import pushforward_family

        return pushforward_family
    raise AttributeError(name)
