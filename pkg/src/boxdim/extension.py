"""Split extensions ``1 -> N -> G -> K -> 1`` acting on finite quotients.

For a finite-index ``H = phi^-1(T0)`` the kernel ``N`` maps onto a normal
subgroup ``M`` of the image of ``phi``; then

* ``HN = phi^-1(core . M)``, so ``pi(H)`` is described by the finite group
  ``image / M``, and
* ``N`` acts on ``G/H`` through ``M``, so every ``N``-orbit (a fibre of
  ``rho``) is an ``M``-orbit.

Everything in this module is computed from those two facts, exactly.  The
one window-dependent quantity is the metric that ``d_G`` induces on
``N / (N cap gHg^-1)``, which needs lengths of kernel elements in ``G``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import networkx as nx
import numpy as np

from .covers import Cover
from .errors import DomainError, IntegrityError, ParameterError, ResourceError, UnsupportedSpaceError
from .finite import FiniteGroup
from .groups import Element, FiniteCyclicProduct, FreeAbelian, InfiniteDihedral, MarkedGroup, SemidirectZnZ, WreathLamp
from .quotients import FiniteQuotient, SubgroupSpec, build_quotient
from .spaces import as_fraction


@dataclass(frozen=True, eq=False)
class ExtensionData:
    """A split extension with explicit projection and section.

    ``kernel_gens`` normally generate ``N`` (as a normal subgroup of ``G``).
    ``N`` is given its own marked group only when it is finitely generated;
    its metric in every check below is the restriction of ``d_G``.
    """

    G: MarkedGroup
    K: MarkedGroup
    pi: Callable[[Element], Element]
    section: Callable[[Element], Element]
    kernel_gens: tuple
    label: str
    N: MarkedGroup | None = None
    iota: Callable[[Element], Element] | None = None

    def in_kernel(self, g: Element) -> bool:
        return self.pi(g) == self.K.identity()


def _image_marking(G: MarkedGroup, K_family, pi) -> MarkedGroup:
    # d_K is the quotient metric of d_G exactly when K is marked by the images
    gens, wts, names = [], [], []
    for g, w, name in zip(G.generators, G.weights, G.names):
        k = pi(g)
        if k != K_family.identity():
            gens.append(k)
            wts.append(w)
            names.append(f"pi({name})")
    return MarkedGroup(K_family, tuple(gens), tuple(wts), tuple(names))


def z2_extension(G: MarkedGroup | None = None) -> ExtensionData:
    """``Z x 0 -> Z^2 -> Z`` (second coordinate)."""
    G = G or MarkedGroup(FreeAbelian(2))
    if G.family != FreeAbelian(2):
        raise DomainError("needs a Z^2 host")
    pi = lambda g: (g[1],)
    return ExtensionData(
        G, _image_marking(G, FreeAbelian(1), pi), pi, lambda k: (0, k[0]), ((1, 0),), "Z2",
        MarkedGroup(FreeAbelian(1)), lambda n: (n[0], 0),
    )


def dihedral_extension(G: MarkedGroup | None = None) -> ExtensionData:
    """``<r> -> D_inf -> Z/2``."""
    G = G or MarkedGroup(InfiniteDihedral())
    if not isinstance(G.family, InfiniteDihedral):
        raise DomainError("needs an infinite dihedral host")
    K = FiniteCyclicProduct([2])
    pi = lambda g: (g[1],)
    return ExtensionData(
        G, _image_marking(G, K, pi), pi, lambda k: (0, k[0]), ((1, 0),), "Dinf",
        MarkedGroup(FreeAbelian(1)), lambda n: (n[0], 0),
    )


def lamplighter_extension(G: MarkedGroup | None = None) -> ExtensionData:
    """``(+) Z/k -> Z/k wr Z -> Z``; the kernel is not finitely generated."""
    G = G or MarkedGroup(WreathLamp(2))
    if not isinstance(G.family, WreathLamp):
        raise DomainError("needs a lamplighter host")
    pi = lambda g: (g[1],)
    a = G.family.default_generators()[0]
    return ExtensionData(G, _image_marking(G, FreeAbelian(1), pi), pi, lambda k: ((), k[0]), (a,), f"Lamp{G.family.k}")


def semidirect_extension(G: MarkedGroup) -> ExtensionData:
    """``Z^n -> Z^n x|_A Z -> Z``."""
    fam = G.family
    if not isinstance(fam, SemidirectZnZ):
        raise DomainError("needs a semidirect host")
    n = fam.n
    pi = lambda g: (g[1],)
    zero = (0,) * n
    gens = tuple(fam.default_generators()[:n])
    return ExtensionData(
        G, _image_marking(G, FreeAbelian(1), pi), pi, lambda k: (zero, k[0]), gens, f"SD{fam.A}",
        MarkedGroup(FreeAbelian(n)), lambda v: (tuple(v), 0),
    )


def extension_for(G: MarkedGroup) -> ExtensionData:
    """The built-in split extension for a host group."""
    fam = G.family
    if isinstance(fam, FreeAbelian) and fam.n == 2:
        return z2_extension(G)
    if isinstance(fam, InfiniteDihedral):
        return dihedral_extension(G)
    if isinstance(fam, WreathLamp):
        return lamplighter_extension(G)
    if isinstance(fam, SemidirectZnZ):
        return semidirect_extension(G)
    raise UnsupportedSpaceError(f"no built-in extension for {fam!r}")


def validate_extension(ext: ExtensionData, radius: int = 2) -> None:
    """Check ``pi`` is a homomorphism with kernel generated as claimed, the
    section splits ``pi``, and ``N`` is normal, on a ball of normal forms."""
    G, K = ext.G, ext.K
    fam, kf = G.family, K.family
    ball = list(G.ball_lengths(radius * G.scale))
    for a in ball:
        for b in ball:
            if ext.pi(fam.mul(a, b)) != kf.mul(ext.pi(a), ext.pi(b)):
                raise IntegrityError(f"{ext.label}: pi is not multiplicative on {a!r}, {b!r}")
    for k in kf.default_generators():
        if ext.pi(ext.section(k)) != k:
            raise IntegrityError(f"{ext.label}: section does not split pi")
    for n in ext.kernel_gens:
        if not ext.in_kernel(n):
            raise IntegrityError(f"{ext.label}: kernel generator {n!r} is not in the kernel")
        for s, _ in G.moves:
            if not ext.in_kernel(fam.mul(fam.mul(s, n), fam.inv(s))):
                raise IntegrityError(f"{ext.label}: N is not normal")
    if ext.N is not None:
        for n in ext.N.family.default_generators():
            if not ext.in_kernel(ext.iota(n)):
                raise IntegrityError(f"{ext.label}: iota leaves the kernel")


# images of N and H in a finite target


def kernel_image(ext: ExtensionData, spec: SubgroupSpec) -> frozenset:
    """``M = phi(N)``: normal closure in the image of the kernel generators' images."""
    T = spec.target
    seeds = {spec.hom(n) for n in ext.kernel_gens}
    image = spec.image
    conj = {T.mul(T.mul(t, x), T.inv(t)) for t in image for x in seeds}
    return frozenset(T.closure(conj))


def _quotient_group(T: FiniteGroup, elements, M: frozenset, label: str) -> tuple[FiniteGroup, dict]:
    coset = {}
    for t in elements:
        if t not in coset:
            key = frozenset(T.mul(t, m) for m in M)
            for x in key:
                coset[x] = key
    rep = {key: next(iter(key)) for key in set(coset.values())}
    Q = FiniteGroup(
        lambda a, b: coset[T.mul(rep[a], rep[b])],
        coset[T.identity],
        lambda a: coset[T.inv(rep[a])],
        label=label,
    )
    return Q, coset


def project_spec(ext: ExtensionData, spec: SubgroupSpec) -> SubgroupSpec:
    """``pi(H)`` as a subgroup spec on ``K``, via ``image / M``."""
    if spec.host.family != ext.G.family:
        raise ParameterError("spec host differs from the extension's group")
    M = kernel_image(ext, spec)
    Q, coset = _quotient_group(spec.target, spec.image, M, f"{spec.target.label}/M")
    images = tuple(coset[spec.hom(ext.section(k))] for k in ext.K.family.default_generators())
    sub = frozenset(coset[c] for c in spec.core)
    return SubgroupSpec(ext.K, Q, images, sub, f"pi({spec.label})", {"source": spec.label})


@dataclass(frozen=True, eq=False)
class KernelSubgroup:
    """``N cap gHg^-1`` for ``g`` with ``phi(g) = t``; ``subgroup`` is its image in ``M``."""

    ext: ExtensionData
    spec: SubgroupSpec
    t: object
    M: frozenset
    subgroup: frozenset
    label: str

    @property
    def index(self) -> int:
        return len(self.M) // len(self.subgroup)

    def contains(self, n: Element) -> bool:
        if not self.ext.in_kernel(n):
            raise DomainError(f"{n!r} is not in N")
        return self.spec.hom(n) in self.subgroup

    def as_spec(self) -> SubgroupSpec:
        """The same subgroup as a spec on the marked group ``N``."""
        if self.ext.N is None:
            raise UnsupportedSpaceError(f"{self.ext.label}: N has no finite marking")
        T = self.spec.target
        ti = T.inv(self.t)
        conj = frozenset(T.mul(T.mul(self.t, h), ti) for h in self.spec.subgroup)
        images = tuple(self.spec.hom(self.ext.iota(n)) for n in self.ext.N.family.default_generators())
        return SubgroupSpec(self.ext.N, T, images, conj, self.label)


def _kernel_subgroup(ext, spec, t, M) -> KernelSubgroup:
    T = spec.target
    ti = T.inv(t)
    conj = frozenset(T.mul(T.mul(t, h), ti) for h in spec.core)
    return KernelSubgroup(ext, spec, t, M, frozenset(M & conj), f"N^{spec.label}")


def pushforward_family(ext: ExtensionData, sigma: Sequence[SubgroupSpec]):
    """``(pi(sigma), sigma_hat)``.

    ``sigma_hat`` runs over conjugates ``N cap gHg^-1`` with ``g`` taken over
    representatives of ``G`` modulo ``N H``; members with equal images in
    the target are coalesced, as are repeated members of ``sigma``.
    """
    projected, hats = [], []
    seen_src, seen_hat = set(), set()
    for spec in sigma:
        key = (spec.target.label, spec.images, spec.subgroup)
        if key in seen_src:
            continue
        seen_src.add(key)
        projected.append(project_spec(ext, spec))
        M = kernel_image(ext, spec)
        T = spec.target
        NH = frozenset(T.closure(list(M) + list(spec.core)))
        done = set()
        for t in spec.image:
            if t in done:
                continue
            done.update(T.mul(t, x) for x in NH)
            ks = _kernel_subgroup(ext, spec, t, M)
            hk = (key, ks.subgroup)
            if hk not in seen_hat:
                seen_hat.add(hk)
                hats.append(ks)
    return projected, hats


# the rho map


@dataclass
class RhoTable:
    ext: ExtensionData
    H: SubgroupSpec
    Q: FiniteQuotient
    QK: FiniteQuotient
    rho: np.ndarray
    fibers: list[list[int]]
    M: frozenset

    def orbit(self, c: int) -> list[int]:
        """``N``-orbit of a coset, i.e. ``p_G(Ng)`` for ``gH = c``."""
        return sorted({self.Q.act_target(m, c) for m in self.M})


def rho_map(ext: ExtensionData, H: SubgroupSpec, check_radius: int = 2) -> RhoTable:
    """Tabulate ``rho: G/H -> K/pi(H)`` with ``rho(gH) = pi(g) pi(H)``."""
    Q = build_quotient(H)
    QK = build_quotient(project_spec(ext, H))
    rho = np.array([QK.project(ext.pi(g)) for g in Q.reps], dtype=np.int64)
    G = ext.G
    # constancy on H-cosets (sampled) and equivariance under every generator
    for g in G.ball_lengths(check_radius * G.scale):
        if rho[Q.project(g)] != QK.project(ext.pi(g)):
            raise IntegrityError(f"rho is not well defined at {g!r}")
    for j, (s, _) in enumerate(Q.moves):
        ks = ext.pi(s)
        for c in range(Q.n):
            if rho[Q.nbr[c, j]] != QK.act(ks, int(rho[c])):
                raise IntegrityError("rho is not G-equivariant")
    fibers = [[] for _ in range(QK.n)]
    for c in range(Q.n):
        fibers[int(rho[c])].append(c)
    return RhoTable(ext, H, Q, QK, rho, fibers, kernel_image(ext, H))


# key lemma


@dataclass
class KeyLemmaReport:
    ext: str
    H: str
    R: Fraction
    clauses: dict[int, bool | None]
    window_limited: bool = False
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v is True for v in self.clauses.values())

    @property
    def failed(self) -> list[int]:
        return [k for k, v in self.clauses.items() if v is False]

    @property
    def inconclusive(self) -> list[int]:
        return [k for k, v in self.clauses.items() if v is None]

    def as_dict(self) -> dict:
        return {
            "ext": self.ext,
            "H": self.H,
            "R": str(self.R),
            "clauses": {str(k): v for k, v in self.clauses.items()},
            "window_limited": self.window_limited,
            "details": self.details,
        }


def kernel_lengths(ext: ExtensionData, spec: SubgroupSpec, L: frozenset, radius_units: int, cap: int | None = None):
    """Least ``G``-length of a kernel element in each class of ``M / L``.

    Returns ``(table, reached)`` where ``table`` maps a class (frozenset of
    target elements) to a length in units and ``reached`` is the radius the
    search completed.  ``M`` is abelian for every built-in extension.
    """
    G = ext.G
    T = spec.target
    try:
        ball = G.ball_lengths(radius_units, cap=cap)
        reached = radius_units
    except ResourceError as exc:
        reached = math.floor(as_fraction(exc.attained) * G.scale) - 1
        if reached < 0:
            raise
        ball = G.ball_lengths(reached, cap=cap)
    table = {}
    for x, d in sorted(ball.items(), key=lambda kv: kv[1]):
        if not ext.in_kernel(x):
            continue
        key = frozenset(T.mul(spec.hom(x), l) for l in L)
        if key not in table:
            table[key] = d
    return table, reached


def _clause5(rt: RhoTable, y: int, g: Element, R, ball_units: int, cap) -> tuple[bool | None, dict]:
    ext, Q, QK, H = rt.ext, rt.Q, rt.QK, rt.H
    T = H.target
    G = ext.G
    Ru = math.floor(as_fraction(R) * G.scale)
    base = Q.project(g)
    # rho^-1(P(y; R)) versus p_G(P(N; R) g) = M-orbit of {p_G(b g) : |b| <= R}
    near = set(np.flatnonzero(QK.dist[y] <= math.floor(as_fraction(R) * QK.scale)).tolist())
    lhs = {c for c in range(Q.n) if int(rt.rho[c]) in near}
    seeds = {Q.act(b, base) for b in G.ball_lengths(Ru)}
    rhs = {Q.act_target(m, c) for c in seeds for m in rt.M}
    info = {"y": y, "g": repr(g)}
    if lhs != rhs:
        info["set_mismatch"] = sorted(lhs ^ rhs)[:8]
        return False, info
    net = rt.orbit(base)
    if any(Q.dist[c, net].min() > Ru for c in lhs):
        info["not_a_net"] = True
        return False, info
    # canonical bijection N/(N cap gHg^-1) -> p_G(Ng) and its metric
    t = H.hom(g)
    L = _kernel_subgroup(ext, H, t, rt.M).subgroup
    if len(rt.M) // len(L) != len(net):
        info["bijection"] = False
        return False, info
    cls = {}
    for m in rt.M:
        cls.setdefault(frozenset(T.mul(m, l) for l in L), m)
    reps = list(cls.values())
    points = [Q.act_target(m, base) for m in reps]
    if len(set(points)) != len(points):
        info["bijection"] = False
        return False, info
    dq = Q.dist[np.ix_(points, points)]
    need = int(dq.max())
    table, reached = kernel_lengths(ext, H, L, max(need, ball_units), cap)
    k = len(reps)
    dn = np.full((k, k), -1, dtype=np.int64)
    for i, mi in enumerate(reps):
        for j in range(k):
            diff = frozenset(T.mul(T.mul(mi, T.inv(reps[j])), l) for l in L)
            dn[i, j] = table.get(diff, -1)
    if (dn < 0).any():
        if reached < need:
            info["window"] = reached
            return None, info
        # some class is longer than the whole net's diameter
        i, j = map(int, np.argwhere(dn < 0)[0])
        info["isometry"] = {"pair": (points[i], points[j]), "d_GH": int(dq[i, j]), "d_N": f">{reached}"}
        return False, info
    info["canonical"] = bool((dn == dq).all())
    if info["canonical"]:
        return True, info
    if not isometric(dq, dn):
        i, j = map(int, np.argwhere(dn != dq)[0])
        info["isometry"] = {"pair": (points[i], points[j]), "d_GH": int(dq[i, j]), "d_N": int(dn[i, j])}
        return False, info
    return True, info


def isometric(a: np.ndarray, b: np.ndarray) -> bool:
    """Is there a bijection carrying distance matrix ``a`` onto ``b``?"""
    if a.shape != b.shape:
        return False
    if sorted(map(tuple, np.sort(a, axis=1))) != sorted(map(tuple, np.sort(b, axis=1))):
        return False
    ga, gb = nx.Graph(), nx.Graph()
    for g, m in ((ga, a), (gb, b)):
        n = len(m)
        g.add_nodes_from((i, {"row": tuple(np.sort(m[i]))}) for i in range(n))
        g.add_edges_from((i, j, {"d": int(m[i, j])}) for i in range(n) for j in range(i + 1, n))
    return nx.is_isomorphic(
        ga, gb, node_match=lambda x, y: x["row"] == y["row"], edge_match=lambda x, y: x["d"] == y["d"]
    )


def verify_key_lemma(ext: ExtensionData, H: SubgroupSpec, R, *, g_samples: int = 2, ball_cap: int | None = None) -> KeyLemmaReport:
    """Check every clause of the extension lemma on ``G/H`` exactly.

    Clause 5 is tested at each ``k`` coset with ``g = s(k) n`` for the first
    ``g_samples`` kernel elements ``n`` (identity first).  Its isometry part
    uses the restriction of ``d_G`` to ``N``; lengths come from a ball in
    ``G``, and a pair whose kernel class is not reached is inconclusive
    unless the quotient distance is already shorter than the search radius.
    """
    R = as_fraction(R)
    if R < 0:
        raise ParameterError("R must be >= 0")
    rt = rho_map(ext, H)
    Q, QK = rt.Q, rt.QK
    fam = ext.G.family
    clauses: dict[int, bool | None] = {1: True}
    details: dict = {}

    # 2: fibres are N-orbits p_G(gN)
    ok2 = True
    for y in range(QK.n):
        g = ext.section(QK.reps[y])
        if sorted(rt.fibers[y]) != rt.orbit(Q.project(g)):
            ok2 = False
            details["clause2"] = {"y": y}
            break
    clauses[2] = ok2

    # 3: index product
    core_M = len(rt.M & H.core)
    clauses[3] = Q.n == QK.n * (len(rt.M) // core_M)
    details["indices"] = (Q.n, QK.n, len(rt.M) // core_M)

    # 4: d_{K/pi H}(a, b) = min over the fibres of d_{G/H}
    ok4 = True
    for a in range(QK.n):
        for b in range(a, QK.n):
            m = int(Q.dist[np.ix_(rt.fibers[a], rt.fibers[b])].min())
            if m * QK.scale != int(QK.dist[a, b]) * Q.scale:
                ok4 = False
                details["clause4"] = {"pair": (a, b)}
                break
        if not ok4:
            break
    clauses[4] = ok4

    # 5
    kernel = [fam.identity()] + list(ext.kernel_gens)
    verdict: bool | None = True
    ball_units = int(Q.dist.max())
    for y in range(QK.n):
        g0 = ext.section(QK.reps[y])
        for n in kernel[: max(1, g_samples)]:
            v, info = _clause5(rt, y, fam.mul(g0, n), R, ball_units, ball_cap)
            if v is False:
                verdict = False
                details["clause5"] = info
                break
            if v is None:
                verdict = None
                details.setdefault("clause5_window", info)
        if verdict is False:
            break
    clauses[5] = verdict
    return KeyLemmaReport(ext.label, H.label, R, clauses, verdict is None, details)


# covers


def fiber_product_cover(rt: RhoTable, base_cover: Cover, fiber_covers: Mapping[int, Cover], R=None) -> Cover:
    """Assemble a cover of ``G/H`` from a base cover and fibre covers.

    For each base member ``U`` an anchor coset ``y_U`` is fixed (its least
    element); each member ``V`` of the fibre cover over ``y_U`` is carried to
    every fibre ``y`` in ``U`` by the section element ``s(k)`` with
    ``k y_U = y``.  The union is one member.  A point lies in at most
    ``mult(base) * max mult(fibre)`` members; bound and Lebesgue number are
    left to the checkers.
    """
    Q, QK, ext = rt.Q, rt.QK, rt.ext
    if base_cover.space is not QK.space and len(base_cover.space) != QK.n:
        raise ParameterError("base cover lives on a different space")
    kf = ext.K.family
    members = []
    for U in base_cover.members:
        anchor = min(U)
        if anchor not in fiber_covers:
            raise ParameterError(f"no fibre cover over coset {anchor}")
        fc = fiber_covers[anchor]
        fiber = rt.fibers[anchor]
        if len(fc.space) != len(fiber):
            raise ParameterError(f"fibre cover over {anchor} has the wrong size")
        inv_anchor = kf.inv(QK.reps[anchor])
        moves = [Q.permutation(ext.section(kf.mul(QK.reps[y], inv_anchor))) for y in sorted(U)]
        for V in fc.members:
            pts = [fiber[i] for i in V]
            members.append(frozenset(int(p[c]) for p in moves for c in pts))
    cover = Cover(Q.space, members, R)
    return cover


def fiber_space(rt: RhoTable, y: int):
    """A fibre as a metric subspace of ``G/H`` (induced distances)."""
    return rt.Q.space.subspace(rt.fibers[y], label=f"fiber[{y}]")
