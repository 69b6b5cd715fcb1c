"""Concrete finitely generated groups, normal forms and weighted word metrics.

Elements are plain tuples in a canonical normal form, so equality of elements
is equality of tuples.  The word metric is right invariant,
``d(g, h) = |g h^-1|``, which makes the Cayley graph edges ``g -- s g``
(left multiplication by a generator).
"""

from __future__ import annotations

import heapq
import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError, ResourceError
from .spaces import FiniteMetricSpace, as_fraction

Element = tuple
Word = list  # list of (generator index, exponent) over the family's default generators

DEFAULT_BALL_CAP = 200_000
DEFAULT_LAMP_WINDOW = 4096


class Family:
    """A concrete group: arithmetic on normal forms plus its default generators."""

    name = "family"
    ngens = 0

    def identity(self) -> Element:
        raise NotImplementedError

    def mul(self, g: Element, h: Element) -> Element:
        raise NotImplementedError

    def inv(self, g: Element) -> Element:
        raise NotImplementedError

    def generator_names(self) -> list[str]:
        raise NotImplementedError

    def default_generators(self) -> list[Element]:
        raise NotImplementedError

    def to_word(self, g: Element) -> Word:
        """Express ``g`` as a word in the default generators."""
        raise NotImplementedError

    def relators(self, period: int = 1) -> list[Word]:
        """Defining relators.  ``period`` bounds the infinite relator families
        (only used by the lamplighter) and should be a multiple of the order
        of the image of the shift in a finite target."""
        raise NotImplementedError

    def validate(self, g) -> Element:
        raise NotImplementedError

    def params(self) -> tuple:
        return ()

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self.params() == other.params()

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.params()))

    def __repr__(self) -> str:
        p = ", ".join(map(str, self.params()))
        return f"{type(self).__name__}({p})"

    # generic helpers

    def power(self, g: Element, k: int) -> Element:
        result = self.identity()
        base = g if k >= 0 else self.inv(g)
        k = abs(k)
        while k:
            if k & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            k >>= 1
        return result

    def evaluate(self, word: Word) -> Element:
        gens = self.default_generators()
        out = self.identity()
        for i, e in word:
            out = self.mul(out, self.power(gens[i], e))
        return out

    def commutator(self, g: Element, h: Element) -> Element:
        return self.mul(self.mul(g, h), self.mul(self.inv(g), self.inv(h)))


def _as_int_tuple(g, n, what) -> tuple[int, ...]:
    try:
        t = tuple(int(x) for x in g)
    except TypeError as exc:
        raise DomainError(f"{what}: expected a sequence of {n} integers, got {g!r}") from exc
    if len(t) != n:
        raise DomainError(f"{what}: expected {n} coordinates, got {len(t)}")
    return t


class FreeAbelian(Family):
    name = "free_abelian"

    def __init__(self, n: int):
        if n < 0:
            raise ParameterError("rank must be >= 0")
        self.n = int(n)
        self.ngens = self.n

    def params(self):
        return (self.n,)

    def identity(self):
        return (0,) * self.n

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def power(self, g, k):
        return tuple(k * a for a in g)

    def generator_names(self):
        return ["xyzw"[i] if self.n <= 4 else f"x{i}" for i in range(self.n)]

    def default_generators(self):
        return [tuple(int(i == j) for j in range(self.n)) for i in range(self.n)]

    def to_word(self, g):
        return [(i, a) for i, a in enumerate(g) if a]

    def relators(self, period=1):
        return [[(i, 1), (j, 1), (i, -1), (j, -1)] for i, j in itertools.combinations(range(self.n), 2)]

    def validate(self, g):
        return _as_int_tuple(g, self.n, self.name)


class FiniteCyclicProduct(Family):
    name = "finite_cyclic_product"

    def __init__(self, orders: Sequence[int]):
        self.orders = tuple(int(k) for k in orders)
        if any(k < 1 for k in self.orders):
            raise ParameterError("cyclic orders must be >= 1")
        self.ngens = len(self.orders)

    def params(self):
        return self.orders

    def identity(self):
        return (0,) * len(self.orders)

    def mul(self, g, h):
        return tuple((a + b) % k for a, b, k in zip(g, h, self.orders))

    def inv(self, g):
        return tuple((-a) % k for a, k in zip(g, self.orders))

    def power(self, g, e):
        return tuple((e * a) % k for a, k in zip(g, self.orders))

    def generator_names(self):
        return [f"c{i}" for i in range(len(self.orders))]

    def default_generators(self):
        m = len(self.orders)
        return [tuple(int(i == j) % self.orders[j] for j in range(m)) for i in range(m)]

    def to_word(self, g):
        return [(i, a) for i, a in enumerate(g) if a]

    def relators(self, period=1):
        rels = [[(i, k)] for i, k in enumerate(self.orders)]
        rels += [[(i, 1), (j, 1), (i, -1), (j, -1)] for i, j in itertools.combinations(range(len(self.orders)), 2)]
        return rels

    def validate(self, g):
        t = _as_int_tuple(g, len(self.orders), self.name)
        return tuple(a % k for a, k in zip(t, self.orders))

    def order(self) -> int:
        return math.prod(self.orders)


class Heisenberg3(Family):
    """Integer Heisenberg group; ``(a, b, c)`` is the matrix [[1,a,c],[0,1,b],[0,0,1]]."""

    name = "heisenberg"
    ngens = 2

    def identity(self):
        return (0, 0, 0)

    def mul(self, g, h):
        a, b, c = g
        x, y, z = h
        return (a + x, b + y, c + z + a * y)

    def inv(self, g):
        a, b, c = g
        return (-a, -b, -c + a * b)

    def generator_names(self):
        return ["x", "y"]

    def default_generators(self):
        return [(1, 0, 0), (0, 1, 0)]

    def to_word(self, g):
        # (a, b, c) = y^b x^a [x, y]^c
        a, b, c = g
        word = []
        if b:
            word.append((1, b))
        if a:
            word.append((0, a))
        comm = [(0, 1), (1, 1), (0, -1), (1, -1)] if c > 0 else [(1, 1), (0, 1), (1, -1), (0, -1)]
        word += comm * abs(c)
        return word

    def relators(self, period=1):
        z = [(0, 1), (1, 1), (0, -1), (1, -1)]
        zi = [(1, 1), (0, 1), (1, -1), (0, -1)]
        return [[(0, 1)] + z + [(0, -1)] + zi, [(1, 1)] + z + [(1, -1)] + zi]

    def validate(self, g):
        return _as_int_tuple(g, 3, self.name)


class InfiniteDihedral(Family):
    """``(e, p)`` is ``r^e s^p`` with ``s r s = r^-1``."""

    name = "infinite_dihedral"
    ngens = 2

    def identity(self):
        return (0, 0)

    def mul(self, g, h):
        a, p = g
        b, q = h
        return (a + (-b if p else b), (p + q) % 2)

    def inv(self, g):
        a, p = g
        return (a, 1) if p else (-a, 0)

    def generator_names(self):
        return ["r", "s"]

    def default_generators(self):
        return [(1, 0), (0, 1)]

    def to_word(self, g):
        a, p = g
        word = [(0, a)] if a else []
        if p:
            word.append((1, 1))
        return word

    def relators(self, period=1):
        return [[(1, 2)], [(1, 1), (0, 1), (1, 1), (0, 1)]]

    def validate(self, g):
        a, p = _as_int_tuple(g, 2, self.name)
        if p not in (0, 1):
            raise DomainError("reflection flag must be 0 or 1")
        return (a, p)


class WreathLamp(Family):
    """Lamplighter ``Z/k wr Z``.

    ``(lamps, t)``: ``lamps`` is a sorted tuple of ``(position, value)`` with
    nonzero values mod k, ``t`` the shift.  Product
    ``(f, t)(f', t') = (f + f'(. - t), t + t')``.  Default generators are
    ``a = (delta_0, 0)`` and ``t = (0, 1)``.
    """

    name = "wreath_lamp"
    ngens = 2

    def __init__(self, k: int = 2, window: int = DEFAULT_LAMP_WINDOW):
        if k < 2:
            raise ParameterError("lamp group order must be >= 2")
        self.k = int(k)
        self.window = int(window)

    def params(self):
        return (self.k,)

    def identity(self):
        return ((), 0)

    def _check_window(self, lamps):
        if lamps and (abs(lamps[0][0]) > self.window or abs(lamps[-1][0]) > self.window):
            raise ResourceError(
                f"lamp support exceeds configured window {self.window}",
                attained=max(abs(lamps[0][0]), abs(lamps[-1][0])),
            )

    def mul(self, g, h):
        f, t = g
        f2, t2 = h
        acc = dict(f)
        for x, v in f2:
            y = x + t
            nv = (acc.get(y, 0) + v) % self.k
            if nv:
                acc[y] = nv
            else:
                acc.pop(y, None)
        lamps = tuple(sorted(acc.items()))
        self._check_window(lamps)
        return (lamps, t + t2)

    def inv(self, g):
        f, t = g
        lamps = tuple(sorted((x - t, (-v) % self.k) for x, v in f))
        return (lamps, -t)

    def generator_names(self):
        return ["a", "t"]

    def default_generators(self):
        return [(((0, 1),), 0), ((), 1)]

    def to_word(self, g):
        f, t = g
        word = []
        for x, v in f:
            if x:
                word.append((1, x))
            word.append((0, v))
            if x:
                word.append((1, -x))
        if t:
            word.append((1, t))
        return word

    def relators(self, period=1):
        rels = [[(0, self.k)]]
        for i in range(1, max(1, period) + 1):
            conj = [(1, i), (0, 1), (1, -i)]
            conj_inv = [(1, i), (0, -1), (1, -i)]
            rels.append(conj + [(0, 1)] + conj_inv + [(0, -1)])
        return rels

    def validate(self, g):
        try:
            f, t = g
            acc = {}
            for x, v in f:
                nv = (acc.get(int(x), 0) + int(v)) % self.k
                if nv:
                    acc[int(x)] = nv
                else:
                    acc.pop(int(x), None)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"malformed lamplighter element {g!r}") from exc
        lamps = tuple(sorted(acc.items()))
        self._check_window(lamps)
        return (lamps, int(t))


def _mat_mul(a, b):
    n = len(a)
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n))


def _mat_vec(a, v):
    return tuple(sum(a[i][k] * v[k] for k in range(len(v))) for i in range(len(a)))


def _det(a):
    n = len(a)
    if n == 1:
        return a[0][0]
    return sum((-1) ** j * a[0][j] * _det(tuple(row[:j] + row[j + 1 :] for row in a[1:])) for j in range(n))


def _adjugate(a):
    n = len(a)
    if n == 1:
        return ((1,),)
    cof = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = tuple(row[:j] + row[j + 1 :] for k, row in enumerate(a) if k != i)
            cof[i][j] = (-1) ** (i + j) * _det(minor)
    return tuple(tuple(cof[j][i] for j in range(n)) for i in range(n))


class SemidirectZnZ(Family):
    """``Z^n x|_A Z`` with ``t v t^-1 = A v``; elements ``(v, t)``."""

    name = "semidirect"

    def __init__(self, matrix: Sequence[Sequence[int]]):
        a = tuple(tuple(int(x) for x in row) for row in matrix)
        n = len(a)
        if n == 0 or any(len(row) != n for row in a):
            raise ParameterError("matrix must be square and nonempty")
        det = _det(a)
        if abs(det) != 1:
            raise ParameterError(f"|det A| must be 1, got {det}")
        self.A = a
        self.n = n
        self.ngens = n + 1
        adj = _adjugate(a)
        self.A_inv = tuple(tuple(det * x for x in row) for row in adj)
        self._powers = {0: tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), 1: a, -1: self.A_inv}

    def params(self):
        return (self.A,)

    def matrix_power(self, t: int):
        if t not in self._powers:
            step = 1 if t > 0 else -1
            prev = self.matrix_power(t - step)
            self._powers[t] = _mat_mul(prev, self._powers[step])
        return self._powers[t]

    def identity(self):
        return ((0,) * self.n, 0)

    def mul(self, g, h):
        v, t = g
        w, s = h
        aw = _mat_vec(self.matrix_power(t), w)
        return (tuple(x + y for x, y in zip(v, aw)), t + s)

    def inv(self, g):
        v, t = g
        av = _mat_vec(self.matrix_power(-t), v)
        return (tuple(-x for x in av), -t)

    def generator_names(self):
        return [f"e{i}" for i in range(self.n)] + ["t"]

    def default_generators(self):
        gens = [(tuple(int(i == j) for j in range(self.n)), 0) for i in range(self.n)]
        return gens + [((0,) * self.n, 1)]

    def to_word(self, g):
        v, t = g
        word = [(i, a) for i, a in enumerate(v) if a]
        if t:
            word.append((self.n, t))
        return word

    def relators(self, period=1):
        rels = [[(i, 1), (j, 1), (i, -1), (j, -1)] for i, j in itertools.combinations(range(self.n), 2)]
        for i in range(self.n):
            col = [self.A[r][i] for r in range(self.n)]
            # t e_i t^-1 (A e_i)^-1
            rels.append([(self.n, 1), (i, 1), (self.n, -1)] + [(r, -c) for r, c in enumerate(col) if c])
        return rels

    def validate(self, g):
        try:
            v, t = g
        except (TypeError, ValueError) as exc:
            raise DomainError(f"malformed semidirect element {g!r}") from exc
        return (_as_int_tuple(v, self.n, self.name), int(t))


FAMILY_ALIASES = {
    "z": lambda params: FreeAbelian(1),
    "free_abelian": lambda params: FreeAbelian(params[0] if params else 1),
    "zn": lambda params: FreeAbelian(params[0] if params else 1),
    "finite_cyclic_product": lambda params: FiniteCyclicProduct(params),
    "cyclic": lambda params: FiniteCyclicProduct(params),
    "heisenberg": lambda params: Heisenberg3(),
    "infinite_dihedral": lambda params: InfiniteDihedral(),
    "dinf": lambda params: InfiniteDihedral(),
    "wreath_lamp": lambda params: WreathLamp(params[0] if params else 2),
    "lamp": lambda params: WreathLamp(params[0] if params else 2),
    "semidirect": lambda params: SemidirectZnZ(_square(params)),
}


def _square(params):
    n = math.isqrt(len(params))
    if n * n != len(params) or n == 0:
        raise ParameterError("semidirect params must list the n*n matrix entries row by row")
    return [params[i * n : (i + 1) * n] for i in range(n)]


def make_family(name: str, params: Sequence[int] = ()) -> Family:
    key = name.strip().lower()
    if key not in FAMILY_ALIASES:
        raise DomainError(f"unknown group family {name!r}; known: {sorted(FAMILY_ALIASES)}")
    return FAMILY_ALIASES[key](list(params))


@dataclass(frozen=True)
class MarkedGroup:
    """A group family with a weighted generating set.

    The generating set is closed under inverses internally (an inverse gets the
    weight of its generator).  Weights are positive rationals; internally
    lengths are integers in units of ``1/scale``.
    """

    family: Family
    generators: tuple = None
    weights: tuple = None
    names: tuple = None
    ball_cap: int = DEFAULT_BALL_CAP

    def __post_init__(self):
        gens = self.generators
        if gens is None:
            gens = tuple(self.family.default_generators())
            names = tuple(self.family.generator_names())
        else:
            gens = tuple(self.family.validate(g) for g in gens)
            names = self.names or tuple(f"g{i}" for i in range(len(gens)))
        weights = self.weights
        if weights is None:
            weights = (Fraction(1),) * len(gens)
        weights = tuple(as_fraction(w) for w in weights)
        if len(weights) != len(gens):
            raise ParameterError("one weight per generator required")
        if any(w <= 0 for w in weights):
            raise ParameterError("weights must be strictly positive")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "names", tuple(names))
        if self.generators != tuple(self.family.default_generators()):
            self._check_generates()

    def _check_generates(self, radius_cap: int = 64):
        targets = set(self.family.default_generators())
        targets.discard(self.family.identity())
        seen = {self.family.identity()}
        frontier = [self.family.identity()]
        for _ in range(radius_cap):
            nxt = []
            for g in frontier:
                for s, _w in self.moves:
                    h = self.family.mul(s, g)
                    if h not in seen:
                        seen.add(h)
                        nxt.append(h)
            targets -= seen
            if not targets:
                return
            frontier = nxt
            if len(seen) > self.ball_cap:
                break
        raise DomainError(f"explicit generators do not reach {sorted(map(str, targets))} within the search cap")

    @cached_property
    def scale(self) -> int:
        s = 1
        for w in self.weights:
            s = math.lcm(s, w.denominator)
        return s

    @cached_property
    def moves(self) -> tuple[tuple[Element, int], ...]:
        """Symmetric generating set with integer weights, deduplicated (min weight kept)."""
        best: dict = {}
        order = []
        ident = self.family.identity()
        for g, w in zip(self.generators, self.weights):
            iw = int(w * self.scale)
            for h in (g, self.family.inv(g)):
                if h == ident:
                    continue
                if h not in best:
                    order.append(h)
                    best[h] = iw
                else:
                    best[h] = min(best[h], iw)
        return tuple((h, best[h]) for h in order)

    @cached_property
    def min_weight(self) -> Fraction:
        return min(self.weights)

    def identity(self) -> Element:
        return self.family.identity()

    def element(self, g) -> Element:
        return self.family.validate(g)

    def multiply(self, g: Element, h: Element) -> Element:
        return self.family.mul(g, h)

    def inverse(self, g: Element) -> Element:
        return self.family.inv(g)

    def ball_lengths(self, radius_units: int, cap: int | None = None) -> dict[Element, int]:
        """All elements of integer length ``<= radius_units`` with their lengths (Dijkstra)."""
        cap = self.ball_cap if cap is None else cap
        cache = self.__dict__.setdefault("_ball_cache", {})
        for r, table in cache.items():
            if r >= radius_units:
                if r == radius_units:
                    return table
                return {g: d for g, d in table.items() if d <= radius_units}
        e = self.identity()
        dist = {e: 0}
        heap = [(0, 0, e)]
        counter = itertools.count(1)
        done = {}
        while heap:
            d, _, g = heapq.heappop(heap)
            if g in done:
                continue
            done[g] = d
            if len(done) > cap:
                raise ResourceError(
                    f"ball exceeds cap of {cap} elements",
                    attained=Fraction(d, self.scale),
                )
            for s, w in self.moves:
                nd = d + w
                if nd > radius_units:
                    continue
                h = self.family.mul(s, g)
                if h not in done and nd < dist.get(h, nd + 1):
                    dist[h] = nd
                    heapq.heappush(heap, (nd, next(counter), h))
        cache[radius_units] = done
        return done

    def length_units(self, g: Element, cap_units: int | None = None) -> int:
        e = self.identity()
        if g == e:
            return 0
        dist = {e: 0}
        heap = [(0, 0, e)]
        counter = itertools.count(1)
        done = set()
        while heap:
            d, _, x = heapq.heappop(heap)
            if x in done:
                continue
            if x == g:
                return d
            done.add(x)
            if len(done) > self.ball_cap or (cap_units is not None and d > cap_units):
                raise ResourceError(f"word length search exceeded cap at radius {Fraction(d, self.scale)}", attained=Fraction(d, self.scale))
            for s, w in self.moves:
                h = self.family.mul(s, x)
                nd = d + w
                if h not in done and nd < dist.get(h, nd + 1):
                    dist[h] = nd
                    heapq.heappush(heap, (nd, next(counter), h))
        raise DomainError(f"{g!r} is not reachable from the identity")

    def word_length(self, g: Element) -> Fraction:
        return Fraction(self.length_units(self.element(g)), self.scale)

    def distance(self, g: Element, h: Element) -> Fraction:
        return word_distance(self, g, h)


def multiply(g: Element, h: Element, group: MarkedGroup | Family) -> Element:
    fam = group.family if isinstance(group, MarkedGroup) else group
    return fam.mul(fam.validate(g), fam.validate(h))


def word_distance(G: MarkedGroup, g: Element, h: Element) -> Fraction:
    """``d_G(g, h) = |g h^-1|`` in the weighted word metric."""
    g = G.element(g)
    h = G.element(h)
    return G.word_length(G.multiply(g, G.inverse(h)))


def _sort_key(g):
    return repr(g)


def word_ball(G: MarkedGroup, center: Element, R, *, cap: int | None = None) -> FiniteMetricSpace:
    """Closed ball ``B_R(center)`` with exact pairwise word distances.

    Points are ``b * center`` for ``|b| <= R``; the distance between two of
    them is the length of ``b b'^-1``, read from the ball of radius ``2R``.
    """
    R = as_fraction(R)
    if R < 0:
        raise ParameterError("radius must be >= 0")
    center = G.element(center)
    cap = G.ball_cap if cap is None else cap
    units = math.floor(R * G.scale)
    inner = G.ball_lengths(units, cap=cap)
    outer = G.ball_lengths(2 * units, cap=max(cap, G.ball_cap))
    base = sorted(inner, key=lambda b: (inner[b], _sort_key(b)))
    fam = G.family
    inv = [fam.inv(b) for b in base]
    n = len(base)
    dist = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        bi = base[i]
        for j in range(i + 1, n):
            d = outer[fam.mul(bi, inv[j])]
            dist[i, j] = d
            dist[j, i] = d
    points = [fam.mul(b, center) for b in base]
    return FiniteMetricSpace(
        points, dist, G.scale, f"B_{R}({center})", check=False, structure={"kind": "word_ball", "radius": R}
    )


# text format


_GEN_TOKEN = re.compile(r"^([A-Za-z]\w*)(?:\^(-?\d+))?$")


def parse_word(text: str, family: Family) -> Element:
    """Evaluate a word like ``x.y^-1.x`` in the family's default generators."""
    names = family.generator_names()
    gens = family.default_generators()
    out = family.identity()
    text = text.strip()
    if text in ("", "e", "1"):
        return out
    for tok in text.split("."):
        m = _GEN_TOKEN.match(tok.strip())
        if not m or m.group(1) not in names:
            raise DomainError(f"bad generator token {tok!r}; generators are {names}")
        e = int(m.group(2)) if m.group(2) else 1
        out = family.mul(out, family.power(gens[names.index(m.group(1))], e))
    return out


def parse_group_spec(text: str) -> list[MarkedGroup]:
    """Parse group records (blank-line separated ``key = value`` lines)."""
    from .spaces import parse_rational

    groups = []
    for block in re.split(r"\n\s*\n", text.strip()):
        rec = {}
        for line in block.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"malformed group record line {line!r}")
            k, v = line.split("=", 1)
            rec[k.strip().lower()] = v.strip()
        if not rec:
            continue
        if "family" not in rec:
            raise DomainError("group record lacks 'family'")
        params = [int(x) for x in rec.get("params", "").replace(",", " ").split()]
        fam = make_family(rec["family"], params)
        gens_text = rec.get("generators", "default").strip()
        if gens_text.lower() == "default":
            gens = None
            names = None
        else:
            toks = gens_text.split()
            gens = tuple(parse_word(t, fam) for t in toks)
            names = tuple(toks)
        weights = None
        if "weights" in rec and rec["weights"].strip():
            weights = tuple(parse_rational(w) for w in rec["weights"].split())
        groups.append(MarkedGroup(fam, gens, weights, names))
    return groups
