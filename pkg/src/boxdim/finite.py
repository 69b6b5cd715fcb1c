"""Finite target groups for subgroup specifications.

A :class:`FiniteGroup` is a multiplication rule on hashable elements.  Concrete
targets (cyclic products, dihedral, Heisenberg and lamplighter groups mod n,
permutation groups, Cayley tables) are built by the constructors at the
bottom of this module.
"""

from __future__ import annotations

from collections import deque
from typing import Callable, Hashable, Iterable, Sequence

from .errors import IntegrityError, ParameterError, ResourceError

DEFAULT_ORDER_CAP = 400_000


class FiniteGroup:
    def __init__(
        self,
        mul: Callable[[Hashable, Hashable], Hashable],
        identity: Hashable,
        inv: Callable[[Hashable], Hashable] | None = None,
        label: str = "T",
    ):
        self._mul = mul
        self.identity = identity
        self._inv = inv
        self.label = label

    def __repr__(self) -> str:
        return f"FiniteGroup({self.label!r})"

    def mul(self, a, b):
        return self._mul(a, b)

    def inv(self, a):
        if self._inv is not None:
            return self._inv(a)
        # a has finite order: a^-1 = a^(k-1)
        prev, cur = self.identity, a
        while cur != self.identity:
            prev, cur = cur, self._mul(cur, a)
        return prev

    def power(self, a, k: int):
        result = self.identity
        base = a if k >= 0 else self.inv(a)
        k = abs(k)
        while k:
            if k & 1:
                result = self._mul(result, base)
            base = self._mul(base, base)
            k >>= 1
        return result

    def order_of(self, a) -> int:
        k, cur = 1, a
        while cur != self.identity:
            cur = self._mul(cur, a)
            k += 1
        return k

    def closure(self, gens: Iterable[Hashable], cap: int = DEFAULT_ORDER_CAP) -> list:
        """Elements of the subgroup generated by ``gens`` in BFS order from the identity."""
        gens = [g for g in dict.fromkeys(gens) if g != self.identity]
        seen = {self.identity: None}
        queue = deque([self.identity])
        while queue:
            x = queue.popleft()
            for g in gens:
                y = self._mul(g, x)
                if y not in seen:
                    seen[y] = None
                    if len(seen) > cap:
                        raise ResourceError(f"subgroup of {self.label} exceeds {cap} elements", attained=len(seen))
                    queue.append(y)
        return list(seen)

    def is_subgroup(self, subset: Iterable[Hashable]) -> bool:
        s = set(subset)
        if self.identity not in s:
            return False
        for a in s:
            if self.inv(a) not in s:
                return False
            for b in s:
                if self._mul(a, b) not in s:
                    return False
        return True


# concrete targets


def cyclic_product(orders: Sequence[int]) -> FiniteGroup:
    orders = tuple(int(k) for k in orders)
    return FiniteGroup(
        lambda a, b: tuple((x + y) % k for x, y, k in zip(a, b, orders)),
        (0,) * len(orders),
        lambda a: tuple((-x) % k for x, k in zip(a, orders)),
        label="x".join(f"Z/{k}" for k in orders) or "1",
    )


def dihedral(n: int) -> FiniteGroup:
    """Order-2n dihedral group; ``(a, p)`` is ``rho^a sigma^p``."""
    n = int(n)
    return FiniteGroup(
        lambda g, h: ((g[0] + (-h[0] if g[1] else h[0])) % n, (g[1] + h[1]) % 2),
        (0, 0),
        lambda g: (g[0], 1) if g[1] else ((-g[0]) % n, 0),
        label=f"D_{n}",
    )


def heisenberg_mod(m: int) -> FiniteGroup:
    m = int(m)
    return FiniteGroup(
        lambda g, h: ((g[0] + h[0]) % m, (g[1] + h[1]) % m, (g[2] + h[2] + g[0] * h[1]) % m),
        (0, 0, 0),
        lambda g: ((-g[0]) % m, (-g[1]) % m, (-g[2] + g[0] * g[1]) % m),
        label=f"H3(Z/{m})",
    )


def wreath_mod(k: int, n: int) -> FiniteGroup:
    """``Z/k wr Z/n``: ``(lamps, t)`` with ``lamps`` a length-n tuple mod k."""
    k, n = int(k), int(n)

    def mul(g, h):
        f, t = g
        f2, t2 = h
        return (tuple((f[x] + f2[(x - t) % n]) % k for x in range(n)), (t + t2) % n)

    def inv(g):
        f, t = g
        return (tuple((-f[(x + t) % n]) % k for x in range(n)), (-t) % n)

    return FiniteGroup(mul, ((0,) * n, 0), inv, label=f"Z/{k} wr Z/{n}")


def _mat_mul_mod(a, b, m):
    n = len(a)
    return tuple(tuple(sum(a[i][l] * b[l][j] for l in range(n)) % m for j in range(n)) for i in range(n))


def matrix_order_mod(A, m: int, cap: int = 100_000) -> int:
    a = tuple(tuple(x % m for x in row) for row in A)
    ident = tuple(tuple(int(i == j) % m for j in range(len(a))) for i in range(len(a)))
    cur, k = a, 1
    while cur != ident:
        cur = _mat_mul_mod(cur, a, m)
        k += 1
        if k > cap:
            raise ResourceError("matrix order mod m exceeds cap")
    return k


def semidirect_mod(A, m: int, period: int) -> FiniteGroup:
    """``(Z/m)^n x|_A Z/period``; requires ``A^period = I`` mod m."""
    m, period = int(m), int(period)
    a = tuple(tuple(int(x) % m for x in row) for row in A)
    n = len(a)
    if period % matrix_order_mod(a, m) != 0:
        raise ParameterError(f"A^{period} is not the identity mod {m}")
    powers = [tuple(tuple(int(i == j) % m for j in range(n)) for i in range(n))]
    for _ in range(period - 1):
        powers.append(_mat_mul_mod(powers[-1], a, m))

    def mul(g, h):
        v, t = g
        w, s = h
        p = powers[t]
        aw = tuple(sum(p[i][j] * w[j] for j in range(n)) for i in range(n))
        return (tuple((x + y) % m for x, y in zip(v, aw)), (t + s) % period)

    def inv(g):
        v, t = g
        p = powers[(-t) % period]
        av = tuple(sum(p[i][j] * v[j] for j in range(n)) for i in range(n))
        return (tuple((-x) % m for x in av), (-t) % period)

    return FiniteGroup(mul, ((0,) * n, 0), inv, label=f"(Z/{m})^{n} x| Z/{period}")


def permutation_group(degree: int, label: str = "Sym") -> FiniteGroup:
    """Permutations as tuples; ``(p * q)[i] = p[q[i]]`` (apply q first)."""
    return FiniteGroup(
        lambda p, q: tuple(p[i] for i in q),
        tuple(range(degree)),
        lambda p: tuple(sorted(range(degree), key=lambda i: p[i])),
        label=label,
    )


def table_group(table: Sequence[Sequence[int]], identity: int = 0, label: str = "table") -> FiniteGroup:
    """Group on ``0..n-1`` from a Cayley table ``table[a][b] = a*b``."""
    t = [list(map(int, row)) for row in table]
    n = len(t)
    if any(len(row) != n for row in t):
        raise ParameterError("Cayley table must be square")
    for a in range(n):
        if t[identity][a] != a or t[a][identity] != a:
            raise IntegrityError(f"{identity} is not an identity in the table")
    return FiniteGroup(lambda a, b: t[a][b], identity, label=label)
