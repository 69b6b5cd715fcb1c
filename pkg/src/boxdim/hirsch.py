"""Hirsch length of groups described as trees of extensions and directed unions.

Text form::

    ab(3)              free abelian of rank 3
    ab(1, 2, 4)        rank 1 plus torsion Z/2 x Z/4
    fin(6)             finite of order 6
    ext(N, Q)          extension with normal part N and quotient Q
    union(a, b, ...)   directed union; a trailing ``...`` means the chain continues

A continuing union is infinite when its listed values still grow at the end
and otherwise equals the last listed value.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .errors import DomainError, ParameterError, UnsupportedSpaceError
from .groups import FiniteCyclicProduct, FreeAbelian, Heisenberg3, InfiniteDihedral, MarkedGroup, SemidirectZnZ, WreathLamp

INFINITY = math.inf


@dataclass(frozen=True)
class AbelianLeaf:
    rank: int
    torsion: tuple = ()

    def __post_init__(self):
        if self.rank < 0:
            raise ParameterError("free rank must be >= 0")
        if any(t < 1 for t in self.torsion):
            raise ParameterError("torsion orders must be >= 1")


@dataclass(frozen=True)
class FiniteLeaf:
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise ParameterError("finite order must be >= 1")


@dataclass(frozen=True)
class Extension:
    normal: "Tree"
    quotient: "Tree"


@dataclass(frozen=True)
class DirectedUnion:
    members: tuple
    continues: bool = False

    def __post_init__(self):
        if not self.members:
            raise ParameterError("a directed union needs at least one member")


Tree = Union[AbelianLeaf, FiniteLeaf, Extension, DirectedUnion]


def hirsch_length(t: Tree) -> int | float:
    """``h``: free rank at leaves, sums over extensions, suprema over unions."""
    if isinstance(t, AbelianLeaf):
        return t.rank
    if isinstance(t, FiniteLeaf):
        return 0
    if isinstance(t, Extension):
        return hirsch_length(t.normal) + hirsch_length(t.quotient)
    if isinstance(t, DirectedUnion):
        vals = [hirsch_length(m) for m in t.members]
        top = max(vals)
        if t.continues and len(vals) > 1 and vals[-1] > vals[-2]:
            return INFINITY
        return top
    raise DomainError(f"not an extension tree: {t!r}")


def format_tree(t: Tree) -> str:
    if isinstance(t, AbelianLeaf):
        return "ab(" + ", ".join(map(str, (t.rank, *t.torsion))) + ")"
    if isinstance(t, FiniteLeaf):
        return f"fin({t.order})"
    if isinstance(t, Extension):
        return f"ext({format_tree(t.normal)}, {format_tree(t.quotient)})"
    parts = [format_tree(m) for m in t.members] + (["..."] if t.continues else [])
    return "union(" + ", ".join(parts) + ")"


_TOKEN = re.compile(r"\s*(?:(\.\.\.)|([A-Za-z_]+)|(\d+)|(.))")


def _tokens(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        pos = m.end()
        if m.group(1):
            out.append(("dots", "..."))
        elif m.group(2):
            out.append(("name", m.group(2).lower()))
        elif m.group(3):
            out.append(("int", int(m.group(3))))
        elif m.group(4).strip():
            out.append(("sym", m.group(4)))
    return out


def parse_tree(text: str) -> Tree:
    """Parse the text form shown in the module docstring."""
    toks = _tokens(text)
    pos = 0

    def expect(kind, value=None):
        nonlocal pos
        if pos >= len(toks) or toks[pos][0] != kind or (value is not None and toks[pos][1] != value):
            got = toks[pos][1] if pos < len(toks) else "end of input"
            raise DomainError(f"tree syntax: expected {value or kind}, got {got!r}")
        pos += 1
        return toks[pos - 1][1]

    def args():
        items = [node()]
        while pos < len(toks) and toks[pos] == ("sym", ","):
            expect("sym", ",")
            items.append(node())
        return items

    def node():
        nonlocal pos
        if pos < len(toks) and toks[pos][0] == "dots":
            pos += 1
            return Ellipsis
        if pos < len(toks) and toks[pos][0] == "int":
            return expect("int")
        name = expect("name")
        expect("sym", "(")
        items = args()
        expect("sym", ")")
        if name == "ab":
            if not items or not all(isinstance(x, int) for x in items):
                raise DomainError("ab() takes integers: rank then torsion orders")
            return AbelianLeaf(items[0], tuple(items[1:]))
        if name == "fin":
            if len(items) != 1 or not isinstance(items[0], int):
                raise DomainError("fin() takes one order")
            return FiniteLeaf(items[0])
        if name == "ext":
            if len(items) != 2 or any(isinstance(x, int) or x is Ellipsis for x in items):
                raise DomainError("ext() takes two trees")
            return Extension(items[0], items[1])
        if name == "union":
            cont = items[-1] is Ellipsis
            members = items[:-1] if cont else items
            if any(isinstance(x, int) or x is Ellipsis for x in members):
                raise DomainError("union() takes trees, optionally ending in ...")
            return DirectedUnion(tuple(members), cont)
        raise DomainError(f"unknown tree node {name!r}")

    tree = node()
    if pos != len(toks) or isinstance(tree, int) or tree is Ellipsis:
        raise DomainError("tree syntax: trailing input")
    return tree


def canonical_tree(G: MarkedGroup) -> Tree:
    fam = G.family if isinstance(G, MarkedGroup) else G
    if isinstance(fam, FreeAbelian):
        return AbelianLeaf(fam.n)
    if isinstance(fam, FiniteCyclicProduct):
        return AbelianLeaf(0, tuple(fam.orders))
    if isinstance(fam, Heisenberg3):
        # centre, then the abelianisation
        return Extension(AbelianLeaf(1), AbelianLeaf(2))
    if isinstance(fam, InfiniteDihedral):
        return Extension(AbelianLeaf(1), FiniteLeaf(2))
    if isinstance(fam, WreathLamp):
        k = fam.k
        lamps = DirectedUnion(tuple(FiniteLeaf(k**j) for j in range(1, 4)), True)
        return Extension(lamps, AbelianLeaf(1))
    if isinstance(fam, SemidirectZnZ):
        return Extension(AbelianLeaf(fam.n), AbelianLeaf(1))
    raise UnsupportedSpaceError(f"no canonical tree for {fam!r}")


def hirsch_of_builtin(G: MarkedGroup) -> int:
    return hirsch_length(canonical_tree(G))
