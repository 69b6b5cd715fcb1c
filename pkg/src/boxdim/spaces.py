"""Finite metric spaces with exact rational distances.

Distances are stored as an int64 matrix ``dist`` together with an integer
``scale``; the true distance between points ``i`` and ``j`` is
``Fraction(dist[i, j], scale)``.  Comparisons against a rational radius go
through :meth:`FiniteMetricSpace.units`, which never rounds up.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Any, Hashable, Sequence

import numpy as np

from . import kernels
from .errors import IntegrityError, ParameterError

# full O(n^3) triangle check above this size is skipped (Schreier metrics are
# shortest-path metrics by construction)
TRIANGLE_CHECK_LIMIT = 400


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise ParameterError(f"floating point value {x!r} not accepted; use p/q")
    return Fraction(x)


def parse_rational(text: str) -> Fraction:
    """Parse ``p/q`` or an integer literal."""
    text = text.strip()
    try:
        if "/" in text:
            p, q = text.split("/")
            return Fraction(int(p), int(q))
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"not a rational literal: {text!r}") from exc


def format_rational(x: Fraction) -> str:
    x = as_fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class FiniteMetricSpace:
    """Points ``0..n-1`` (with hashable labels) and an exact distance matrix."""

    def __init__(
        self,
        points: Sequence[Hashable],
        dist: np.ndarray,
        scale: int = 1,
        label: str = "space",
        *,
        check: bool = True,
        structure: dict[str, Any] | None = None,
    ):
        dist = np.ascontiguousarray(dist, dtype=np.int64)
        if dist.shape != (len(points), len(points)):
            raise IntegrityError(f"distance matrix shape {dist.shape} does not match {len(points)} points")
        if scale < 1:
            raise ParameterError("scale must be a positive integer")
        self.points = list(points)
        self.dist = dist
        self.dist.flags.writeable = False
        self.scale = int(scale)
        self.label = label
        self.structure = dict(structure or {})
        self._index = {p: i for i, p in enumerate(self.points)}
        if len(self._index) != len(self.points):
            raise IntegrityError("duplicate point labels")
        if check:
            self.check_metric()

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"FiniteMetricSpace({self.label!r}, n={len(self)})"

    def check_metric(self, full: bool | None = None) -> None:
        n = len(self)
        if n == 0:
            return
        if (self.dist >= kernels.UNREACHED).any():
            raise IntegrityError(f"{self.label}: infinite distances (disconnected)")
        if full is None:
            full = n <= TRIANGLE_CHECK_LIMIT
        if full:
            bad = kernels.metric_violations(self.dist)
        else:
            d = self.dist
            off = ~np.eye(n, dtype=bool)
            bad = int((np.diag(d) != 0).sum() + (d != d.T).sum() + (d[off] <= 0).sum())
        if bad:
            raise IntegrityError(f"{self.label}: {bad} metric axiom violations")

    def index(self, point: Hashable) -> int:
        return self._index[point]

    def units(self, r) -> int:
        """Largest integer ``u`` with ``u / scale <= r`` (r rational, may be negative)."""
        r = as_fraction(r)
        return math.floor(r * self.scale)

    def distance(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.dist[i, j]), self.scale)

    def diameter(self) -> Fraction:
        if len(self) == 0:
            return Fraction(0)
        return Fraction(int(self.dist.max()), self.scale)

    def subset_diameter(self, members) -> Fraction:
        idx = np.fromiter(members, dtype=np.int64)
        if idx.size < 2:
            return Fraction(0)
        return Fraction(int(self.dist[np.ix_(idx, idx)].max()), self.scale)

    def eccentricities(self) -> np.ndarray:
        return self.dist.max(axis=1)

    def neighbourhood(self, members, r) -> frozenset[int]:
        """Closed r-neighbourhood P(Y; r) of a set of point indices."""
        idx = np.fromiter(members, dtype=np.int64)
        if idx.size == 0:
            return frozenset()
        near = (self.dist[idx] <= self.units(r)).any(axis=0)
        return frozenset(np.flatnonzero(near).tolist())

    def proximity_edges(self, r) -> list[tuple[int, int]]:
        u = self.units(r)
        ii, jj = np.nonzero(np.triu(self.dist <= u, k=1))
        return list(zip(ii.tolist(), jj.tolist()))

    def components(self, r, mask=None) -> np.ndarray:
        """Component labels of the r-proximity graph (restricted to ``mask``)."""
        if mask is None:
            mask = np.ones(len(self), dtype=np.bool_)
        return kernels.threshold_components(self.dist, self.units(r), np.asarray(mask, dtype=np.bool_))

    def subspace(self, indices, label: str | None = None) -> "FiniteMetricSpace":
        idx = list(indices)
        sub = self.dist[np.ix_(idx, idx)]
        return FiniteMetricSpace(
            [self.points[i] for i in idx], sub, self.scale, label or f"{self.label}|sub", check=False
        )

    @classmethod
    def from_rational_matrix(cls, points, rows, label="space", **kw) -> "FiniteMetricSpace":
        fr = [[as_fraction(x) for x in row] for row in rows]
        scale = 1
        for row in fr:
            for x in row:
                scale = math.lcm(scale, x.denominator)
        dist = np.array([[int(x * scale) for x in row] for row in fr], dtype=np.int64).reshape(len(points), len(points))
        return cls(points, dist, scale, label, **kw)
