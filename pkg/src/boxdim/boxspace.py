"""Box families and their metrized disjoint unions."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .dimsolve import dim_profile
from .errors import BoxdimError, IntegrityError, ParameterError
from .groups import MarkedGroup
from .quotients import FiniteQuotient, SubgroupSpec, build_quotient
from .separation import injectivity_radius
from .spaces import FiniteMetricSpace, as_fraction, format_rational


@dataclass
class BoxFamily:
    group: MarkedGroup
    members: list[FiniteQuotient]

    def __post_init__(self):
        for Q in self.members:
            if Q.spec.host != self.group:
                raise ParameterError(f"{Q.label}: host or marking differs from the family's group")

    @property
    def labels(self) -> list[str]:
        return [Q.label for Q in self.members]

    @property
    def spaces(self) -> list[FiniteMetricSpace]:
        return [Q.space for Q in self.members]

    def coalesced(self) -> "BoxFamily":
        """Drop repeated members (same target data and subgroup)."""
        seen, keep = set(), []
        for Q in self.members:
            s = Q.spec
            key = (s.target.label, s.images, s.subgroup)
            if key not in seen:
                seen.add(key)
                keep.append(Q)
        return BoxFamily(self.group, keep)


def box_family(G: MarkedGroup, specs: Sequence[SubgroupSpec]) -> BoxFamily:
    return BoxFamily(G, [build_quotient(s) for s in specs])


def default_lambda(n: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(2**k) for k in range(n))


@dataclass
class BoxMetric:
    """Disjoint union of the members; components ``n < n'`` sit at distance
    ``lam[n+1] + ... + lam[n']`` regardless of the points chosen."""

    family: BoxFamily
    lam: tuple

    def __post_init__(self):
        lam = tuple(as_fraction(x) for x in self.lam)
        if len(lam) != len(self.family.members):
            raise ParameterError("need one lambda per member")
        if any(x <= 0 for x in lam):
            raise ParameterError("lambda must be positive")
        if any(b <= a for a, b in zip(lam, lam[1:])):
            raise ParameterError("lambda must be strictly increasing")
        self.lam = lam
        self._prefix = [Fraction(0)]
        for x in lam[1:]:
            self._prefix.append(self._prefix[-1] + x)

    def gap(self, n: int, m: int) -> Fraction:
        if n > m:
            n, m = m, n
        return self._prefix[m] - self._prefix[n]

    def distance(self, x: tuple[int, int], y: tuple[int, int]) -> Fraction:
        (n, a), (m, b) = x, y
        if n == m:
            return self.family.members[n].distance(a, b)
        return self.gap(n, m)

    def points(self) -> list[tuple[int, int]]:
        return [(n, c) for n, Q in enumerate(self.family.members) for c in range(Q.n)]

    def triangle_ok(self) -> bool:
        """Closed-form test of the triangle inequality.

        Only a detour through a neighbouring component can be shorter than a
        within-component distance, so every member's diameter must be at most
        twice each adjacent gap.
        """
        ms = self.family.members
        for n, Q in enumerate(ms):
            diam = Q.space.diameter()
            for m in (n - 1, n + 1):
                if 0 <= m < len(ms) and diam > 2 * self.gap(n, m):
                    return False
        return True

    def materialize(self, check: bool = True) -> FiniteMetricSpace:
        pts = self.points()
        scale = 1
        for Q in self.family.members:
            scale = np.lcm(scale, Q.scale)
        for x in self.lam:
            scale = np.lcm(scale, x.denominator)
        scale = int(scale)
        offs = np.cumsum([0] + [Q.n for Q in self.family.members])
        dist = np.zeros((len(pts), len(pts)), dtype=np.int64)
        for n, Q in enumerate(self.family.members):
            blk = slice(offs[n], offs[n + 1])
            dist[blk, blk] = Q.dist * (scale // Q.scale)
            for m in range(n + 1, len(self.family.members)):
                other = slice(offs[m], offs[m + 1])
                g = int(self.gap(n, m) * scale)
                dist[blk, other] = g
                dist[other, blk] = g
        space = FiniteMetricSpace(pts, dist, scale, "box", check=False, structure={"kind": "box", "lambda": self.lam})
        if check and kernels.metric_violations(dist):
            raise IntegrityError("lambda gaps are too small for the triangle inequality")
        return space


def assemble_box(family: BoxFamily, lam: Sequence | None = None) -> BoxMetric:
    """Metrize the family; ``lam`` defaults to ``2^k``."""
    b = BoxMetric(family, tuple(default_lambda(len(family.members)) if lam is None else lam))
    if not b.triangle_ok():
        raise ParameterError("lambda gaps are too small: the result would not be a metric")
    return b


def _scale_edges(space: FiniteMetricSpace, R):
    Ru = space.units(R)
    d = space.dist
    iu, ju = np.triu_indices(len(space), k=1)
    keep = d[iu, ju] <= Ru
    for i, j in zip(iu[keep].tolist(), ju[keep].tolist()):
        yield i, j, Fraction(int(d[i, j]), space.scale)


def export_scale_graph(obj, R, path=None) -> str:
    """Edges between points at distance ``<= R``, one ``u v d R`` line each."""
    R = as_fraction(R)
    header = {"R": format_rational(R)}
    if isinstance(obj, BoxMetric):
        space = obj.materialize(check=False)
        header["sigma"] = ",".join(obj.family.labels)
        header["lambda"] = ",".join(format_rational(x) for x in obj.lam)
        header["points"] = ";".join(f"{n}:{Q.n}" for n, Q in enumerate(obj.family.members))
    elif isinstance(obj, FiniteQuotient):
        space = obj.space
        header["label"] = obj.label
    elif isinstance(obj, FiniteMetricSpace):
        space = obj
        header["label"] = obj.label.replace(" ", "_")
    else:
        raise ParameterError(f"cannot export {type(obj).__name__}")
    header["index"] = len(space)
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={v}" for k, v in header.items()) + "\n")
    for i, j, d in _scale_edges(space, R):
        buf.write(f"{i} {j} {format_rational(d)} R\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


@dataclass
class BoxReport:
    labels: list[str]
    profiles: dict = field(default_factory=dict)  # R -> DimProfile
    errors: dict = field(default_factory=dict)  # R -> message
    injectivity_radii: list = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.errors)

    def as_dict(self) -> dict:
        return {
            "members": self.labels,
            "injectivity_radii": [format_rational(r) for r in self.injectivity_radii],
            "scales": {
                format_rational(R): {"n": p.n, "S": format_rational(p.S), "optimality": p.optimality, "lower_bounds": p.lower_bounds}
                for R, p in self.profiles.items()
            },
            "errors": {format_rational(R): e for R, e in self.errors.items()},
            "partial": self.partial,
        }


def box_dim_report(family: BoxFamily, scales: Sequence, S_max=None, radii: bool = True) -> BoxReport:
    """Uniform scale-dimension profile of the family at each ``R``.

    ``S_max`` may be a number or a mapping ``R -> S_max``.
    """
    rep = BoxReport(family.labels)
    if radii:
        rep.injectivity_radii = [injectivity_radius(Q) for Q in family.members]
    for R in scales:
        R = as_fraction(R)
        smax = S_max.get(R) if isinstance(S_max, dict) else S_max
        try:
            rep.profiles[R] = dim_profile(family.spaces, R, smax)
        except BoxdimError as exc:
            rep.errors[R] = str(exc)
    return rep
