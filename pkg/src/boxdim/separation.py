"""Separating and semi-conjugacy-separating families; injectivity radii.

Every condition is decided inside the finite target of each subgroup spec:
an element ``g`` lies in some conjugate ``kHk^-1`` iff ``phi(g)`` lies in some
``t T0 t^-1`` with ``t`` in the image of ``phi``.

The three semi-conjugacy modes test the same condition for a given ``F``.
Mode 3 asks that ``f k`` and ``k`` land in different cosets for every
``f`` in ``F - {1}`` and every ``k``, i.e. injectivity on each pair
``{1, f} k``.  Full injectivity on ``F k`` is :func:`is_jointly_injective`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .groups import MarkedGroup
from .quotients import FiniteQuotient, SubgroupSpec, build_quotient
from .spaces import as_fraction


@dataclass
class SeparationReport:
    condition: str
    F: list
    witness: SubgroupSpec | None
    verdict: bool
    details: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.verdict

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.label,
            "F": [repr(f) for f in self.F],
        }


def _check_family(sigma: Sequence[SubgroupSpec], F) -> MarkedGroup:
    if not sigma:
        raise ParameterError("empty subgroup family")
    if not F:
        raise ParameterError("F must be non-empty")
    G = sigma[0].host
    for s in sigma:
        if s.host.family != G.family:
            raise ParameterError("all members must share the host group")
    return G


def is_separating(sigma: Sequence[SubgroupSpec], F) -> SeparationReport:
    """True iff some member contains no element of ``F - {1}``."""
    G = _check_family(sigma, F)
    fam = G.family
    F = [fam.validate(f) for f in F]
    nontrivial = [f for f in F if f != fam.identity()]
    for spec in sigma:
        if not any(spec.contains(f) for f in nontrivial):
            return SeparationReport("separating", F, spec, True)
    return SeparationReport("separating", F, None, False)


def conjugate_union(spec: SubgroupSpec) -> frozenset:
    """``U = union of t T0 t^-1`` over the image; one ``t`` per coset suffices."""
    T = spec.target
    out = set()
    seen_cosets = set()
    for t in spec.image:
        key = spec.coset_key(t)
        if key in seen_cosets:
            continue
        seen_cosets.add(key)
        ti = T.inv(t)
        out.update(T.mul(T.mul(t, h), ti) for h in spec.core)
    return frozenset(out)


def conjugacy_class(spec: SubgroupSpec, x) -> frozenset:
    """Class of ``x`` under conjugation by the image of the host."""
    T = spec.target
    return frozenset(T.mul(T.mul(t, x), T.inv(t)) for t in spec.image)


def _mode1(spec: SubgroupSpec, D) -> bool:
    core = spec.core
    for g in D:
        cls = conjugacy_class(spec, spec.hom(g))
        if cls & core:
            return False
    return True


def _mode2(spec: SubgroupSpec, D) -> bool:
    U = conjugate_union(spec)
    return not any(spec.hom(g) in U for g in D)


def _coset_reps_target(spec: SubgroupSpec) -> list:
    reps = {}
    for t in spec.image:
        reps.setdefault(spec.coset_key(t), t)
    return list(reps.values())


def _mode3(spec: SubgroupSpec, D) -> bool:
    # f k H = k H  iff  phi(f) t_c T0 = t_c T0 for the coset c = kH
    T = spec.target
    for t in _coset_reps_target(spec):
        key = spec.coset_key(t)
        for g in D:
            if spec.coset_key(T.mul(spec.hom(g), t)) == key:
                return False
    return True


def is_jointly_injective(spec: SubgroupSpec, F) -> bool:
    """Is ``pi_H`` injective on ``F k`` for every ``k``?"""
    T = spec.target
    imgs = list({spec.hom(f) for f in F})
    if len(imgs) < len(set(F)):
        return False
    for t in _coset_reps_target(spec):
        if len({spec.coset_key(T.mul(x, t)) for x in imgs}) < len(imgs):
            return False
    return True


def is_semi_conjugacy_separating(sigma: Sequence[SubgroupSpec], F, mode: int = 2) -> SeparationReport:
    """Semi-conjugacy separation of ``F`` by some member, decided by ``mode``."""
    if mode not in (1, 2, 3):
        raise ParameterError("mode must be 1, 2 or 3")
    G = _check_family(sigma, F)
    fam = G.family
    F = [fam.validate(f) for f in F]
    D = [f for f in dict.fromkeys(F) if f != fam.identity()]
    check = {1: _mode1, 2: _mode2, 3: _mode3}[mode]
    for spec in sigma:
        ok = check(spec, D)
        if ok:
            return SeparationReport(f"scs{mode}", F, spec, True)
    return SeparationReport(f"scs{mode}", F, None, False)


# radii


def _as_quotient(Q) -> FiniteQuotient:
    return Q if isinstance(Q, FiniteQuotient) else build_quotient(Q)


def collision_length(Q) -> Fraction:
    """Least ``max(|a|, |b|)`` over ``a != b`` with ``a k H = b k H`` for some ``k``.

    ``pi_H`` is injective on every ``B_R(k)`` exactly when ``R`` is below this value.
    """
    Q = _as_quotient(Q)
    spec = Q.spec
    G = spec.host
    T = spec.target
    U = conjugate_union(spec)
    # b collides with an earlier a iff phi(b) in phi(a) U
    hit = set()
    radius = max(1, int(G.min_weight * G.scale))
    while True:
        ball = G.ball_lengths(radius)
        hit.clear()
        for b in sorted(ball, key=lambda g: (ball[g], repr(g))):
            x = spec.hom(b)
            if x in hit:
                return Fraction(ball[b], G.scale)
            hit.update(T.mul(x, u) for u in U)
        radius *= 2


def _floor_below(rho: Fraction, step: Fraction) -> Fraction:
    k = math.ceil(rho / step) - 1
    return max(k, 0) * step


def injectivity_radius(Q) -> Fraction:
    """Largest multiple of the minimum generator weight below the collision length."""
    Q = _as_quotient(Q)
    return _floor_below(collision_length(Q), Q.spec.host.min_weight)


@dataclass(frozen=True)
class IsometryCheck:
    holds: bool
    vacuous: bool
    R: Fraction

    def __bool__(self) -> bool:
        return self.holds


def verify_isometry_lemma(Q, R) -> IsometryCheck:
    """Check that ``pi_H`` preserves distances on every ``B_R(g)``.

    When ``pi_H`` is not injective on all ``B_{3R}(g)`` the statement is
    vacuous; the result is then true with ``vacuous`` set.
    """
    Q = _as_quotient(Q)
    R = as_fraction(R)
    if R < 0:
        raise ParameterError("R must be >= 0")
    G = Q.spec.host
    if 3 * R >= collision_length(Q):
        return IsometryCheck(True, True, R)
    units = math.floor(R * G.scale)
    inner = G.ball_lengths(units)
    outer = G.ball_lengths(2 * units)
    fam = G.family
    elems = sorted(inner, key=repr)
    perms = np.stack([Q.permutation(b) for b in elems])
    for i, a in enumerate(elems):
        for j in range(i + 1, len(elems)):
            want = outer[fam.mul(a, fam.inv(elems[j]))]
            if not (Q.dist[perms[i], perms[j]] == want).all():
                return IsometryCheck(False, False, R)
    return IsometryCheck(True, False, R)


def scs_threshold(sigma: Sequence[SubgroupSpec], radius_max) -> Fraction:
    """Largest multiple of the minimum weight ``R <= radius_max`` for which
    ``F = B_R(e)`` is semi-conjugacy-separated by some member."""
    G = sigma[0].host
    step = G.min_weight
    best = Fraction(0)
    R = step
    while R <= as_fraction(radius_max):
        ball = list(G.ball_lengths(math.floor(R * G.scale)))
        if not is_semi_conjugacy_separating(sigma, ball, mode=2).verdict:
            break
        best = R
        R += step
    return best
