import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from boxdim.errors import ParameterError
from boxdim.groups import FreeAbelian, Heisenberg3, InfiniteDihedral, MarkedGroup, word_ball
from boxdim.quotients import build_quotient, congruence_spec, dihedral_reflection_spec, dihedral_rotation_spec
from boxdim.separation import (
    collision_length,
    injectivity_radius,
    is_jointly_injective,
    is_semi_conjugacy_separating,
    is_separating,
    verify_isometry_lemma,
)

Z = MarkedGroup(FreeAbelian(1))
Z2 = MarkedGroup(FreeAbelian(2))
D = MarkedGroup(InfiniteDihedral())


@pytest.mark.parametrize("n", range(1, 65))
def test_cycle_collision_length_and_radius(n):
    # a and a - n collide; the best pair is balanced around 0
    Q = build_quotient(congruence_spec(Z, n))
    assert collision_length(Q) == math.ceil(n / 2)
    assert injectivity_radius(Q) == max(math.ceil(n / 2) - 1, 0)


def _heisenberg_ball(radius):
    """Host ball by BFS over exact integer matrices, with lengths."""
    emb, mul = oracles.heisenberg_model(12 * 10**8)  # divisible by every level tested
    gens = [emb(g) for g in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]]
    e = emb((0, 0, 0))
    dist, frontier = {e: 0}, [e]
    for r in range(1, radius + 1):
        nxt = []
        for x in frontier:
            for s in gens:
                y = mul(s, x)
                if y not in dist:
                    dist[y] = r
                    nxt.append(y)
        frontier = nxt
    return dist


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_heisenberg_isometry_matches_brute_force(m):
    G = MarkedGroup(Heisenberg3())
    Q = build_quotient(congruence_spec(G, m))
    big = _heisenberg_ball(6)
    red = lambda M: tuple(tuple(x % m for x in row) for row in M)
    for k in range(0, 7):
        R = Fraction(k, 3)
        ball3 = [x for x, d in big.items() if d <= 3 * R]
        injective = len({red(x) for x in ball3}) == len(ball3)
        chk = verify_isometry_lemma(Q, R)
        assert chk.vacuous == (not injective)
        if injective:
            assert chk.holds


@pytest.mark.parametrize("n", [5, 12, 31, 64])
def test_cycle_isometry_brute_force(n):
    Q = build_quotient(congruence_spec(Z, n))
    for k in range(0, 3 * n):
        R = Fraction(k, 3)
        injective = 2 * math.floor(3 * R) + 1 <= n
        chk = verify_isometry_lemma(Q, R)
        assert chk.vacuous == (not injective)
        if injective:
            r = math.floor(R)
            assert all(oracles.cycle_distance(n, a, b) == abs(a - b) for a in range(-r, r + 1) for b in range(-r, r + 1))
            assert chk.holds


def test_separating_examples():
    sigma = [congruence_spec(Z, 2**k) for k in range(1, 5)]
    assert is_separating(sigma, [(3,), (4,)])
    assert not is_separating(sigma, [(16,)])
    assert is_separating(sigma, [(0,)])  # only the identity


@pytest.mark.parametrize("n", [3, 5, 7])
def test_dihedral_reflection_family_is_not_scs(n):
    sigma = [dihedral_reflection_spec(D, n * 2**k, 0) for k in range(3)]
    F = [(0, 1)]
    embed_models = [(oracles.dihedral_model(n * 2**k), n * 2**k) for k in range(3)]
    expected = any(oracles.conjugacy_avoids(emb, mul, [g for g, _ in D.moves], D.identity(), [(0, 1)], F[0]) for (emb, mul), _ in embed_models)
    assert expected is False
    for mode in (1, 2, 3):
        assert is_semi_conjugacy_separating(sigma, F, mode).verdict is False


def test_rotation_family_is_scs():
    sigma = [dihedral_rotation_spec(D, n) for n in (3, 4, 5, 6, 8)]
    F = [(1, 0), (2, 0), (0, 1), (3, 1)]
    for mode in (1, 2, 3):
        assert is_semi_conjugacy_separating(sigma, F, mode).verdict is True


@given(
    st.lists(st.integers(2, 9), min_size=1, max_size=3, unique=True),
    st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6)), min_size=1, max_size=4),
)
def test_modes_agree_with_oracle_on_z2(levels, F):
    sigma = [congruence_spec(Z2, m) for m in levels]
    # abelian: conjugacy classes are points
    expected = any(all(f == (0, 0) or f[0] % m or f[1] % m for f in F) for m in levels)
    got = [is_semi_conjugacy_separating(sigma, F, mode).verdict for mode in (1, 2, 3)]
    assert got == [expected] * 3


def test_joint_injectivity_is_stronger():
    spec = congruence_spec(MarkedGroup(Heisenberg3()), 6)
    F = list(word_ball(MarkedGroup(Heisenberg3()), (0, 0, 0), 3).points)
    assert not is_jointly_injective(spec, F)


def test_parameter_errors():
    with pytest.raises(ParameterError):
        is_separating([], [(1,)])
    with pytest.raises(ParameterError):
        is_separating([congruence_spec(Z, 2)], [])
