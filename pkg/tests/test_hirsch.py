import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from boxdim.errors import DomainError, ParameterError
from boxdim.groups import FiniteCyclicProduct, FreeAbelian, Heisenberg3, InfiniteDihedral, MarkedGroup, SemidirectZnZ, WreathLamp
from boxdim.hirsch import (
    AbelianLeaf,
    DirectedUnion,
    Extension,
    FiniteLeaf,
    format_tree,
    hirsch_length,
    hirsch_of_builtin,
    parse_tree,
)


def to_ref(t):
    if isinstance(t, AbelianLeaf):
        return ("ab", t.rank)
    if isinstance(t, FiniteLeaf):
        return ("fin",)
    if isinstance(t, Extension):
        return ("ext", to_ref(t.normal), to_ref(t.quotient))
    return ("union", [to_ref(m) for m in t.members], t.continues)


leaves = st.one_of(
    st.builds(AbelianLeaf, st.integers(0, 4), st.lists(st.integers(1, 6), max_size=2).map(tuple)),
    st.builds(FiniteLeaf, st.integers(1, 12)),
)
trees = st.recursive(
    leaves,
    lambda sub: st.one_of(
        st.builds(Extension, sub, sub),
        st.builds(DirectedUnion, st.lists(sub, min_size=1, max_size=3).map(tuple), st.booleans()),
    ),
    max_leaves=8,
)


@given(trees)
def test_matches_reference(t):
    assert hirsch_length(t) == oracles.hirsch_reference(to_ref(t))


@given(trees, trees)
def test_additive_over_extensions(a, b):
    assert hirsch_length(Extension(a, b)) == hirsch_length(a) + hirsch_length(b)


@given(trees)
def test_text_roundtrip(t):
    assert parse_tree(format_tree(t)) == t


@pytest.mark.parametrize(
    "text,h",
    [
        ("ab(3)", 3),
        ("ab(0, 2, 4)", 0),
        ("fin(6)", 0),
        ("ext(ab(1),ab(2))", 3),
        ("ext(ab(1), fin(2))", 1),
        ("union(ab(1), ab(2), ab(3), ...)", math.inf),
        ("union(fin(2), fin(4), ...)", 0),
        ("union(ab(2), ab(2), ...)", 2),
    ],
)
def test_text_examples(text, h):
    assert hirsch_length(parse_tree(text)) == h


@pytest.mark.parametrize(
    "fam,h",
    [
        (FreeAbelian(1), 1),
        (FreeAbelian(4), 4),
        (Heisenberg3(), 3),
        (InfiniteDihedral(), 1),
        (WreathLamp(2), 1),
        (SemidirectZnZ([[2, 1], [1, 1]]), 3),
        (FiniteCyclicProduct([2, 3]), 0),
    ],
)
def test_builtin_values(fam, h):
    assert hirsch_of_builtin(MarkedGroup(fam)) == h


@pytest.mark.parametrize("bad", ["ab()", "ext(ab(1))", "fin(2", "foo(1)", "ab(1) ab(2)", "union(...)"])
def test_syntax_errors(bad):
    with pytest.raises((DomainError, ParameterError)):
        parse_tree(bad)
