import itertools

import numpy as np
import pytest

import oracles
from boxdim.boxspace import BoxMetric, assemble_box, box_dim_report, box_family, default_lambda, export_scale_graph
from boxdim.dimsolve import dim_profile
from boxdim.errors import ParameterError
from boxdim.groups import FreeAbelian, MarkedGroup
from boxdim.quotients import congruence_spec, trivial_spec

Z = MarkedGroup(FreeAbelian(1))


def fam(levels):
    return box_family(Z, [congruence_spec(Z, m) for m in levels])


def test_cross_component_example():
    b = assemble_box(fam([2, 4, 8]), [1, 2, 4])
    assert b.distance((0, 0), (2, 3)) == 6
    assert b.distance((0, 1), (2, 7)) == 6
    assert b.distance((1, 0), (1, 2)) == 2


@pytest.mark.parametrize("levels", [[1, 2], [2, 3, 4], [2, 4, 8], [3, 3, 5]])
def test_metric_axioms_exhaustive(levels):
    n = len(levels)
    for lam in itertools.product(range(1, 9), repeat=n):
        if any(b <= a for a, b in zip(lam, lam[1:])):
            continue
        f = fam(levels)
        b = BoxMetric(f, lam)
        pts = b.points()
        D = np.array([[b.distance(x, y) for y in pts] for x in pts])
        assert (not oracles.metric_axiom_failures(D)) == b.triangle_ok()


def test_materialize_matches_distance():
    b = assemble_box(fam([2, 3, 5]))
    X = b.materialize()
    pts = b.points()
    for i, j in itertools.combinations(range(len(pts)), 2):
        assert X.distance(i, j) == b.distance(pts[i], pts[j])


def test_default_lambda_and_validation():
    assert default_lambda(4) == (1, 2, 4, 8)
    with pytest.raises(ParameterError):
        BoxMetric(fam([2, 4]), [2, 2])
    with pytest.raises(ParameterError):
        BoxMetric(fam([2, 4]), [1])
    with pytest.raises(ParameterError):
        assemble_box(fam([2, 16]), [1, 2])  # C_16 has diameter 8 > 2 * 2


def test_gaps_grow():
    b = assemble_box(fam([2, 3, 4, 5, 6]))
    gaps = [b.gap(0, k) for k in range(1, 5)]
    assert all(x < y for x, y in zip(gaps, gaps[1:]))


def test_export_header_and_edges():
    b = assemble_box(fam([2, 4, 8]), [1, 2, 4])
    text = export_scale_graph(b, 2)
    head, *lines = text.strip().split("\n")
    assert head.startswith("# R=2 sigma=2Z,4Z,8Z lambda=1,2,4")
    X = b.materialize()
    expected = sum(1 for i, j in itertools.combinations(range(len(X)), 2) if X.dist[i, j] <= 2 * X.scale)
    assert len(lines) == expected


def test_coalescing_keeps_profiles():
    f = fam([2, 4, 4, 8, 2])
    c = f.coalesced()
    assert c.labels == ["2Z", "4Z", "8Z"]
    for R in (1, 2):
        assert dim_profile(f.spaces, R).n == dim_profile(c.spaces, R).n


def test_report():
    rep = box_dim_report(fam([2**k for k in range(1, 6)]), [2, 4], 8)
    assert not rep.partial
    assert {R: p.n for R, p in rep.profiles.items()} == {2: 1, 4: 1}
    assert rep.injectivity_radii == [0, 1, 3, 7, 15]
    triv = box_dim_report(box_family(Z, [trivial_spec(Z)]), [1])
    assert triv.profiles[1].n == 0
