import os
import subprocess
import sys

import networkx as nx
import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from boxdim import kernels


@st.composite
def regular_digraphs(draw):
    n = draw(st.integers(1, 14))
    deg = draw(st.integers(1, 3))
    nbr = np.array(draw(st.lists(st.lists(st.integers(0, n - 1), min_size=deg, max_size=deg), min_size=n, max_size=n)), dtype=np.int64)
    wts = np.array(draw(st.lists(st.integers(1, 4), min_size=deg, max_size=deg)), dtype=np.int64)
    return nbr, wts


@given(regular_digraphs())
def test_apsp_backends_agree_with_networkx(g):
    nbr, wts = g
    n, deg = nbr.shape
    a = kernels._nb_apsp_schreier(nbr, wts)
    b = kernels._np_apsp_schreier(nbr, wts)
    assert np.array_equal(a, b)
    G = nx.DiGraph()
    G.add_nodes_from(range(n))
    for i in range(n):
        for j in range(deg):
            v = int(nbr[i, j])
            if v != i and (not G.has_edge(i, v) or G[i][v]["weight"] > wts[j]):
                G.add_edge(i, v, weight=int(wts[j]))
    ref = dict(nx.all_pairs_dijkstra_path_length(G))
    for i in range(n):
        for j in range(n):
            assert a[i, j] == ref[i].get(j, kernels.UNREACHED)


def _random_metric(draw, n):
    pts = draw(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=n, max_size=n))
    return np.array([[abs(p[0] - q[0]) + abs(p[1] - q[1]) for q in pts] for p in pts], dtype=np.int64)


@given(st.data())
def test_metric_violations_agree(data):
    n = data.draw(st.integers(1, 10))
    D = _random_metric(data.draw, n)
    if data.draw(st.booleans()) and n > 1:
        D[0, n - 1] += data.draw(st.integers(-3, 30))
    assert kernels._nb_metric_violations(D) == kernels._np_metric_violations(D)


@given(st.data())
def test_member_diameters_agree(data):
    n = data.draw(st.integers(1, 10))
    D = _random_metric(data.draw, n)
    members = data.draw(st.lists(st.sets(st.integers(0, n - 1), min_size=1), min_size=1, max_size=5))
    ptr = np.zeros(len(members) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(m) for m in members])
    idx = np.array([i for m in members for i in sorted(m)], dtype=np.int64)
    a = kernels._nb_member_diameters(D, ptr, idx)
    b = kernels._np_member_diameters(D, ptr, idx)
    assert np.array_equal(a, b)
    assert [int(x) for x in a] == [max(D[i, j] for i in m for j in m) for m in members]


@given(st.data())
def test_threshold_components_agree(data):
    n = data.draw(st.integers(1, 10))
    D = _random_metric(data.draw, n)
    thr = data.draw(st.integers(0, 6))
    mask = np.array(data.draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    a = kernels._nb_threshold_components(D, thr, mask)
    b = kernels._np_threshold_components(D, thr, mask)
    assert np.array_equal(a, b)


def test_disable_switch():
    env = dict(os.environ, BOXDIM_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import boxdim; print(boxdim.backend())"], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
