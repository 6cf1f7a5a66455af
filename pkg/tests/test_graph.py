import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from conftest import er, path_graph
from sss.errors import GenerationError, GraphParseError, GraphStructureError, ParameterError
from sss.graph import DEFAULT_PARAMS, Graph, GraphFamily, build_laplacian, generate, load_graph, save_graph

FAMILIES = [f.value for f in GraphFamily]


def test_laplacian_k2():
    L = build_laplacian(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_array_equal(L.dense(), [[1, -1], [-1, 1]])


def test_laplacian_edgeless():
    L = build_laplacian(sp.csr_matrix((3, 3)))
    np.testing.assert_array_equal(L.dense(), np.zeros((3, 3)))


def test_laplacian_weighted_triangle():
    A = np.zeros((3, 3))
    for (i, j), w in {(0, 1): 1.0, (1, 2): 2.0, (0, 2): 3.0}.items():
        A[i, j] = A[j, i] = w
    L = build_laplacian(A).dense()
    np.testing.assert_array_equal(L, np.diag([4.0, 3.0, 5.0]) - A)


@pytest.mark.parametrize(
    "A",
    [
        np.array([[0.0, 1.0], [0.0, 0.0]]),
        np.array([[0.0, -1.0], [-1.0, 0.0]]),
        np.array([[1.0, 1.0], [1.0, 0.0]]),
        np.array([[0.0, np.inf], [np.inf, 0.0]]),
    ],
)
def test_invalid_adjacency_rejected(A):
    with pytest.raises(GraphStructureError):
        Graph(A)


def test_er_deterministic():
    a = generate("erdos_renyi", 50, {"p": 0.05}, seed=7)
    b = generate("erdos_renyi", 50, {"p": 0.05}, seed=7)
    assert a.same_adjacency(b)
    assert not a.same_adjacency(generate("erdos_renyi", 50, {"p": 0.05}, seed=8))


def test_random_regular_degrees():
    g = generate("random_regular", 20, {"d": 6}, seed=1)
    A = g.adjacency.toarray()
    np.testing.assert_array_equal((A > 0).sum(axis=1), 6)
    np.testing.assert_array_equal(A[A > 0], 1.0)


def test_barabasi_albert_heavy_tail():
    g = generate("barabasi_albert", 100, {"m0": 6}, seed=3)
    deg = (g.adjacency.toarray() > 0).sum(axis=1)
    assert deg.max() >= 2 * np.median(deg)


@pytest.mark.parametrize("family", FAMILIES)
def test_families_connected_with_zero_row_sums(family):
    g = generate(family, 60, seed=2)
    assert g.n == 60 and g.is_connected()
    L = build_laplacian(g).dense()
    assert np.abs(L.sum(axis=1)).max() <= 1e-12
    assert np.linalg.eigvalsh(L)[1] > 0
    np.testing.assert_array_equal(L, L.T)


@pytest.mark.parametrize("family", FAMILIES)
def test_families_deterministic(family):
    assert generate(family, 40, seed=5).same_adjacency(generate(family, 40, seed=5))


def test_family_aliases():
    assert GraphFamily.parse("er") is GraphFamily.ERDOS_RENYI
    assert GraphFamily.parse("sensor") is GraphFamily.RANDOM_SENSOR
    with pytest.raises(ParameterError):
        GraphFamily.parse("lattice")


@pytest.mark.parametrize(
    "family,params",
    [
        ("random_regular", {"d": 20}),
        ("random_regular", {"d": 3}),  # n*d odd at n=21
        ("erdos_renyi", {"p": 0.0}),
        ("erdos_renyi", {"q": 0.1}),
        ("barabasi_albert", {"m": 7}),
    ],
)
def test_infeasible_parameters(family, params):
    with pytest.raises(ParameterError):
        generate(family, 21 if params.get("d") == 3 else 20, params, seed=0)


def test_generation_error_after_retries():
    # p this small essentially never yields a connected graph on 200 vertices
    with pytest.raises(GenerationError):
        generate("erdos_renyi", 200, {"p": 1e-4}, seed=0)


def test_default_params_cover_all_families():
    assert set(DEFAULT_PARAMS) == set(GraphFamily)


def test_load_k2(tmp_path):
    p = tmp_path / "k2.txt"
    p.write_text("n 2\n0 1 1.0\n")
    g = load_graph(p)
    np.testing.assert_array_equal(g.adjacency.toarray(), [[0, 1], [1, 0]])


def test_load_unweighted_and_comments(tmp_path):
    p = tmp_path / "p3.txt"
    p.write_text("# path\nn 3\n0 1\n\n1 2 # second edge\n")
    assert load_graph(p).same_adjacency(path_graph(3))


@pytest.mark.parametrize(
    "body,line",
    [
        ("n 2\n0 0 1.0\n", 2),
        ("n 2\n0 1 x\n", 2),
        ("n 2\n0 1 1.0\n1 0 2.0\n", 3),
        ("n 2\n0 5 1.0\n", 2),
        ("n 2\n0 1 -1\n", 2),
        ("0 1 1\n", 1),
        ("n 3\n0 1 2 3\n", 2),
    ],
)
def test_parse_errors_name_line(tmp_path, body, line):
    p = tmp_path / "bad.txt"
    p.write_text(body)
    with pytest.raises(GraphParseError) as exc:
        load_graph(p)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_duplicate_with_same_weight_is_accepted(tmp_path):
    p = tmp_path / "dup.txt"
    p.write_text("n 2\n0 1 1.5\n1 0 1.5\n")
    assert load_graph(p).adjacency[0, 1] == 1.5


def test_round_trip_er(tmp_path):
    g = er(50, 0.1, seed=3)
    save_graph(g, tmp_path / "g.txt")
    assert load_graph(tmp_path / "g.txt").same_adjacency(g)


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(2, 12),
    edges=st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11), st.floats(1e-6, 1e6)), max_size=30),
)
def test_round_trip_property(tmp_path_factory, n, edges):
    A = np.zeros((n, n))
    for u, v, w in edges:
        u, v = u % n, v % n
        if u != v:
            A[u, v] = A[v, u] = w
    g = Graph(A)
    path = tmp_path_factory.mktemp("rt") / "g.txt"
    save_graph(g, path)
    back = load_graph(path)
    np.testing.assert_array_equal(back.adjacency.toarray(), A)
