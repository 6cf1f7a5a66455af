"""Graphs, combinatorial Laplacians, the experimental graph families and edge-list IO."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, minimum_spanning_tree
from scipy.spatial import cKDTree

from .errors import GenerationError, GraphParseError, GraphStructureError, ParameterError
from .rng import make_rng

MAX_CONNECT_ATTEMPTS = 1000


def _as_csr(adjacency) -> sp.csr_matrix:
    A = sp.csr_matrix(adjacency, dtype=float)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return A


def check_adjacency(A: sp.csr_matrix) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise GraphStructureError(f"adjacency must be square, got shape {A.shape}")
    if A.nnz and not np.all(np.isfinite(A.data)):
        raise GraphStructureError("adjacency has non-finite weights")
    if A.nnz and A.data.min() < 0:
        raise GraphStructureError("adjacency has negative weights")
    if np.any(A.diagonal() != 0):
        raise GraphStructureError("adjacency has self-loops (nonzero diagonal)")
    if (A != A.T).nnz:
        raise GraphStructureError("adjacency is not symmetric")


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph stored as a symmetric sparse adjacency matrix."""

    adjacency: sp.csr_matrix
    coords: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        A = _as_csr(self.adjacency)
        check_adjacency(A)
        object.__setattr__(self, "adjacency", A)
        if self.coords is not None:
            coords = np.asarray(self.coords, dtype=float)
            if coords.shape != (A.shape[0], 2):
                raise GraphStructureError(f"coords must have shape ({A.shape[0]}, 2)")
            object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    def is_connected(self) -> bool:
        return is_connected(self.adjacency)

    def same_adjacency(self, other: "Graph") -> bool:
        diff = self.adjacency != other.adjacency
        return self.adjacency.shape == other.adjacency.shape and diff.nnz == 0


@dataclass(frozen=True, eq=False)
class Laplacian:
    """Combinatorial Laplacian ``L = D - A``."""

    matrix: sp.csr_matrix
    degree: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_laplacian(g: Graph | Any) -> Laplacian:
    if isinstance(g, Graph):
        A = g.adjacency
    else:
        A = _as_csr(g)
        check_adjacency(A)
    degree = np.asarray(A.sum(axis=1)).ravel()
    L = (sp.diags(degree) - A).tocsr()
    L.sort_indices()
    return Laplacian(matrix=L, degree=degree)


def is_connected(A: sp.spmatrix) -> bool:
    if A.shape[0] <= 1:
        return True
    ncomp, _ = connected_components(A, directed=False)
    return ncomp == 1


# ---------------------------------------------------------------------------
# graph families


class GraphFamily(str, enum.Enum):
    RANDOM_SENSOR = "random_sensor"
    ERDOS_RENYI = "erdos_renyi"
    RANDOM_REGULAR = "random_regular"
    BARABASI_ALBERT = "barabasi_albert"
    COMMUNITY = "community"
    MINNESOTA = "minnesota"

    @classmethod
    def parse(cls, value: "str | GraphFamily") -> "GraphFamily":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "sensor": cls.RANDOM_SENSOR,
            "er": cls.ERDOS_RENYI,
            "regular": cls.RANDOM_REGULAR,
            "ba": cls.BARABASI_ALBERT,
            "minnesota_like": cls.MINNESOTA,
        }
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ParameterError(f"unknown graph family {value!r}; expected one of {names}") from None


DEFAULT_PARAMS: dict[GraphFamily, dict[str, Any]] = {
    GraphFamily.RANDOM_SENSOR: {"k": 6},
    GraphFamily.ERDOS_RENYI: {"p": 0.05},
    GraphFamily.RANDOM_REGULAR: {"d": 6},
    GraphFamily.BARABASI_ALBERT: {"m0": 6, "m": 1},
    GraphFamily.COMMUNITY: {"communities": 11, "p_in": 0.3, "min_size": 5},
    GraphFamily.MINNESOTA: {"drop": 0.75, "path": None},
}


def _random_sensor(n, rng, k):
    k = min(int(k), n - 1)
    pts = rng.random((n, 2))
    dist, idx = cKDTree(pts).query(pts, k=k + 1)
    sigma = float(np.mean(dist[:, k]))
    rows = np.repeat(np.arange(n), k)
    cols = idx[:, 1:].ravel()
    d = dist[:, 1:].ravel()
    w = np.exp(-(d**2) / (2.0 * sigma**2))
    # union symmetrization: keep each unordered pair once
    lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
    _, first = np.unique(lo * n + hi, return_index=True)
    return _from_weighted_pairs(n, lo[first], hi[first], w[first]), pts


def _from_weighted_pairs(n, lo, hi, w):
    A = sp.coo_matrix((np.r_[w, w], (np.r_[lo, hi], np.r_[hi, lo])), shape=(n, n))
    return _as_csr(A)


def _erdos_renyi(n, rng, p):
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return _from_weighted_pairs(n, iu[keep], ju[keep], np.ones(int(keep.sum())))


def _random_regular(n, rng, d):
    import networkx as nx

    G = nx.random_regular_graph(int(d), n, seed=int(rng.integers(0, 2**32 - 1)))
    edges = np.array(list(G.edges()), dtype=np.int64).reshape(-1, 2)
    return _from_weighted_pairs(n, edges[:, 0], edges[:, 1], np.ones(len(edges)))


def _barabasi_albert(n, rng, m0, m):
    lo, hi = [], []
    for i in range(m0):
        for j in range(i + 1, m0):
            lo.append(i)
            hi.append(j)
    # every vertex appears once per incident edge, so uniform draws are degree-proportional
    pool = [v for e in zip(lo, hi) for v in e]
    for v in range(m0, n):
        chosen: set[int] = set()
        while len(chosen) < m:
            chosen.add(pool[int(rng.integers(len(pool)))])
        for u in sorted(chosen):
            lo.append(u)
            hi.append(v)
            pool.extend((u, v))
    return _from_weighted_pairs(n, np.array(lo), np.array(hi), np.ones(len(lo)))


def _community(n, rng, communities, p_in, min_size):
    c = int(communities)
    min_size = min(int(min_size), n // c)
    if min_size < 2:
        raise ParameterError(f"community graph needs n >= {2 * c} for {c} communities, got n={n}")
    extra = rng.multinomial(n - c * min_size, np.full(c, 1.0 / c))
    sizes = min_size + extra
    starts = np.r_[0, np.cumsum(sizes)[:-1]]
    lo, hi = [], []
    for start, size in zip(starts, sizes):
        for _ in range(MAX_CONNECT_ATTEMPTS):
            block = _erdos_renyi(int(size), rng, p_in)
            if is_connected(block):
                break
        else:
            raise GenerationError(f"community of size {size} not connected after {MAX_CONNECT_ATTEMPTS} attempts")
        b = sp.triu(block, k=1).tocoo()
        lo.extend(b.row + start)
        hi.extend(b.col + start)
    pairs = [(i, (i + 1) % c) for i in range(c if c > 2 else c - 1)]
    for a, b in pairs:
        u = starts[a] + int(rng.integers(sizes[a]))
        v = starts[b] + int(rng.integers(sizes[b]))
        lo.append(min(u, v))
        hi.append(max(u, v))
    lo, hi = np.array(lo), np.array(hi)
    _, first = np.unique(lo * n + hi, return_index=True)
    return _from_weighted_pairs(n, lo[first], hi[first], np.ones(first.size))


def _minnesota_like(n, rng, drop):
    rows = math.ceil(math.sqrt(n))
    cols = math.ceil(n / rows)
    v = np.arange(n)
    r, c = v // cols, v % cols
    right = v[(c + 1 < cols) & (v + 1 < n)]
    down = v[v + cols < n]
    lo = np.r_[right, down]
    hi = np.r_[right + 1, down + cols]
    grid = _from_weighted_pairs(n, lo, hi, np.ones(lo.size))
    # random spanning tree keeps the stand-in connected; remaining grid edges are thinned
    rand_w = _from_weighted_pairs(n, lo, hi, 1.0 + rng.random(lo.size))
    tree = minimum_spanning_tree(rand_w)
    tree = ((tree + tree.T) > 0).astype(float)
    others = sp.triu(grid - grid.multiply(tree), k=1).tocoo()
    keep = rng.random(others.nnz) >= drop
    t = sp.triu(tree, k=1).tocoo()
    lo = np.r_[t.row, others.row[keep]]
    hi = np.r_[t.col, others.col[keep]]
    coords = np.c_[c + 0.2 * rng.random(n), -r + 0.2 * rng.random(n)].astype(float)
    return _from_weighted_pairs(n, lo, hi, np.ones(lo.size)), coords


def generate(
    family: GraphFamily | str,
    n: int,
    params: Mapping[str, Any] | None = None,
    seed: int = 0,
) -> Graph:
    """Generate a connected graph of the given family.

    Identical ``(family, n, params, seed)`` gives an identical graph. Families
    whose construction can come out disconnected are regenerated with an
    incremented attempt counter in the random stream, at most 1000 times.
    """
    family = GraphFamily.parse(family)
    n = int(n)
    if n < 2:
        raise ParameterError(f"n must be >= 2, got {n}")
    opts = dict(DEFAULT_PARAMS[family])
    unknown = set(params or {}) - set(opts)
    if unknown:
        raise ParameterError(f"unknown parameters for {family.value}: {sorted(unknown)}")
    opts.update(params or {})

    if family is GraphFamily.MINNESOTA and opts.get("path"):
        g = load_graph(opts["path"])
        return Graph(g.adjacency, g.coords, name=family.value)

    if family is GraphFamily.ERDOS_RENYI and not 0 < opts["p"] <= 1:
        raise ParameterError(f"edge probability must lie in (0, 1], got {opts['p']}")
    if family is GraphFamily.RANDOM_REGULAR:
        d = int(opts["d"])
        if d < 1 or d >= n or (n * d) % 2:
            raise ParameterError(f"random regular graph needs 1 <= d < n and n*d even (d={d}, n={n})")
    if family is GraphFamily.BARABASI_ALBERT:
        m0, m = int(opts["m0"]), int(opts["m"])
        if m0 < 2 or m < 1 or m > m0 or n < m0:
            raise ParameterError(f"Barabasi-Albert needs 1 <= m <= m0 <= n and m0 >= 2 (m0={m0}, m={m}, n={n})")
    if family is GraphFamily.MINNESOTA and not 0 <= opts["drop"] < 1:
        raise ParameterError("drop must lie in [0, 1)")

    for attempt in range(MAX_CONNECT_ATTEMPTS):
        rng = make_rng(seed, "graph", family.value, n, sorted(opts.items()), attempt)
        coords = None
        if family is GraphFamily.RANDOM_SENSOR:
            A, coords = _random_sensor(n, rng, opts["k"])
        elif family is GraphFamily.ERDOS_RENYI:
            A = _erdos_renyi(n, rng, float(opts["p"]))
        elif family is GraphFamily.RANDOM_REGULAR:
            A = _random_regular(n, rng, opts["d"])
        elif family is GraphFamily.BARABASI_ALBERT:
            A = _barabasi_albert(n, rng, int(opts["m0"]), int(opts["m"]))
        elif family is GraphFamily.COMMUNITY:
            A = _community(n, rng, opts["communities"], float(opts["p_in"]), opts["min_size"])
        else:
            A, coords = _minnesota_like(n, rng, float(opts["drop"]))
        if is_connected(A):
            return Graph(A, coords, name=family.value)
    raise GenerationError(f"{family.value}(n={n}) not connected after {MAX_CONNECT_ATTEMPTS} attempts")


# ---------------------------------------------------------------------------
# edge-list IO


def load_graph(path: str | Path) -> Graph:
    """Read the ``n <count>`` + ``u v w`` edge-list format."""
    n = None
    edges: dict[tuple[int, int], float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if n is None:
                if len(tokens) != 2 or tokens[0] != "n":
                    raise GraphParseError("expected header 'n <count>'", lineno)
                try:
                    n = int(tokens[1])
                except ValueError:
                    raise GraphParseError(f"invalid vertex count {tokens[1]!r}", lineno) from None
                if n < 1:
                    raise GraphParseError(f"vertex count must be positive, got {n}", lineno)
                continue
            if len(tokens) not in (2, 3):
                raise GraphParseError(f"expected '<u> <v> <w>', got {line!r}", lineno)
            try:
                u, v = int(tokens[0]), int(tokens[1])
                w = float(tokens[2]) if len(tokens) == 3 else 1.0
            except ValueError:
                raise GraphParseError(f"malformed edge {line!r}", lineno) from None
            if not (0 <= u < n and 0 <= v < n):
                raise GraphParseError(f"vertex index out of range [0, {n})", lineno)
            if u == v:
                raise GraphParseError(f"self-loop at vertex {u}", lineno)
            if not math.isfinite(w) or w <= 0:
                raise GraphParseError(f"edge weight must be positive and finite, got {w}", lineno)
            key = (min(u, v), max(u, v))
            if key in edges and edges[key] != w:
                raise GraphParseError(f"edge {key} repeated with conflicting weight {w} != {edges[key]}", lineno)
            edges[key] = w
    if n is None:
        raise GraphParseError("empty file: missing 'n <count>' header", None)
    if edges:
        (lo, hi), w = zip(*edges.keys()), list(edges.values())
        A = _from_weighted_pairs(n, np.array(lo), np.array(hi), np.array(w))
    else:
        A = sp.csr_matrix((n, n))
    return Graph(A, name=Path(path).stem)


def save_graph(g: Graph, path: str | Path) -> None:
    upper = sp.triu(g.adjacency, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"n {g.n}\n")
        for i in order:
            fh.write(f"{upper.row[i]} {upper.col[i]} {upper.data[i]:.17g}\n")
