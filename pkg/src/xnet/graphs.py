"""Graph families used to build and analyse X-Nets.

Three kinds of objects live here:

* :class:`BipartiteGraph`: one layer of an X-Linear network, stored as a
  ``(n_left, degree)`` array of right-vertex indices.
* :class:`CayleyGraph` and :class:`RegularGraph`: undirected regular graphs.
  Cayley graphs live on ``{0,1}^k`` with XOR-generator edges.
* :class:`LayeredNetwork`: an ordered stack of bipartite layers.

All graphs are immutable once built; adjacency arrays are flagged read-only.
"""

from __future__ import annotations

import hashlib
import io
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import FormatError, InvalidParameterError, ResourceError

__all__ = [
    "UNION_OF_PERMUTATIONS",
    "CAYLEY_DOUBLE_COVER",
    "EXPLICIT",
    "BipartiteGraph",
    "RegularGraph",
    "CayleyGraph",
    "ExpanderBudget",
    "LayeredNetwork",
    "build_random_regular_bipartite",
    "identity_bipartite",
    "complete_bipartite",
    "complete_graph",
    "cycle_graph",
    "sample_generators",
    "build_cayley_xor_graph",
    "bipartite_double_cover",
    "random_layered_network",
    "dumps_xgraph",
    "loads_xgraph",
    "write_xgraph",
    "read_xgraph",
]

UNION_OF_PERMUTATIONS = "union-of-permutations"
CAYLEY_DOUBLE_COVER = "cayley-double-cover"
EXPLICIT = "explicit"
_CONSTRUCTIONS = (UNION_OF_PERMUTATIONS, CAYLEY_DOUBLE_COVER, EXPLICIT)

# Largest Cayley dimension for which we materialise neighbour arrays.
MAX_CAYLEY_DIMENSION = 22


def _frozen_rows(rows) -> np.ndarray:
    arr = np.array(rows, dtype=np.int64, copy=True)
    if arr.ndim != 2:
        raise InvalidParameterError(f"adjacency must be 2-D, got shape {arr.shape}")
    arr.sort(axis=1)
    arr.setflags(write=False)
    return arr


def _has_repeats(sorted_rows: np.ndarray) -> bool:
    if sorted_rows.shape[1] < 2:
        return False
    return bool(np.any(sorted_rows[:, 1:] == sorted_rows[:, :-1]))


# ======================================================================================
# Bipartite layers
# ======================================================================================


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """A left-regular bipartite graph ``(U, V, E)``.

    Attributes
    ----------
    n_left, n_right : int
        Sizes of the input side ``U`` and output side ``V``.
    degree : int
        Number of edges leaving every left vertex.
    adjacency : ndarray, shape (n_left, degree)
        Right-vertex indices of each left vertex, sorted ascending.
        Repeated entries are parallel edges (see ``has_parallel_edges``).
    seed : int or None
        Seed the graph was generated from, if any.
    construction : str
        One of ``"union-of-permutations"``, ``"cayley-double-cover"``,
        ``"explicit"``.
    """

    n_left: int
    n_right: int
    degree: int
    adjacency: np.ndarray
    seed: int | None = None
    construction: str = EXPLICIT
    has_parallel_edges: bool = field(init=False)

    def __post_init__(self):
        adj = _frozen_rows(self.adjacency)
        if self.n_left < 1 or self.n_right < 1:
            raise InvalidParameterError("both sides need at least one vertex")
        if adj.shape != (self.n_left, self.degree):
            raise InvalidParameterError(
                f"adjacency shape {adj.shape} does not match "
                f"({self.n_left}, {self.degree})"
            )
        if self.degree < 1:
            raise InvalidParameterError("degree must be at least 1")
        if adj.size and (adj.min() < 0 or adj.max() >= self.n_right):
            raise InvalidParameterError("neighbour index outside [0, n_right)")
        if self.construction not in _CONSTRUCTIONS:
            raise InvalidParameterError(f"unknown construction {self.construction!r}")
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "has_parallel_edges", _has_repeats(adj))

    def __eq__(self, other):
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (
            self.n_left == other.n_left
            and self.n_right == other.n_right
            and self.degree == other.degree
            and np.array_equal(self.adjacency, other.adjacency)
        )

    __hash__ = None

    @property
    def n_edges(self) -> int:
        return self.n_left * self.degree

    def neighbors(self, u: int) -> np.ndarray:
        return self.adjacency[u]

    def left_degrees(self) -> np.ndarray:
        return np.full(self.n_left, self.degree, dtype=np.int64)

    def right_degrees(self) -> np.ndarray:
        return np.bincount(self.adjacency.ravel(), minlength=self.n_right)

    def is_biregular(self) -> bool:
        rd = self.right_degrees()
        return bool(np.all(rd == rd[0]))

    def biadjacency(self) -> np.ndarray:
        """Dense ``(n_left, n_right)`` edge-multiplicity matrix."""
        mat = np.zeros((self.n_left, self.n_right), dtype=np.int64)
        rows = np.repeat(np.arange(self.n_left), self.degree)
        np.add.at(mat, (rows, self.adjacency.ravel()), 1)
        return mat

    def sparse_biadjacency(self) -> csr_matrix:
        rows = np.repeat(np.arange(self.n_left), self.degree)
        data = np.ones(rows.size, dtype=np.float64)
        mat = csr_matrix(
            (data, (rows, self.adjacency.ravel())), shape=(self.n_left, self.n_right)
        )
        mat.sum_duplicates()
        return mat

    @property
    def graph_id(self) -> str:
        """Short content hash; identical adjacency gives identical id."""
        return hashlib.sha256(dumps_xgraph(self).encode()).hexdigest()[:16]


def _matching_in_complement(used: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random perfect matching avoiding ``used`` edges (boolean n x n).

    The complement of a j-regular bipartite graph on n+n vertices is
    (n-j)-regular, so by Hall's theorem a perfect matching exists.
    """
    n = used.shape[0]
    row_perm = rng.permutation(n)
    col_perm = rng.permutation(n)
    free = ~used[np.ix_(row_perm, col_perm)]
    match = maximum_bipartite_matching(csr_matrix(free), perm_type="column")
    if np.any(match < 0):
        raise RuntimeError("complement has no perfect matching")  # unreachable for regular input
    perm = np.empty(n, dtype=np.int64)
    perm[row_perm] = col_perm[match]
    return perm


def build_random_regular_bipartite(
    n: int, d: int, seed: int, *, dedup: bool = False
) -> BipartiteGraph:
    """Union of ``d`` seeded uniform permutations of ``range(n)``.

    Left vertex ``u`` is joined to ``perm_j[u]`` for every ``j``, so both
    sides are exactly ``d``-regular.  Parallel edges are kept and flagged
    unless ``dedup`` is set, in which case every permutation that would
    repeat an edge is replaced by a random perfect matching of the
    remaining free pairs.
    """
    if n < 1:
        raise InvalidParameterError("n must be positive")
    if not 1 <= d <= n:
        raise InvalidParameterError(f"need 1 <= d <= n, got d={d}, n={n}")
    if seed is None or int(seed) < 0:
        raise InvalidParameterError("an explicit non-negative seed is required")
    rng = np.random.default_rng(seed)
    cols = []
    if dedup:
        used = np.zeros((n, n), dtype=bool)
        rows = np.arange(n)
        for _ in range(d):
            perm = rng.permutation(n)
            if used[rows, perm].any():
                perm = _matching_in_complement(used, rng)
            used[rows, perm] = True
            cols.append(perm)
    else:
        cols = [rng.permutation(n) for _ in range(d)]
    return BipartiteGraph(
        n_left=n,
        n_right=n,
        degree=d,
        adjacency=np.stack(cols, axis=1),
        seed=int(seed),
        construction=UNION_OF_PERMUTATIONS,
    )


def identity_bipartite(n: int) -> BipartiteGraph:
    """The perfect matching ``u -> u`` (degree 1, spectral gap 0)."""
    return BipartiteGraph(n, n, 1, np.arange(n)[:, None])


def complete_bipartite(n_left: int, n_right: int | None = None) -> BipartiteGraph:
    n_right = n_left if n_right is None else n_right
    return BipartiteGraph(
        n_left, n_right, n_right, np.tile(np.arange(n_right), (n_left, 1))
    )


# ======================================================================================
# Undirected regular graphs
# ======================================================================================


@dataclass(frozen=True, eq=False)
class RegularGraph:
    """Undirected regular graph stored as a sorted ``(n, degree)`` neighbour array.

    Every edge ``{u, v}`` appears as ``v`` in row ``u`` and ``u`` in row ``v``
    (with matching multiplicities).
    """

    neighbors: np.ndarray

    def __post_init__(self):
        nb = _frozen_rows(self.neighbors)
        n = nb.shape[0]
        if n < 1 or nb.shape[1] < 1:
            raise InvalidParameterError("graph needs at least one vertex and one edge per vertex")
        if nb.min() < 0 or nb.max() >= n:
            raise InvalidParameterError("neighbour index out of range")
        mat = _multiplicity_matrix(nb)
        if not np.array_equal(mat, mat.T):
            raise InvalidParameterError("neighbour lists are not symmetric")
        object.__setattr__(self, "neighbors", nb)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> RegularGraph:
        lists: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            lists[u].append(v)
            lists[v].append(u)
        degrees = {len(x) for x in lists}
        if len(degrees) != 1:
            raise InvalidParameterError(f"graph is not regular (degrees {sorted(degrees)})")
        return cls(np.array(lists, dtype=np.int64))

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]

    @property
    def degree(self) -> int:
        return self.neighbors.shape[1]

    def adjacency_matrix(self) -> np.ndarray:
        return _multiplicity_matrix(self.neighbors)

    def sparse_adjacency(self) -> csr_matrix:
        n, d = self.neighbors.shape
        rows = np.repeat(np.arange(n), d)
        mat = csr_matrix((np.ones(n * d), (rows, self.neighbors.ravel())), shape=(n, n))
        mat.sum_duplicates()
        return mat

    def edge_set(self) -> set[frozenset]:
        return {frozenset((u, int(v))) for u in range(self.n) for v in self.neighbors[u]}


def _multiplicity_matrix(nb: np.ndarray) -> np.ndarray:
    n, d = nb.shape
    mat = np.zeros((n, n), dtype=np.int64)
    np.add.at(mat, (np.repeat(np.arange(n), d), nb.ravel()), 1)
    return mat


def complete_graph(n: int) -> RegularGraph:
    return RegularGraph.from_edges(n, [(u, v) for u in range(n) for v in range(u + 1, n)])


def cycle_graph(n: int) -> RegularGraph:
    return RegularGraph.from_edges(n, [(u, (u + 1) % n) for u in range(n)])


# ======================================================================================
# Cayley graphs on {0,1}^k
# ======================================================================================


@dataclass(frozen=True)
class CayleyGraph:
    """Cayley graph of ``({0,1}^k, XOR)`` with generator set ``generators``.

    Vertex ``x`` is adjacent to ``x ^ h`` for every generator ``h``.
    Generators must be distinct and nonzero, so the graph is simple and
    ``|H|``-regular.
    """

    dimension: int
    generators: tuple[int, ...]

    def __post_init__(self):
        k = self.dimension
        if not 1 <= k <= 62:
            raise InvalidParameterError(f"dimension must be in [1, 62], got {k}")
        gens = tuple(int(h) for h in self.generators)
        if not gens:
            raise InvalidParameterError("at least one generator is required")
        if any(h == 0 for h in gens):
            raise InvalidParameterError("the zero word is not a valid generator (self-loop)")
        if any(h < 0 or h >> k for h in gens):
            raise InvalidParameterError(f"generator outside {{0,1}}^{k}")
        if len(set(gens)) != len(gens):
            raise InvalidParameterError("generators must be distinct")
        object.__setattr__(self, "generators", gens)

    @property
    def vertex_count(self) -> int:
        return 1 << self.dimension

    @property
    def degree(self) -> int:
        return len(self.generators)

    def neighbors(self, x: int) -> np.ndarray:
        return np.sort(np.bitwise_xor(np.int64(x), np.asarray(self.generators, dtype=np.int64)))

    def neighbor_array(self) -> np.ndarray:
        if self.dimension > MAX_CAYLEY_DIMENSION:
            raise ResourceError(f"2^{self.dimension} vertices is too many to materialise")
        x = np.arange(self.vertex_count, dtype=np.int64)[:, None]
        return np.sort(x ^ np.asarray(self.generators, dtype=np.int64)[None, :], axis=1)

    def to_undirected(self) -> RegularGraph:
        return RegularGraph(self.neighbor_array())


@dataclass(frozen=True)
class ExpanderBudget:
    """Generator budget ``|H|`` targeting spectral gap ``1 - epsilon``."""

    epsilon: float
    generator_count: int
    clamped: bool = False

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InvalidParameterError("epsilon must lie in (0, 1)")
        if self.generator_count < 1:
            raise InvalidParameterError("generator_count must be at least 1")

    @classmethod
    def for_dimension(cls, k: int, epsilon: float, c: float = 1.0) -> ExpanderBudget:
        """``ceil(c * k^2 / epsilon^2)`` generators, capped at ``2^k - 1``.

        When the cap applies ``clamped`` is set; the capped budget is the
        complete graph on ``2^k`` vertices.
        """
        if c <= 0:
            raise InvalidParameterError("c must be positive")
        if not 0 < epsilon < 1:
            raise InvalidParameterError("epsilon must lie in (0, 1)")
        count = math.ceil(c * k * k / (epsilon * epsilon))
        available = (1 << k) - 1
        return cls(epsilon, min(count, available), clamped=count > available)


def sample_generators(k: int, budget: ExpanderBudget | int, seed: int) -> list[int]:
    """Distinct nonzero ``k``-bit words drawn uniformly without replacement.

    Returned in ascending order.
    """
    count = budget.generator_count if isinstance(budget, ExpanderBudget) else int(budget)
    available = (1 << k) - 1
    if count < 1:
        raise InvalidParameterError("need at least one generator")
    if count > available:
        raise InvalidParameterError(
            f"{count} generators requested but only {available} nonzero {k}-bit words exist"
        )
    rng = np.random.default_rng(seed)
    if k <= 24:
        words = rng.choice(available, size=count, replace=False) + 1
    else:
        chosen: set[int] = set()
        while len(chosen) < count:
            chosen.update(int(w) + 1 for w in rng.integers(0, available, size=count - len(chosen)))
        words = np.fromiter(chosen, dtype=np.int64)
    return sorted(int(w) for w in words)


def build_cayley_xor_graph(k: int, generators: Sequence[int]) -> CayleyGraph:
    return CayleyGraph(k, tuple(generators))


def bipartite_double_cover(g: RegularGraph | CayleyGraph) -> BipartiteGraph:
    """Copy the vertex set to a right side and join ``u`` to ``v'`` per edge ``{u, v}``."""
    if isinstance(g, CayleyGraph):
        nb = g.neighbor_array()
        construction = CAYLEY_DOUBLE_COVER
    elif isinstance(g, RegularGraph):
        nb = g.neighbors
        construction = EXPLICIT
    else:
        lists = [sorted(x) for x in g]
        if len({len(x) for x in lists}) != 1:
            raise InvalidParameterError("input graph is not regular")
        nb = RegularGraph(np.array(lists, dtype=np.int64)).neighbors
        construction = EXPLICIT
    n = nb.shape[0]
    return BipartiteGraph(n, n, nb.shape[1], nb, construction=construction)


# ======================================================================================
# Layered networks
# ======================================================================================


@dataclass(frozen=True)
class LayeredNetwork:
    """Ordered layers ``G_1 .. G_t``; ``G_1`` reads the network inputs."""

    layers: tuple[BipartiteGraph, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise InvalidParameterError("a network needs at least one layer")
        for i, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.n_right != b.n_left:
                raise InvalidParameterError(
                    f"layer {i} has {a.n_right} outputs but layer {i + 1} has {b.n_left} inputs"
                )
        object.__setattr__(self, "layers", layers)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_left

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].n_right

    def is_uniform_width(self) -> bool:
        return all(g.n_left == g.n_right == self.n_inputs for g in self.layers)

    def truncated(self, depth: int) -> LayeredNetwork:
        return LayeredNetwork(self.layers[:depth])


def random_layered_network(
    n: int, d: int, depth: int, seed: int, *, dedup: bool = False
) -> LayeredNetwork:
    """``depth`` independent random ``d``-regular layers of width ``n``.

    Layer seeds are spawned from ``seed`` so each layer is reproducible on
    its own.
    """
    if depth < 1:
        raise InvalidParameterError("depth must be at least 1")
    children = np.random.SeedSequence(seed).spawn(depth)
    seeds = [int(c.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1)) for c in children]
    return LayeredNetwork(
        tuple(build_random_regular_bipartite(n, d, s, dedup=dedup) for s in seeds)
    )


# ======================================================================================
# XGRAPH text format
# ======================================================================================

_XGRAPH_MAGIC = "XGRAPH"
_XGRAPH_VERSION = 1


def dumps_xgraph(g: BipartiteGraph) -> str:
    buf = io.StringIO()
    buf.write(f"{_XGRAPH_MAGIC} {_XGRAPH_VERSION} {g.n_left} {g.n_right} {g.degree}\n")
    for row in g.adjacency:
        buf.write(" ".join(map(str, row.tolist())))
        buf.write("\n")
    return buf.getvalue()


def loads_xgraph(text: str) -> BipartiteGraph:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty XGRAPH document", 0)
    header = lines[0].split()
    if len(header) != 5 or header[0] != _XGRAPH_MAGIC:
        raise FormatError("missing 'XGRAPH 1 <n_left> <n_right> <D>' header", 0)
    if header[1] != str(_XGRAPH_VERSION):
        raise FormatError(f"unsupported XGRAPH version {header[1]}", len("XGRAPH "))
    try:
        n_left, n_right, d = (int(x) for x in header[2:])
    except ValueError as exc:
        raise FormatError(f"bad header field: {exc}", 0) from None
    body = lines[1:]
    if len(body) != n_left:
        raise FormatError(f"expected {n_left} adjacency lines, found {len(body)}")
    rows = []
    for i, line in enumerate(body):
        parts = line.split()
        if len(parts) != d:
            raise FormatError(f"line {i + 2}: expected {d} entries, found {len(parts)}")
        try:
            row = [int(p) for p in parts]
        except ValueError:
            raise FormatError(f"line {i + 2}: non-integer neighbour index") from None
        if row != sorted(row):
            raise FormatError(f"line {i + 2}: neighbours not ascending")
        rows.append(row)
    try:
        return BipartiteGraph(n_left, n_right, d, np.array(rows, dtype=np.int64).reshape(n_left, d))
    except InvalidParameterError as exc:
        raise FormatError(f"invalid graph: {exc}") from None


def write_xgraph(g: BipartiteGraph, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(dumps_xgraph(g))


def read_xgraph(path: str | os.PathLike) -> BipartiteGraph:
    with open(path, encoding="ascii") as fh:
        return loads_xgraph(fh.read())
