"""Spectral gaps, vertex expansion and edge mixing of regular graphs.

The second eigenvalue ``lambda2`` is always the largest *magnitude* on the
complement of the all-ones vector.  For a bipartite layer this is the second
singular value of its biadjacency matrix, so a layer whose double cover is
itself bipartite (e.g. a 4-cycle) correctly reports ``gamma = 0``.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ConvergenceError, InvalidParameterError, ResourceError
from .graphs import MAX_CAYLEY_DIMENSION, BipartiteGraph, CayleyGraph, RegularGraph

__all__ = [
    "SpectralReport",
    "MixingCheckReport",
    "MixingSweep",
    "ExpansionCheckReport",
    "walsh_hadamard",
    "cayley_character_sums",
    "exact_cayley_spectrum",
    "estimate_second_eigenvalue",
    "dense_second_eigenvalue",
    "spectral_report",
    "check_mixing",
    "mixing_sweep",
    "check_expansion",
    "report_to_dict",
    "report_to_json",
]

AnyGraph = Union[BipartiteGraph, RegularGraph, CayleyGraph]

CHARACTER_SUM = "character-sum"
POWER_ITERATION = "power-iteration"
DENSE_EIGENSOLVE = "dense-eigensolve"

DENSE_LIMIT = 4096
EXHAUSTIVE_EXPANSION_LIMIT = 20
EXHAUSTIVE_MIXING_LIMIT = 12
# Slack for float round-off when comparing an exact count against a bound.
_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class SpectralReport:
    degree: int
    lambda2: float
    gamma: float
    method: str
    iterations: int = 0
    residual: float = 0.0
    n: int = 0
    graph_id: str | None = None


@dataclass(frozen=True)
class MixingCheckReport:
    s_size: int
    t_size: int
    observed_edges: int
    expected: float
    deviation: float
    bound_paper: float
    bound_standard: float
    pass_paper: bool
    pass_standard: bool


@dataclass(frozen=True)
class MixingSweep:
    """Summary of an exhaustive mixing check over all nonempty ``(S, T)``."""

    pairs: int
    violations_standard: int
    violations_paper: int
    max_standard_ratio: float

    @property
    def paper_pass_rate(self) -> float:
        return 1.0 - self.violations_paper / self.pairs


@dataclass(frozen=True)
class ExpansionCheckReport:
    subset: tuple[int, ...]
    subset_size: int
    neighborhood_size: int
    claimed_lower_bound: float
    satisfied: bool
    mode: str


# ======================================================================================
# Exact spectra of XOR Cayley graphs
# ======================================================================================


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalised fast Walsh-Hadamard transform of a length ``2^k`` vector."""
    a = np.array(values, copy=True)
    n = a.size
    if n & (n - 1):
        raise InvalidParameterError("length must be a power of two")
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.stack((a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]), axis=1)
        h *= 2
    return a.reshape(n)


def cayley_character_sums(g: CayleyGraph) -> np.ndarray:
    """Eigenvalue attached to each character ``y``: ``sum_h (-1)^<y,h>``.

    Entry ``y`` of the result belongs to the eigenvector
    ``x -> (-1)^<x,y>``; entry 0 is the trivial character with value ``|H|``.
    """
    if g.dimension > MAX_CAYLEY_DIMENSION:
        raise ResourceError(f"2^{g.dimension} characters do not fit in memory")
    indicator = np.zeros(g.vertex_count, dtype=np.int64)
    indicator[list(g.generators)] = 1
    return walsh_hadamard(indicator)


def exact_cayley_spectrum(g: CayleyGraph) -> np.ndarray:
    """All ``2^k`` adjacency eigenvalues, sorted in descending order."""
    return np.sort(cayley_character_sums(g))[::-1]


# ======================================================================================
# Second eigenvalue estimation
# ======================================================================================


def _operator(g: AnyGraph):
    """Return ``(n, top, apply)`` where ``apply`` is the PSD operator whose top
    eigenvalue on the all-ones complement is ``lambda2 ** 2``."""
    if isinstance(g, BipartiteGraph):
        rd = g.right_degrees()
        if not np.all(rd == rd[0]):
            raise InvalidParameterError("bipartite layer is not right-regular")
        mat = g.sparse_biadjacency()
        mat_t = mat.T.tocsr()
        top = math.sqrt(g.degree * int(rd[0]))
        return g.n_right, top, lambda v: mat_t @ (mat @ v)
    if isinstance(g, CayleyGraph):
        g = g.to_undirected()
    if isinstance(g, RegularGraph):
        mat = g.sparse_adjacency()
        return g.n, float(g.degree), lambda v: mat @ (mat @ v)
    raise InvalidParameterError(f"unsupported graph type {type(g).__name__}")


def _degree(g: AnyGraph) -> int:
    return g.degree


def _graph_id(g: AnyGraph) -> str | None:
    return g.graph_id if isinstance(g, BipartiteGraph) else None


def estimate_second_eigenvalue(
    g: AnyGraph,
    tol: float = 1e-8,
    max_iter: int | None = None,
    seed: int = 0,
    block_size: int = 8,
) -> SpectralReport:
    """Block power iteration for ``lambda2`` with the all-ones vector deflated.

    Iterates the squared operator (``A A`` or ``B^T B``) on a seeded block of
    vectors kept orthogonal to the all-ones vector, with a Rayleigh-Ritz step
    each round.  Stops when the residual of the leading Ritz pair, expressed
    on the ``lambda2`` scale, drops below ``tol``.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` rounds pass without convergence; ``exc.best`` holds
        the last report.
    """
    if tol <= 0:
        raise InvalidParameterError("tol must be positive")
    n, top, apply = _operator(g)
    degree = _degree(g)
    if max_iter is None:
        max_iter = max(100, int(10 * n * math.log(max(n, 2))))
    if n < 2:
        return SpectralReport(degree, 0.0, 1.0, POWER_ITERATION, 0, 0.0, n, _graph_id(g))

    p = max(1, min(block_size, n - 1))
    rng = np.random.default_rng(seed)
    block = rng.standard_normal((n, p))
    block -= block.mean(axis=0)
    block, _ = np.linalg.qr(block)

    theta = 0.0
    residual = math.inf
    for it in range(1, max_iter + 1):
        image = apply(block)
        image -= image.mean(axis=0)
        small = block.T @ image
        small = 0.5 * (small + small.T)
        evals, evecs = np.linalg.eigh(small)
        theta = max(float(evals[-1]), 0.0)
        lead = evecs[:, -1]
        r = float(np.linalg.norm(image @ lead - theta * (block @ lead)))
        scale = math.sqrt(theta) if theta > 0 else 1.0
        residual = r / (2.0 * scale)
        if residual <= tol:
            break
        q, rdiag = np.linalg.qr(image)
        if np.all(np.abs(np.diag(rdiag)) <= 1e-300):
            # operator vanishes on the complement: lambda2 = 0
            theta, residual = 0.0, 0.0
            break
        block = q
    else:
        lam = math.sqrt(theta)
        best = SpectralReport(
            degree, lam, _gamma(lam, top), POWER_ITERATION, max_iter, residual, n, _graph_id(g)
        )
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} rounds (residual {residual:.3g})",
            best=best,
        )
    lam = min(math.sqrt(theta), top)
    return SpectralReport(degree, lam, _gamma(lam, top), POWER_ITERATION, it, residual, n, _graph_id(g))


def _gamma(lam: float, top: float) -> float:
    return min(1.0, max(0.0, 1.0 - lam / top))


def dense_second_eigenvalue(g: AnyGraph) -> SpectralReport:
    """``lambda2`` by a full dense eigensolve on the all-ones complement."""
    if isinstance(g, BipartiteGraph):
        if max(g.n_left, g.n_right) > DENSE_LIMIT:
            raise ResourceError("graph too large for a dense eigensolve")
        rd = g.right_degrees()
        if not np.all(rd == rd[0]):
            raise InvalidParameterError("bipartite layer is not right-regular")
        mat = g.biadjacency().astype(float)
        mat = mat - mat.mean(axis=0, keepdims=True)
        mat = mat - mat.mean(axis=1, keepdims=True)
        lam = float(np.linalg.svd(mat, compute_uv=False)[0]) if mat.size else 0.0
        top = math.sqrt(g.degree * int(rd[0]))
        n = g.n_right
    else:
        if isinstance(g, CayleyGraph):
            g = g.to_undirected()
        if g.n > DENSE_LIMIT:
            raise ResourceError("graph too large for a dense eigensolve")
        mat = g.adjacency_matrix().astype(float)
        mat = mat - mat.mean(axis=0, keepdims=True)
        mat = mat - mat.mean(axis=1, keepdims=True)
        lam = float(np.max(np.abs(np.linalg.eigvalsh(mat))))
        top = float(g.degree)
        n = g.n
    lam = min(lam, top)
    return SpectralReport(g.degree, lam, _gamma(lam, top), DENSE_EIGENSOLVE, 1, 0.0, n, _graph_id(g))


def _character_sum_report(g: CayleyGraph) -> SpectralReport:
    sums = cayley_character_sums(g)
    lam = float(np.max(np.abs(sums[1:]))) if sums.size > 1 else 0.0
    return SpectralReport(g.degree, lam, _gamma(lam, g.degree), CHARACTER_SUM, 1, 0.0, g.vertex_count)


def spectral_report(g: AnyGraph, method: str | None = None, **kwargs) -> SpectralReport:
    """Spectral report by the requested method.

    ``method=None`` picks the character-sum oracle for Cayley graphs and
    power iteration for everything else.
    """
    if method is None:
        method = CHARACTER_SUM if isinstance(g, CayleyGraph) else POWER_ITERATION
    if method == CHARACTER_SUM:
        if not isinstance(g, CayleyGraph):
            raise InvalidParameterError("character sums need a CayleyGraph")
        return _character_sum_report(g)
    if method == DENSE_EIGENSOLVE:
        return dense_second_eigenvalue(g)
    if method == POWER_ITERATION:
        return estimate_second_eigenvalue(g, **kwargs)
    raise InvalidParameterError(f"unknown method {method!r}")


# ======================================================================================
# Expander mixing lemma
# ======================================================================================


def _sides(g: AnyGraph) -> tuple[int, int, np.ndarray]:
    """``(n_source, n_target, neighbour array)`` for edge counting."""
    if isinstance(g, BipartiteGraph):
        return g.n_left, g.n_right, g.adjacency
    if isinstance(g, CayleyGraph):
        nb = g.neighbor_array()
        return nb.shape[0], nb.shape[0], nb
    return g.n, g.n, g.neighbors


def _as_vertex_set(vertices: Iterable[int], limit: int, name: str) -> np.ndarray:
    arr = np.unique(np.asarray(list(vertices), dtype=np.int64))
    if arr.size and (arr[0] < 0 or arr[-1] >= limit):
        raise InvalidParameterError(f"{name} contains a vertex outside [0, {limit})")
    return arr


def _mixing_report(observed, s_size, t_size, degree, n_target, lam, gamma) -> MixingCheckReport:
    expected = degree * s_size * t_size / n_target
    root = math.sqrt(s_size * t_size)
    deviation = abs(observed - expected)
    bound_paper = (1.0 - gamma) * root
    bound_standard = lam * root
    return MixingCheckReport(
        s_size=s_size,
        t_size=t_size,
        observed_edges=int(observed),
        expected=expected,
        deviation=deviation,
        bound_paper=bound_paper,
        bound_standard=bound_standard,
        pass_paper=deviation <= bound_paper + _BOUND_SLACK * (1 + bound_paper),
        pass_standard=deviation <= bound_standard + _BOUND_SLACK * (1 + bound_standard),
    )


def check_mixing(
    g: AnyGraph,
    S: Iterable[int],
    T: Iterable[int],
    report: SpectralReport | None = None,
) -> MixingCheckReport:
    """Compare the exact edge count ``E(S, T)`` with its density expectation.

    For a bipartite layer ``S`` is a set of left vertices and ``T`` of right
    vertices.  For an undirected graph ``E(S, T)`` counts ordered pairs
    ``(u, v)`` with ``u in S``, ``v in T`` and ``u ~ v``.  Parallel edges
    count with multiplicity.
    """
    n_source, n_target, nb = _sides(g)
    s = _as_vertex_set(S, n_source, "S")
    t = _as_vertex_set(T, n_target, "T")
    if report is None:
        report = spectral_report(g)
    in_t = np.zeros(n_target, dtype=bool)
    in_t[t] = True
    observed = int(in_t[nb[s]].sum()) if s.size else 0
    return _mixing_report(observed, s.size, t.size, g.degree, n_target, report.lambda2, report.gamma)


def _all_subsets(n: int) -> np.ndarray:
    """Indicator rows of all nonempty subsets of ``range(n)``, by bitmask order."""
    masks = np.arange(1, 1 << n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(np.int64)


def mixing_sweep(g: AnyGraph, report: SpectralReport | None = None) -> MixingSweep:
    """Exhaustive mixing check over every pair of nonempty vertex subsets."""
    n_source, n_target, _ = _sides(g)
    if max(n_source, n_target) > EXHAUSTIVE_MIXING_LIMIT:
        raise ResourceError(
            f"exhaustive mixing sweep limited to {EXHAUSTIVE_MIXING_LIMIT} vertices per side"
        )
    if report is None:
        report = spectral_report(g)
    if isinstance(g, BipartiteGraph):
        mat = g.biadjacency()
    elif isinstance(g, CayleyGraph):
        mat = g.to_undirected().adjacency_matrix()
    else:
        mat = g.adjacency_matrix()
    xs = _all_subsets(n_source)
    xt = _all_subsets(n_target)
    counts = xs @ mat @ xt.T
    ss = xs.sum(axis=1)[:, None]
    ts = xt.sum(axis=1)[None, :]
    expected = g.degree * ss * ts / n_target
    deviation = np.abs(counts - expected)
    root = np.sqrt(ss * ts)
    b_std = report.lambda2 * root
    b_pap = (1.0 - report.gamma) * root
    viol_std = deviation > b_std + _BOUND_SLACK * (1 + b_std)
    viol_pap = deviation > b_pap + _BOUND_SLACK * (1 + b_pap)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(b_std > 0, deviation / np.where(b_std > 0, b_std, 1), np.where(deviation > 0, np.inf, 0.0))
    return MixingSweep(
        pairs=int(counts.size),
        violations_standard=int(viol_std.sum()),
        violations_paper=int(viol_pap.sum()),
        max_standard_ratio=float(ratio.max()),
    )


# ======================================================================================
# Vertex expansion
# ======================================================================================


def _neighbour_matrix(g: AnyGraph) -> np.ndarray:
    n_source, n_target, nb = _sides(g)
    mat = np.zeros((n_source, n_target), dtype=bool)
    mat[np.repeat(np.arange(n_source), nb.shape[1]), nb.ravel()] = True
    return mat


def _expand_batch(mat: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    return mat[subsets].any(axis=1).sum(axis=1)


def check_expansion(
    g: AnyGraph,
    mode: str = "exhaustive",
    sample_count: int = 1000,
    seed: int = 0,
    report: SpectralReport | None = None,
    threads: int = 1,
) -> list[ExpansionCheckReport]:
    """Measure ``|N(S)|`` against ``(1 + gamma) |S|`` for ``|S| <= n/2``.

    ``mode="exhaustive"`` visits every subset (by size, then
    lexicographically) and is limited to 20 vertices.  ``mode="sampled"``
    draws ``sample_count`` seeded subsets of uniformly random size.
    ``satisfied`` records whether the inequality held; it is a finding,
    not a guarantee.
    """
    n_source, _, _ = _sides(g)
    if report is None:
        report = spectral_report(g)
    factor = 1.0 + report.gamma
    mat = _neighbour_matrix(g)
    half = n_source // 2
    out: list[ExpansionCheckReport] = []

    def emit(subsets: np.ndarray, sizes: np.ndarray, label: str):
        res = []
        for sub, nbhd in zip(subsets, sizes):
            bound = factor * len(sub)
            res.append(
                ExpansionCheckReport(
                    subset=tuple(int(x) for x in sub),
                    subset_size=len(sub),
                    neighborhood_size=int(nbhd),
                    claimed_lower_bound=bound,
                    satisfied=bool(nbhd >= bound - _BOUND_SLACK * bound),
                    mode=label,
                )
            )
        return res

    if mode == "exhaustive":
        if n_source > EXHAUSTIVE_EXPANSION_LIMIT:
            raise ResourceError(
                f"exhaustive expansion is limited to n <= {EXHAUSTIVE_EXPANSION_LIMIT}"
            )

        def by_size(size: int):
            subsets = np.array(list(itertools.combinations(range(n_source), size)), dtype=np.int64)
            return emit(subsets, _expand_batch(mat, subsets), "exhaustive")

        sizes = range(1, half + 1)
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                chunks = list(pool.map(by_size, sizes))
        else:
            chunks = [by_size(s) for s in sizes]
        for chunk in chunks:
            out.extend(chunk)
        return out

    if mode == "sampled":
        if half < 1:
            return out
        rng = np.random.default_rng(seed)
        drawn = []
        for _ in range(sample_count):
            size = int(rng.integers(1, half + 1))
            drawn.append(tuple(sorted(int(x) for x in rng.choice(n_source, size=size, replace=False))))
        drawn.sort(key=lambda s: (len(s), s))
        for size, group in itertools.groupby(drawn, key=len):
            subsets = np.array(list(group), dtype=np.int64)
            out.extend(emit(subsets, _expand_batch(mat, subsets), "sampled"))
        return out

    raise InvalidParameterError(f"unknown mode {mode!r}")


# ======================================================================================
# JSON report
# ======================================================================================


def report_to_dict(
    report: SpectralReport,
    checks: Sequence[MixingCheckReport | ExpansionCheckReport] = (),
    graph_id: str | None = None,
) -> dict:
    """Report as an insertion-ordered dict: ``graph_id, method, lambda2, gamma, checks``."""
    rows = []
    for c in checks:
        row = asdict(c)
        if "subset" in row:
            row["subset"] = list(row["subset"])
        rows.append(row)
    return {
        "graph_id": graph_id if graph_id is not None else report.graph_id,
        "method": report.method,
        "lambda2": report.lambda2,
        "gamma": report.gamma,
        "checks": rows,
    }


def report_to_json(report: SpectralReport, checks=(), graph_id: str | None = None) -> str:
    return json.dumps(report_to_dict(report, checks, graph_id), indent=2)
