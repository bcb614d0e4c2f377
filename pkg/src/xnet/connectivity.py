"""Reachability and path counting through stacks of bipartite layers.

A deep X-Linear network is modelled as a :class:`~xnet.graphs.LayeredNetwork`.
Output ``v`` is *sensitive* to input ``u`` when some path uses one edge of
each layer in order.  Path counts between input set ``S`` and output set
``T`` are compared with their density expectation ``D^t |S| |T| / n``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import InvalidParameterError
from .graphs import BipartiteGraph, LayeredNetwork
from .spectral import SpectralReport, estimate_second_eigenvalue

__all__ = [
    "NOT_ACHIEVED",
    "SensitivityReport",
    "PathCountReport",
    "layer_spectra",
    "reach_frontiers",
    "reachability",
    "meet_in_the_middle_reachability",
    "sensitivity_depth",
    "count_paths",
    "write_frontiers_csv",
    "frontiers_csv",
    "sensitivity_summary",
]

NOT_ACHIEVED = "not achieved"

_INT64_LIMIT = 2**62


@dataclass(frozen=True)
class SensitivityReport:
    """Reachability of every output from every input, layer by layer.

    ``frontier_sizes[u, i]`` is ``|N_{i+1}(u)|``, the number of vertices
    after layer ``i + 1`` reachable from input ``u``.  ``fully_sensitive_at``
    is the smallest depth at which all ``n^2`` pairs are connected, or
    ``None`` when that never happens within ``depth_tested`` layers.
    """

    n: int
    depth_tested: int
    frontier_sizes: np.ndarray
    fully_sensitive_at: int | None
    growth_ok: bool
    growth_checks: int
    growth_failures: int
    method: str = "forward"

    @property
    def achieved(self) -> bool:
        return self.fully_sensitive_at is not None


@dataclass(frozen=True)
class PathCountReport:
    s_size: int
    t_size: int
    depth: int
    exact_count: int
    expected: float
    gamma_min: float
    bound: float
    within_bound: bool

    @property
    def absolute_deviation(self) -> float:
        return abs(self.exact_count - self.expected)

    @property
    def relative_deviation(self) -> float:
        return abs(self.exact_count / self.expected - 1.0) if self.expected else math.inf


def layer_spectra(net: LayeredNetwork, tol: float = 1e-8, seed: int = 0) -> list[SpectralReport]:
    """Spectral report per layer; identical layers are solved once."""
    cache: dict[str, SpectralReport] = {}
    out = []
    for g in net.layers:
        key = g.graph_id
        if key not in cache:
            cache[key] = estimate_second_eigenvalue(g, tol=tol, seed=seed)
        out.append(cache[key])
    return out


def _check_source(net: LayeredNetwork, source: int) -> None:
    if not 0 <= source < net.n_inputs:
        raise InvalidParameterError(f"source {source} outside [0, {net.n_inputs})")


def reach_frontiers(net: LayeredNetwork, source: int) -> list[int]:
    """Sizes ``|N_1(u)|, ..., |N_t(u)|`` of the sets reachable from ``source``."""
    _check_source(net, source)
    frontier = np.array([source], dtype=np.int64)
    sizes = []
    for g in net.layers:
        hit = np.zeros(g.n_right, dtype=bool)
        hit[g.adjacency[frontier].ravel()] = True
        frontier = np.flatnonzero(hit)
        sizes.append(int(frontier.size))
    return sizes


def _step(reach: np.ndarray, g: BipartiteGraph) -> np.ndarray:
    mat = (g.biadjacency() > 0).astype(np.float32)
    return (reach.astype(np.float32) @ mat) > 0


def reachability(net: LayeredNetwork, depth: int | None = None) -> np.ndarray:
    """Boolean ``(n_inputs, n_outputs_at_depth)`` matrix of connected pairs."""
    depth = net.depth if depth is None else depth
    reach = np.eye(net.n_inputs, dtype=bool)
    for g in net.layers[:depth]:
        reach = _step(reach, g)
    return reach


def meet_in_the_middle_reachability(net: LayeredNetwork, depth: int | None = None) -> np.ndarray:
    """Connected pairs found by growing frontiers from both ends.

    Inputs are pushed forward through the first ``ceil(t/2)`` layers and
    outputs pulled backward through the rest; ``(u, v)`` is connected when
    the two frontiers meet.
    """
    depth = net.depth if depth is None else depth
    layers = net.layers[:depth]
    split = (depth + 1) // 2
    fwd = np.eye(net.n_inputs, dtype=bool)
    for g in layers[:split]:
        fwd = _step(fwd, g)
    n_out = layers[-1].n_right
    bwd = np.eye(n_out, dtype=bool)
    for g in reversed(layers[split:]):
        mat = (g.biadjacency() > 0).astype(np.float32)
        bwd = (bwd.astype(np.float32) @ mat.T) > 0
    return (fwd.astype(np.float32) @ bwd.T.astype(np.float32)) > 0


def sensitivity_depth(
    net: LayeredNetwork,
    method: str = "forward",
    spectra: Sequence[SpectralReport] | None = None,
) -> SensitivityReport:
    """Find the first depth at which every output depends on every input.

    ``method="forward"`` propagates all sources at once; ``"meet"``
    re-derives reachability at each depth from both ends.  Frontier growth
    ``|N_i| >= (1 + gamma_i) |N_{i-1}|`` is recorded for every step that
    starts from at most ``n/2`` vertices.
    """
    if not net.is_uniform_width():
        raise InvalidParameterError("all layers must have the same width on both sides")
    n = net.n_inputs
    if spectra is None:
        spectra = layer_spectra(net)
    if len(spectra) != net.depth:
        raise InvalidParameterError("need one spectral report per layer")

    sizes = np.zeros((n, net.depth), dtype=np.int64)
    full_at = None
    reach = np.eye(n, dtype=bool)
    for i, g in enumerate(net.layers):
        if method == "forward":
            reach = _step(reach, g)
        elif method == "meet":
            reach = meet_in_the_middle_reachability(net, i + 1)
        else:
            raise InvalidParameterError(f"unknown method {method!r}")
        sizes[:, i] = reach.sum(axis=1)
        if full_at is None and reach.all():
            full_at = i + 1

    prev = np.concatenate([np.ones((n, 1), dtype=np.int64), sizes[:, :-1]], axis=1)
    gammas = np.array([r.gamma for r in spectra])
    active = prev <= n / 2
    ok = sizes >= (1.0 + gammas)[None, :] * prev - 1e-9
    checks = int(active.sum())
    failures = int((active & ~ok).sum())
    return SensitivityReport(
        n=n,
        depth_tested=net.depth,
        frontier_sizes=sizes,
        fully_sensitive_at=full_at,
        growth_ok=failures == 0,
        growth_checks=checks,
        growth_failures=failures,
        method=method,
    )


def _propagate(x: np.ndarray, g: BipartiteGraph) -> np.ndarray:
    """Push integer path counts through one layer, exactly."""
    if x.dtype != object:
        peak = int(x.max()) if x.size else 0
        if peak * int(g.right_degrees().max()) >= _INT64_LIMIT:
            x = x.astype(object)
    out = np.zeros(g.n_right, dtype=x.dtype)
    np.add.at(out, g.adjacency.ravel(), np.repeat(x, g.degree))
    return out


def count_paths(
    net: LayeredNetwork,
    S: Iterable[int],
    T: Iterable[int],
    spectra: Sequence[SpectralReport] | None = None,
) -> PathCountReport:
    """Exact number of layered paths from input set ``S`` to output set ``T``.

    Counts are propagated in 64-bit integers and fall back to Python
    integers before any step that could overflow.  ``expected`` uses the
    degree of the ``t``-step path graph, ``prod(D_i)``; ``bound`` is
    ``prod(D_i (1 - gamma_min)) * sqrt(|S| |T|)``.
    """
    s = np.unique(np.asarray(list(S), dtype=np.int64))
    t = np.unique(np.asarray(list(T), dtype=np.int64))
    if s.size and (s[0] < 0 or s[-1] >= net.n_inputs):
        raise InvalidParameterError("S contains a vertex outside the input layer")
    if t.size and (t[0] < 0 or t[-1] >= net.n_outputs):
        raise InvalidParameterError("T contains a vertex outside the output layer")
    if spectra is None:
        spectra = layer_spectra(net)

    x = np.zeros(net.n_inputs, dtype=np.int64)
    x[s] = 1
    for g in net.layers:
        x = _propagate(x, g)
    count = int(sum(int(v) for v in x[t])) if t.size else 0

    d_eff = math.prod(g.degree for g in net.layers)
    expected = d_eff * s.size * t.size / net.n_outputs
    gamma_min = min(r.gamma for r in spectra)
    bound = math.prod(g.degree * (1.0 - gamma_min) for g in net.layers) * math.sqrt(s.size * t.size)
    within = abs(count - expected) <= bound + 1e-9 * (1.0 + bound)
    return PathCountReport(
        s_size=int(s.size),
        t_size=int(t.size),
        depth=net.depth,
        exact_count=count,
        expected=expected,
        gamma_min=gamma_min,
        bound=bound,
        within_bound=bool(within),
    )


def write_frontiers_csv(report: SensitivityReport, fh: TextIO) -> None:
    """One row per source vertex: ``source, f_1, ..., f_t``."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["source"] + [f"f_{i + 1}" for i in range(report.depth_tested)])
    for u, row in enumerate(report.frontier_sizes):
        writer.writerow([u] + row.tolist())


def frontiers_csv(report: SensitivityReport) -> str:
    buf = io.StringIO()
    write_frontiers_csv(report, buf)
    return buf.getvalue()


def sensitivity_summary(report: SensitivityReport) -> dict:
    return {
        "n": report.n,
        "depth_tested": report.depth_tested,
        "method": report.method,
        "fully_sensitive_at": (
            report.fully_sensitive_at if report.achieved else NOT_ACHIEVED
        ),
        "growth_ok": report.growth_ok,
        "growth_checks": report.growth_checks,
        "growth_failures": report.growth_failures,
        "min_frontier": report.frontier_sizes.min(axis=0).tolist(),
        "max_frontier": report.frontier_sizes.max(axis=0).tolist(),
    }
