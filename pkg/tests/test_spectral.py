from __future__ import annotations

import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xnet.errors import ConvergenceError, InvalidParameterError, ResourceError
from xnet.graphs import (
    bipartite_double_cover,
    build_cayley_xor_graph,
    build_random_regular_bipartite,
    complete_bipartite,
    complete_graph,
    cycle_graph,
    identity_bipartite,
    sample_generators,
)
from xnet.spectral import (
    cayley_character_sums,
    check_expansion,
    check_mixing,
    dense_second_eigenvalue,
    estimate_second_eigenvalue,
    exact_cayley_spectrum,
    mixing_sweep,
    report_to_dict,
    report_to_json,
    spectral_report,
    walsh_hadamard,
)


def brute_character_sums(k, gens):
    return [sum((-1) ** bin(y & h).count("1") for h in gens) for y in range(1 << k)]


def second_singular_value(g):
    # oracle: full SVD of the multiplicity matrix, drop the top value once
    s = np.linalg.svd(g.biadjacency().astype(float), compute_uv=False)
    return float(s[1]) if s.size > 1 else 0.0


def second_eigen_magnitude(mat):
    ev = np.sort(np.abs(np.linalg.eigvalsh(mat.astype(float))))[::-1]
    return float(ev[1])


# --- exact Cayley spectrum ------------------------------------------------------------


def test_four_cycle_spectrum():
    g = build_cayley_xor_graph(2, [0b01, 0b10])
    assert exact_cayley_spectrum(g).tolist() == [2, 0, 0, -2]


def test_k4_spectrum():
    g = build_cayley_xor_graph(2, [1, 2, 3])
    assert exact_cayley_spectrum(g).tolist() == [3, -1, -1, -1]


@pytest.mark.parametrize("k, count, seed", [(3, 2, 0), (5, 9, 1), (7, 20, 2), (8, 40, 3)])
def test_character_sums_match_brute_force(k, count, seed):
    gens = sample_generators(k, count, seed)
    sums = cayley_character_sums(build_cayley_xor_graph(k, gens))
    assert sums.tolist() == brute_character_sums(k, gens)


def test_top_eigenvalue_is_degree_with_ones_vector():
    gens = sample_generators(6, 11, seed=4)
    g = build_cayley_xor_graph(6, gens)
    spec = exact_cayley_spectrum(g)
    assert spec[0] == 11
    a = g.to_undirected().adjacency_matrix()
    ones = np.ones(64)
    assert np.array_equal(a @ ones, 11 * ones)


def test_character_sums_match_dense_eigenvalues():
    gens = sample_generators(6, 13, seed=8)
    g = build_cayley_xor_graph(6, gens)
    dense = np.sort(np.linalg.eigvalsh(g.to_undirected().adjacency_matrix().astype(float)))
    assert np.allclose(np.sort(exact_cayley_spectrum(g)), dense, atol=1e-9)


def test_walsh_hadamard_matrix():
    h = np.array([[1]])
    for _ in range(3):
        h = np.block([[h, h], [h, -h]])
    v = np.arange(8)
    assert np.array_equal(walsh_hadamard(v), h @ v)
    with pytest.raises(InvalidParameterError):
        walsh_hadamard(np.ones(6))


def test_character_sum_limit():
    from xnet.graphs import CayleyGraph
    with pytest.raises(ResourceError):
        exact_cayley_spectrum(CayleyGraph(30, (1,)))


# --- power iteration ------------------------------------------------------------------


def test_k4_power_iteration():
    rep = estimate_second_eigenvalue(complete_graph(4))
    assert rep.lambda2 == pytest.approx(1.0, abs=1e-8)
    assert rep.gamma == pytest.approx(2 / 3, abs=1e-8)
    assert rep.method == "power-iteration"
    assert rep.residual <= 1e-8


def test_identity_matching_has_no_gap():
    rep = estimate_second_eigenvalue(identity_bipartite(10))
    assert rep.lambda2 == pytest.approx(1.0, abs=1e-8)
    assert rep.gamma == pytest.approx(0.0, abs=1e-8)
    assert np.allclose(np.linalg.svd(identity_bipartite(10).biadjacency(), compute_uv=False), 1)


def test_cayley_power_iteration_matches_character_sums():
    g = build_cayley_xor_graph(8, sample_generators(8, 32, seed=5))
    exact = spectral_report(g)
    assert exact.method == "character-sum"
    est = estimate_second_eigenvalue(g)
    assert abs(est.lambda2 - exact.lambda2) <= 1e-6
    cover = estimate_second_eigenvalue(bipartite_double_cover(g))
    assert abs(cover.lambda2 - exact.lambda2) <= 1e-6


def test_cayley_four_cycle_cover_has_zero_gap():
    g = build_cayley_xor_graph(2, [1, 2])
    assert spectral_report(g).gamma == 0.0
    assert estimate_second_eigenvalue(bipartite_double_cover(g)).gamma == pytest.approx(0, abs=1e-8)


def test_complete_bipartite_gap_is_one():
    rep = estimate_second_eigenvalue(complete_bipartite(6))
    assert rep.lambda2 == pytest.approx(0.0, abs=1e-8)
    assert rep.gamma == pytest.approx(1.0)


def test_power_iteration_deterministic():
    g = build_random_regular_bipartite(50, 4, seed=3)
    a = estimate_second_eigenvalue(g, seed=2)
    b = estimate_second_eigenvalue(g, seed=2)
    assert a == b


def test_non_convergence_carries_best():
    g = build_random_regular_bipartite(200, 3, seed=1)
    with pytest.raises(ConvergenceError) as info:
        estimate_second_eigenvalue(g, tol=1e-15, max_iter=2, block_size=1)
    best = info.value.best
    assert best is not None and 0 < best.lambda2 <= 3


def test_bad_tolerance():
    with pytest.raises(InvalidParameterError):
        estimate_second_eigenvalue(complete_graph(4), tol=0)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 64), data=st.data())
def test_power_iteration_matches_dense_bipartite(n, data):
    d = data.draw(st.integers(1, min(n, 8)))
    g = build_random_regular_bipartite(n, d, data.draw(st.integers(0, 10**6)))
    est = estimate_second_eigenvalue(g)
    assert abs(est.lambda2 - second_singular_value(g)) <= 1e-6
    assert abs(dense_second_eigenvalue(g).lambda2 - second_singular_value(g)) <= 1e-9
    assert est.gamma == pytest.approx(1 - est.lambda2 / d)


@pytest.mark.parametrize("n", [5, 8, 13])
def test_power_iteration_matches_dense_undirected(n):
    g = cycle_graph(n)
    oracle = second_eigen_magnitude(g.adjacency_matrix())
    assert abs(estimate_second_eigenvalue(g).lambda2 - oracle) <= 1e-6


# --- mixing ---------------------------------------------------------------------------


def test_complete_bipartite_mixing_exact():
    g = complete_bipartite(6)
    for s, t in [([0], [1, 2]), ([0, 1, 2], [5]), (range(6), range(6))]:
        rep = check_mixing(g, s, t)
        assert rep.observed_edges == rep.s_size * rep.t_size
        assert rep.deviation == 0 and rep.pass_standard and rep.pass_paper


def edge_count_oracle(g, s, t):
    return sum(1 for u in s for v in g.adjacency[u] if int(v) in t)


def test_mixing_exhaustive_n8():
    g = build_random_regular_bipartite(8, 3, seed=0)
    lam = second_singular_value(g)
    subsets = [c for r in range(1, 9) for c in itertools.combinations(range(8), r)]
    for s in subsets[::7]:
        for t in subsets[::5]:
            rep = check_mixing(g, s, t)
            observed = edge_count_oracle(g, s, set(t))
            assert rep.observed_edges == observed
            assert abs(observed - 3 * len(s) * len(t) / 8) <= lam * math.sqrt(len(s) * len(t)) + 1e-9
            assert rep.pass_standard
    sweep = mixing_sweep(g)
    assert sweep.pairs == 255 * 255
    assert sweep.violations_standard == 0


def test_single_matching_mixing():
    g = identity_bipartite(8)
    t = [1, 4, 6]
    s = t  # left vertices matched into T
    rep = check_mixing(g, s, t)
    assert rep.observed_edges == 3
    assert rep.expected == pytest.approx(9 / 8)
    assert rep.bound_standard == pytest.approx(3.0)
    assert rep.pass_standard


def test_mixing_rejects_bad_vertices():
    with pytest.raises(InvalidParameterError):
        check_mixing(complete_bipartite(4), [0, 4], [1])


def test_undirected_mixing_counts_ordered_pairs():
    g = complete_graph(4)
    rep = check_mixing(g, [0, 1], [0, 1])
    assert rep.observed_edges == 2


def test_mixing_sweep_limit():
    with pytest.raises(ResourceError):
        mixing_sweep(build_random_regular_bipartite(13, 2, seed=0))


# --- expansion ------------------------------------------------------------------------


def test_complete_bipartite_expansion():
    reps = check_expansion(complete_bipartite(6))
    assert all(r.neighborhood_size == 6 and r.satisfied for r in reps)
    assert max(r.subset_size for r in reps) == 3


def test_identity_expansion_boundary():
    reps = check_expansion(identity_bipartite(6))
    assert all(r.neighborhood_size == r.subset_size for r in reps)
    assert all(r.satisfied for r in reps)


def bitset_neighbourhoods(g, max_size):
    masks = []
    for u in range(g.n_left):
        m = 0
        for v in g.adjacency[u]:
            m |= 1 << int(v)
        masks.append(m)
    out = {}
    for r in range(1, max_size + 1):
        for sub in itertools.combinations(range(g.n_left), r):
            acc = 0
            for u in sub:
                acc |= masks[u]
            out[sub] = bin(acc).count("1")
    return out


def test_expansion_matches_bitset_oracle():
    g = build_random_regular_bipartite(12, 3, seed=2)
    reps = check_expansion(g)
    oracle = bitset_neighbourhoods(g, 6)
    assert len(reps) == len(oracle)
    assert {r.subset: r.neighborhood_size for r in reps} == oracle
    keys = [(r.subset_size, r.subset) for r in reps]
    assert keys == sorted(keys)


def test_expansion_threads_same_result():
    g = build_random_regular_bipartite(10, 2, seed=6)
    assert check_expansion(g, threads=3) == check_expansion(g)


def test_expansion_sampled():
    g = build_random_regular_bipartite(40, 4, seed=1)
    reps = check_expansion(g, mode="sampled", sample_count=50, seed=3)
    assert len(reps) == 50
    assert reps == check_expansion(g, mode="sampled", sample_count=50, seed=3)
    masks = g.biadjacency() > 0
    for r in reps:
        assert r.neighborhood_size == int(masks[list(r.subset)].any(axis=0).sum())
        assert r.subset_size <= 20


def test_expansion_exhaustive_limit():
    with pytest.raises(ResourceError):
        check_expansion(build_random_regular_bipartite(21, 2, seed=0))


# --- JSON -----------------------------------------------------------------------------


def test_report_json_field_order():
    g = build_random_regular_bipartite(8, 2, seed=1)
    rep = spectral_report(g)
    text = report_to_json(rep, [check_mixing(g, [0], [1], rep)])
    d = json.loads(text)
    assert list(d) == ["graph_id", "method", "lambda2", "gamma", "checks"]
    assert d["graph_id"] == g.graph_id
    assert report_to_dict(rep)["checks"] == []
