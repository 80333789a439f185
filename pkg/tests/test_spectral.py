import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distcond.graph import CapabilityError, Graph, cut_stats, generate, is_connected
from distcond.spectral import (
    all_walk_distributions,
    conductance_bounds,
    discrepancy_profile,
    l2_discrepancy_squared,
    l2_discrepancy_squared_direct,
    lazy_walk_step,
    mixing_upper_bound,
    normalized_walk_eigendecomposition,
    sparse_cut_partition,
    stationary_distribution,
    verify_weak_set_lemma,
    walk_decomposition_residual,
    walk_endpoint_distribution,
    weak_vertices,
)

K2 = Graph.from_edges(2, [(0, 1)])
C4 = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
C8 = Graph.from_edges(8, [(i, (i + 1) % 8) for i in range(8)])
STAR4 = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])


def test_stationary_examples():
    np.testing.assert_allclose(stationary_distribution(K2), [0.5, 0.5])
    np.testing.assert_allclose(stationary_distribution(STAR4), [1 / 2, 1 / 6, 1 / 6, 1 / 6])
    np.testing.assert_allclose(stationary_distribution(C4), [0.25] * 4)
    with pytest.raises(ValueError):
        stationary_distribution(Graph.from_edges(3, []))


def test_lazy_step_examples():
    np.testing.assert_allclose(lazy_walk_step(K2, [1, 0]), [0.5, 0.5])
    np.testing.assert_allclose(lazy_walk_step(C4, [1, 0, 0, 0]), [0.5, 0.25, 0, 0.25])
    g = generate("barbell", {"k": 5}, seed=2)
    pi = stationary_distribution(g)
    np.testing.assert_allclose(lazy_walk_step(g, pi), pi, atol=1e-12)


def test_endpoint_distribution_examples():
    np.testing.assert_array_equal(walk_endpoint_distribution(C4, 2, 0), [0, 0, 1, 0])
    np.testing.assert_allclose(walk_endpoint_distribution(K2, 0, 3), [0.5, 0.5])
    np.testing.assert_allclose(walk_endpoint_distribution(C4, 0, 2), [3 / 8, 1 / 4, 1 / 8, 1 / 4])


def test_discrepancy_examples():
    assert l2_discrepancy_squared(K2, 0, 1) == pytest.approx(0, abs=1e-15)
    for v in range(4):
        e = np.eye(4)[v] - stationary_distribution(STAR4)
        assert l2_discrepancy_squared(STAR4, v, 0) == pytest.approx(e @ e, abs=1e-15)
    b4 = generate("barbell", {"k": 4})
    bridge = next(v for v in range(b4.n) if b4.degree(v) == 4)
    assert abs(l2_discrepancy_squared(b4, bridge, 4) - l2_discrepancy_squared_direct(b4, bridge, 4)) <= 1e-12


def test_mixing_bound_examples():
    assert mixing_upper_bound(1, 1) == 0.5
    assert mixing_upper_bound(1, 0) == 1
    assert mixing_upper_bound(0.5, 10) == pytest.approx(0.26307, abs=1e-5)
    with pytest.raises(ValueError):
        mixing_upper_bound(0, 3)


def test_mixing_bound_fails_at_zero_steps_on_a_star():
    # ||e_leaf - pi|| exceeds 1 = (1 - phi^2/2)^0 on irregular graphs
    star6 = generate("star", {"leaves": 5})
    leaf = next(v for v in range(6) if star6.degree(v) == 1)
    assert math.sqrt(l2_discrepancy_squared(star6, leaf, 0)) == pytest.approx(math.sqrt(1.1))


def test_eigendecomposition_examples():
    dec = normalized_walk_eigendecomposition(K2)
    np.testing.assert_allclose(dec.eigenvalues, [1, 0], atol=1e-12)
    dec = normalized_walk_eigendecomposition(C4)
    expect = sorted(((1 + np.cos(2 * np.pi * k / 4)) / 2 for k in range(4)), reverse=True)
    np.testing.assert_allclose(dec.eigenvalues, expect, atol=1e-12)
    rr = generate("random_regular", {"n": 12, "d": 3}, seed=4)
    dec = normalized_walk_eigendecomposition(rr)
    np.testing.assert_allclose(dec.eigenvectors[:, 0], np.full(12, 1 / np.sqrt(12)), atol=1e-12)
    with pytest.raises(ValueError):
        normalized_walk_eigendecomposition(generate("disjoint_union", {"of": "complete", "base_n": 3}))


def test_eigendecomposition_size_cap(monkeypatch):
    import distcond.spectral as spectral

    monkeypatch.setattr(spectral, "EIGEN_MAX_N", 5)
    with pytest.raises(CapabilityError):
        spectral.normalized_walk_eigendecomposition(generate("cycle", {"n": 6}))


def test_decomposition_examples():
    assert walk_decomposition_residual(K2, 1) <= 1e-10
    assert walk_decomposition_residual(C4, 3) <= 1e-10
    assert walk_decomposition_residual(generate("barbell", {"k": 4}), 0) <= 1e-10


def test_weak_vertices_examples():
    assert weak_vertices(K2, 1, 1e-9) == frozenset()
    assert weak_vertices(generate("barbell", {"k": 6}), 2, 0.01)
    assert weak_vertices(generate("barbell", {"k": 6}), 3, 2) == frozenset()


def test_weak_set_examples():
    b5 = generate("barbell", {"k": 5})
    side = {v for v in range(5)}
    assert cut_stats(b5, side).cut_edges == 1
    rep = verify_weak_set_lemma(b5, side, 3, 0.1)
    assert rep.status == "success" and rep.witness
    assert rep.vol_witness >= 0.1 * rep.vol_set
    rep = verify_weak_set_lemma(C8, {0, 1, 2, 3}, 2, 0.1)
    assert rep.status == "non_binding"  # delta = 1/4 makes the bound vacuous
    rep = verify_weak_set_lemma(C8, {0, 1}, 2, 0.1)
    assert rep.success
    with pytest.raises(ValueError):
        verify_weak_set_lemma(C8, {0, 1}, 2, 0.5)
    with pytest.raises(ValueError):
        verify_weak_set_lemma(C8, set(range(6)), 2, 0.1)


def test_sparse_cut_partition_examples():
    assert sparse_cut_partition(generate("complete", {"n": 8}), 0.2).removed == frozenset()
    b4 = generate("barbell", {"k": 4})
    res = sparse_cut_partition(b4, 0.2)
    assert res.removed in ({0, 1, 2, 3}, {4, 5, 6, 7})
    two = generate("disjoint_union", {"of": "complete", "base_n": 4})
    res = sparse_cut_partition(two, 0.2)
    assert len(res.removed) == 4 and res.cut_edges == 0
    assert res.remainder_conductance == pytest.approx(2 / 3)
    with pytest.raises(CapabilityError):
        sparse_cut_partition(generate("cycle", {"n": 21}), 0.2)


def test_conductance_bounds_bracket_exact_value():
    g = generate("random_regular", {"n": 30, "d": 4}, seed=2)
    b = conductance_bounds(g)
    assert not b.exact and 0 < b.lower <= b.upper
    assert cut_stats(g, b.sweep_set).cut_edges / cut_stats(g, b.sweep_set).vol_s == pytest.approx(b.upper)
    small = generate("barbell", {"k": 4})
    assert conductance_bounds(small).exact


graphs = st.builds(
    lambda n, p, seed: generate("gnp", {"n": n, "p": p}, seed=seed),
    st.integers(3, 14),
    st.floats(0.25, 0.9),
    st.integers(0, 10**6),
).filter(lambda g: g.m > 0 and is_connected(g))


@settings(max_examples=40, deadline=None)
@given(graphs, st.integers(0, 40))
def test_summed_form_equals_direct_norm(g, steps):
    for v in range(g.n):
        assert abs(l2_discrepancy_squared(g, v, steps) - l2_discrepancy_squared_direct(g, v, steps)) <= 1e-12


@settings(max_examples=40, deadline=None)
@given(graphs)
def test_discrepancy_non_increasing(g):
    for v in range(g.n):
        prof = discrepancy_profile(g, v, 30)
        assert np.all(np.diff(prof) <= 1e-15)


@settings(max_examples=30, deadline=None)
@given(graphs, st.integers(0, 16))
def test_decomposition_residual_small(g, steps):
    assert walk_decomposition_residual(g, steps) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(graphs)
def test_spectral_invariants(g):
    dec = normalized_walk_eigendecomposition(g)
    assert dec.eigenvalues[0] == pytest.approx(1, abs=1e-12)
    assert np.all(dec.eigenvalues >= -1e-12)
    assert np.all(np.diff(dec.eigenvalues) <= 1e-15)
    np.testing.assert_allclose(dec.eigenvectors.T @ dec.eigenvectors, np.eye(g.n), atol=1e-10)
    np.testing.assert_allclose(dec.eigenvectors[:, 0], np.sqrt(stationary_distribution(g)), atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(graphs, st.floats(0.05, 0.6))
def test_partition_guarantee_exact(g, target):
    from fractions import Fraction

    res = sparse_cut_partition(g, target)
    st_ = cut_stats(g, res.removed)
    assert Fraction(st_.cut_edges) <= Fraction(target).limit_denominator(10**9) * st_.vol_s
    assert 2 * st_.vol_s <= 2 * g.m


@settings(max_examples=30, deadline=None)
@given(graphs)
def test_walk_columns_are_distributions(g):
    p = all_walk_distributions(g, 7)
    assert np.all(p >= -1e-12)
    np.testing.assert_allclose(p.sum(axis=0), 1, atol=1e-12)
