import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distcond.congest import GeneratorProgram, run
from distcond.graph import Graph, generate
from distcond.protocols.walks import lazy_walks, marking_probability, random_walk_phase, sample_starts
from distcond.spectral import all_walk_distributions, stationary_distribution

K2 = Graph.from_edges(2, [(0, 1)])


def test_marking_examples():
    g = generate("complete", {"n": 5})
    assert sample_starts(g, 0.5, g.m, 1e4, np.random.default_rng(0)) == frozenset(range(5))
    assert sample_starts(g, 0.5, g.m, 0, np.random.default_rng(0)) == frozenset()
    assert marking_probability(2, 8, 0.5, 1) == 0.25


def test_marking_frequency_on_c8():
    c8 = generate("cycle", {"n": 8})
    rng = np.random.default_rng(2024)
    hits = np.zeros(8)
    trials = 100_000
    for _ in range(trials // 1000):
        p = np.full((1000, 8), marking_probability(2, 8, 0.5, 1))
        hits += (rng.random((1000, 8)) < p).sum(axis=0)
    assert np.all(np.abs(hits / trials - 0.25) <= 0.01)
    # and through the marking routine itself
    freq = np.mean([len(sample_starts(c8, 0.5, 8, 1, np.random.default_rng(s))) for s in range(4000)]) / 8
    assert abs(freq - 0.25) <= 0.01


def test_exact_k2():
    out = random_walk_phase(K2, {0}, 1, mode="exact")
    np.testing.assert_allclose(out["w_hat"], [[0.5, 0.5]])
    np.testing.assert_allclose(out["s"], 0, atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 30), st.floats(0.2, 0.8), st.integers(0, 10**6), st.integers(1, 25))
def test_exact_mode_matches_oracle(n, p, seed, steps):
    g = generate("gnp", {"n": n, "p": p}, seed=seed)
    if g.m == 0:
        return
    sources = sorted(np.random.default_rng(seed).choice(n, size=min(n, 4), replace=False).tolist())
    out = random_walk_phase(g, sources, steps, mode="exact")
    oracle = all_walk_distributions(g, steps)[:, sources].T
    assert np.abs(out["w_hat"] - oracle).max() <= 1e-12
    pi = stationary_distribution(g)
    s_v = out["s"].sum(axis=1)
    direct = ((oracle - pi) ** 2).sum(axis=1)
    assert np.abs(s_v - direct).max() <= 1e-11


def test_sampled_k2_concentration():
    out = random_walk_phase(K2, {0}, 1, walk_count=10**6, mode="sampled", seed=5)
    assert np.abs(out["w_hat"] - 0.5).max() <= 5e-3


def counting_phase(g, sources, steps, walk_count, seed):
    """Walk phase that also records every intermediate table."""
    snaps = {}

    def body(ctx):
        init = {i: walk_count for i, v in enumerate(sources) if v == ctx.vid}
        gen = lazy_walks(ctx, init, steps, exact=False)
        out = next(gen)
        r = 0
        while True:
            inbox = yield out
            r += 1
            try:
                out = gen.send(inbox)
            except StopIteration as stop:
                snaps[(ctx.vid, r)] = dict(stop.value)
                return 1

    return run(g, lambda v: GeneratorProgram(body), steps + 2, seed=seed), snaps


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10**6), st.integers(1, 8))
def test_count_conservation(n, seed, steps):
    g = generate("gnp", {"n": n, "p": 0.6}, seed=seed)
    if g.m == 0:
        return
    sources = [0, n - 1]
    for t in range(1, steps + 1):
        res, snaps = counting_phase(g, sources, t, 1000, seed)
        for idx in range(2):
            assert sum(snaps[(v, t)].get(idx, 0) for v in range(n)) == 1000


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 20), st.integers(0, 10**6), st.floats(1e-6, 1e-2))
def test_error_propagation(n, seed, eta):
    # perturb exact tables by at most eta; s_v moves by at most 3 n eta max(1, norm)
    g = generate("gnp", {"n": n, "p": 0.5}, seed=seed)
    if g.m == 0:
        return
    rng = np.random.default_rng(seed)
    exact = random_walk_phase(g, {0}, 3, mode="exact")["w_hat"][0]
    pi = stationary_distribution(g)
    noisy = exact + rng.uniform(-eta, eta, size=n)
    s_true = ((exact - pi) ** 2).sum()
    s_noisy = ((noisy - pi) ** 2).sum()
    assert abs(s_noisy - s_true) <= 3 * n * eta * max(1.0, math.sqrt(s_true))


def test_bad_arguments():
    with pytest.raises(ValueError):
        random_walk_phase(K2, {0}, 0)
    with pytest.raises(ValueError):
        random_walk_phase(K2, {0}, 1, mode="other")
