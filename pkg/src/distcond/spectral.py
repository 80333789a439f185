"""Exact linear-algebra ground truth for lazy random walks.

Distributions are column vectors indexed by vertex. The lazy walk operator
``W`` is column-stochastic: ``W[u, v] = 1/2`` if ``u == v`` and
``1 / (2 deg(v))`` if ``u ~ v``, so ``W^l e_v`` is the distribution of an
``l``-step lazy walk started at ``v``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

from .graph import (
    BRUTE_FORCE_MAX_N,
    CapabilityError,
    Graph,
    cut_stats,
    is_connected,
    min_conductance_cut,
    vertex_set,
    volume,
)

TOL = 1e-12
EIGEN_MAX_N = 2000
PARTITION_MAX_N = 20


def _require_edges(g: Graph) -> None:
    if g.m < 1:
        raise ValueError("graph has no edges; the stationary distribution is undefined")


def stationary_distribution(g: Graph) -> np.ndarray:
    """pi(v) = deg(v) / 2m."""
    _require_edges(g)
    return g.degrees / (2.0 * g.m)


def walk_operator(g: Graph) -> sp.csr_matrix:
    """Sparse lazy walk matrix W (column-stochastic)."""
    cache = g._cache
    if "walk" not in cache:
        src, dst = g.arcs()
        deg = g.degrees.astype(float)
        with np.errstate(divide="ignore"):
            inv = np.where(deg > 0, 0.5 / np.maximum(deg, 1), 0.0)
        diag = np.where(deg > 0, 0.5, 1.0)  # isolated vertices keep their mass
        rows = np.concatenate([dst, np.arange(g.n)])
        cols = np.concatenate([src, np.arange(g.n)])
        vals = np.concatenate([inv[src], diag])
        cache["walk"] = sp.csr_matrix((vals, (rows, cols)), shape=(g.n, g.n))
    return cache["walk"]


def lazy_walk_step(g: Graph, p: np.ndarray) -> np.ndarray:
    return walk_operator(g) @ np.asarray(p, dtype=float)


def walk_distributions(g: Graph, v: int, max_steps: int) -> np.ndarray:
    """Rows ``0..max_steps`` hold ``W^l e_v``."""
    if max_steps < 0:
        raise ValueError("steps must be nonnegative")
    w = walk_operator(g)
    out = np.empty((max_steps + 1, g.n))
    p = np.zeros(g.n)
    p[v] = 1.0
    out[0] = p
    for t in range(1, max_steps + 1):
        p = w @ p
        out[t] = p
    return out


def walk_endpoint_distribution(g: Graph, v: int, steps: int) -> np.ndarray:
    return walk_distributions(g, v, steps)[-1]


def all_walk_distributions(g: Graph, steps: int) -> np.ndarray:
    """Matrix whose column v is ``W^steps e_v``; built by repeated products."""
    w = walk_operator(g)
    p = np.eye(g.n)
    for _ in range(steps):
        p = w @ p
    return p


def discrepancy_terms(walk: np.ndarray, degrees: np.ndarray, m: int) -> np.ndarray:
    """Per-endpoint terms whose sum is ``||walk - pi||^2``.

    Each term is ``walk^2 - 2 walk d/2m + (d/2m)^2`` with the endpoint's degree.
    """
    pi = degrees / (2.0 * m)
    return walk * walk - 2.0 * walk * pi + pi * pi


def l2_discrepancy_squared(g: Graph, v: int, steps: int) -> float:
    """Summed form of ``||W^l e_v - pi||^2``."""
    walk = walk_endpoint_distribution(g, v, steps)
    return float(discrepancy_terms(walk, g.degrees, g.m).sum())


def l2_discrepancy_squared_direct(g: Graph, v: int, steps: int) -> float:
    diff = walk_endpoint_distribution(g, v, steps) - stationary_distribution(g)
    return float(diff @ diff)


def discrepancy_profile(g: Graph, v: int, max_steps: int) -> np.ndarray:
    """``||W^l e_v - pi||^2`` (summed form) for every ``l`` in ``0..max_steps``."""
    walks = walk_distributions(g, v, max_steps)
    return discrepancy_terms(walks, g.degrees[None, :], g.m).sum(axis=1)


def mixing_upper_bound(phi: float, steps: int) -> float:
    """(1 - phi^2/2)^steps."""
    if not 0 < phi <= 1:
        raise ValueError("phi must lie in (0, 1]")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    return (1.0 - phi * phi / 2.0) ** steps


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # column i is f_{i+1}
    degrees: np.ndarray

    @property
    def gap(self) -> float:
        return float(1.0 - self.eigenvalues[1]) if self.eigenvalues.size > 1 else 1.0


def normalized_walk_matrix(g: Graph) -> np.ndarray:
    """D^{-1/2} W D^{1/2} = I/2 + D^{-1/2} A D^{-1/2} / 2 (dense, symmetric)."""
    s = 1.0 / np.sqrt(g.degrees.astype(float))
    return 0.5 * np.eye(g.n) + 0.5 * s[:, None] * g.adjacency_matrix() * s[None, :]


def normalized_walk_eigendecomposition(g: Graph) -> SpectralDecomposition:
    if g.n > EIGEN_MAX_N:
        raise CapabilityError(f"dense eigensolve capped at n <= {EIGEN_MAX_N}, got {g.n}")
    if not is_connected(g) or g.m == 0:
        raise ValueError("eigendecomposition oracle needs a connected graph with edges")
    vals, vecs = np.linalg.eigh(normalized_walk_matrix(g))
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    if vecs[:, 0].sum() < 0:
        vecs[:, 0] = -vecs[:, 0]
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return SpectralDecomposition(vals, vecs, g.degrees.astype(float))


def walk_decomposition_residual(g: Graph, steps: int, dec: SpectralDecomposition | None = None) -> float:
    """Max over (u, v) of the error in

        P_steps(u -> v) / pi(v) = 1 + 2m * sum_{i>=2} mu_i^steps f_i(u) f_i(v) / sqrt(d(u) d(v)).

    The factor ``2m`` comes from ``f_1 = sqrt(pi)``; without it the identity
    fails already on K2 at zero steps.
    """
    dec = dec or normalized_walk_eigendecomposition(g)
    pi = stationary_distribution(g)
    transition = all_walk_distributions(g, steps)  # column u = distribution from u
    lhs = transition.T / pi[None, :]  # [u, v]
    f = dec.eigenvectors[:, 1:]
    mu = dec.eigenvalues[1:] ** steps
    s = 1.0 / np.sqrt(dec.degrees)
    rhs = 1.0 + 2.0 * g.m * (s[:, None] * (f * mu) @ f.T * s[None, :])
    return float(np.abs(lhs - rhs).max())


verify_walk_decomposition = walk_decomposition_residual


def weak_vertices(g: Graph, steps: int, threshold: float) -> frozenset[int]:
    """Vertices whose walk distribution stays farther than ``threshold`` (L2) from pi."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    walks = all_walk_distributions(g, steps)
    sq = discrepancy_terms(walks, g.degrees[:, None], g.m).sum(axis=0)
    return frozenset(int(v) for v in np.flatnonzero(np.sqrt(np.maximum(sq, 0)) > threshold))


@dataclass
class WeakSetReport:
    status: str  # "success" | "failure" | "non_binding"
    witness: frozenset[int]
    delta: float
    log_bound: float  # natural log of the per-vertex lower bound; -inf when non-binding
    vol_witness: int
    vol_set: int
    discrepancies: dict[int, float] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.status in ("success", "non_binding")


def weak_set_log_bound(m: int, delta: float, steps: int) -> float:
    """log of (1 / (80 m^7)) (1 - 4 delta)^(2 steps); -inf when the base is not positive."""
    base = 1.0 - 4.0 * delta
    if base <= 0:
        return -math.inf if steps > 0 else -math.log(80) - 7 * math.log(m)
    return -math.log(80) - 7 * math.log(m) + 2 * steps * math.log(base)


def verify_weak_set_lemma(g: Graph, s, steps: int, theta: float = 0.1, sq: np.ndarray | None = None) -> WeakSetReport:
    """Search for T inside s with vol(T) >= theta vol(s) of strongly unmixed vertices.

    Vertices of ``s`` are taken greedily in order of decreasing discrepancy;
    the witness is the shortest prefix whose volume reaches ``theta vol(s)``
    and succeeds iff all of its members exceed the bound. ``sq`` may carry
    precomputed squared discrepancies for every vertex.
    """
    members = vertex_set(g, s)
    if not 0 < theta <= 0.1:
        raise ValueError("theta must lie in (0, 1/10]")
    st = cut_stats(g, members)
    if st.vol_s <= 0 or st.vol_s > st.vol_complement:
        raise ValueError("need 0 < vol(s) <= vol(complement)")
    delta = st.cut_edges / st.vol_s
    if sq is None:
        walks = all_walk_distributions(g, steps)
        sq = discrepancy_terms(walks, g.degrees[:, None], g.m).sum(axis=0)
    disc = {v: float(sq[v]) for v in members}
    if delta >= 0.25:
        return WeakSetReport("non_binding", members, delta, -math.inf, st.vol_s, st.vol_s, disc)
    log_bound = weak_set_log_bound(g.m, delta, steps)
    order = sorted(members, key=lambda v: (-disc[v], v))
    need = theta * st.vol_s
    picked, vol = [], 0
    for v in order:
        picked.append(v)
        vol += g.degree(v)
        if vol >= need:
            break
    ok = all(disc[v] > 0 and math.log(disc[v]) > log_bound for v in picked)
    return WeakSetReport("success" if ok else "failure", frozenset(picked), delta, log_bound, vol, st.vol_s, disc)


@dataclass
class PartitionResult:
    removed: frozenset[int]
    remainder_conductance: float
    pieces: list[frozenset[int]]
    cut_edges: int
    vol_removed: int


def sparse_cut_partition(g: Graph, phi_target: float) -> PartitionResult:
    """Peel off sparse cuts until the remainder has none or balance would break.

    Each round brute-forces the sparsest cut of the induced subgraph on the
    remainder. A piece is accepted only when its cut ratio (inside the
    remainder) is at most ``phi_target`` and the accumulated removed set still
    has at most half the volume of ``g``. The returned set always satisfies
    ``|E(P, P-bar)| <= phi_target vol(P)`` exactly.
    """
    if g.n > PARTITION_MAX_N:
        raise CapabilityError(f"sparse_cut_partition capped at n <= {PARTITION_MAX_N}, got {g.n}")
    target = Fraction(phi_target).limit_denominator(10**9) if not isinstance(phi_target, Fraction) else phi_target
    total = 2 * g.m
    removed: set[int] = set()
    pieces: list[frozenset[int]] = []
    while True:
        rest = [v for v in range(g.n) if v not in removed]
        if len(rest) < 2:
            break
        sub, labels = g.induced_subgraph(rest)
        if sub.m == 0:
            break
        _, side = min_conductance_cut(sub)
        piece = frozenset(labels[i] for i in side)
        inner = cut_stats(sub, side)
        if Fraction(inner.cut_edges, inner.vol_s) > target:
            break
        candidate = removed | piece
        if 2 * volume(g, candidate) > total:
            break
        if Fraction(cut_stats(g, candidate).cut_edges) > target * volume(g, candidate):
            break
        removed = candidate
        pieces.append(piece)
    rest = [v for v in range(g.n) if v not in removed]
    if len(rest) >= 2:
        sub, _ = g.induced_subgraph(rest)
        rem_phi = min_conductance_cut(sub)[0] if sub.m > 0 else 0.0
    else:
        rem_phi = 0.0
    st = cut_stats(g, removed)
    return PartitionResult(frozenset(removed), rem_phi, pieces, st.cut_edges, st.vol_s)


@dataclass(frozen=True)
class ConductanceBounds:
    lower: float
    upper: float
    sweep_set: frozenset[int]
    exact: bool


def conductance_bounds(g: Graph) -> ConductanceBounds:
    """Certified interval for the conductance.

    Exact for n <= 24. Otherwise the lower bound ``1 - mu_2`` follows from
    Cheeger's inequality for the normalized Laplacian (its second eigenvalue is
    ``2 (1 - mu_2)``), and the upper bound is the best Fiedler sweep cut.
    """
    if g.n <= BRUTE_FORCE_MAX_N:
        phi, side = min_conductance_cut(g)
        return ConductanceBounds(phi, phi, side, True)
    if not is_connected(g):
        return ConductanceBounds(0.0, 0.0, frozenset(), True)
    dec = normalized_walk_eigendecomposition(g)
    lower = max(0.0, 1.0 - float(dec.eigenvalues[1]))
    order = np.argsort(dec.eigenvectors[:, 1] / np.sqrt(dec.degrees))
    best, best_set = math.inf, frozenset()
    inside: set[int] = set()
    for v in order[:-1]:
        inside.add(int(v))
        st = cut_stats(g, inside)
        small = min(st.vol_s, st.vol_complement)
        if small and st.cut_edges / small < best:
            best = st.cut_edges / small
            best_set = frozenset(inside) if st.vol_s <= st.vol_complement else frozenset(range(g.n)) - inside
    return ConductanceBounds(lower, best, best_set, False)
