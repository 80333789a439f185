"""Oracle verification battery run by ``distcond oracle``."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import spectral
from .graph import BRUTE_FORCE_MAX_N, Graph, cut_stats, is_connected, min_conductance_cut


@dataclass
class CheckResult:
    name: str
    status: str  # pass | fail | skip
    value: float | None
    detail: str

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def identity_check(g: Graph, steps: int, tol: float = 1e-12) -> CheckResult:
    worst = 0.0
    pi = spectral.stationary_distribution(g)
    for v in range(g.n):
        walk = spectral.walk_endpoint_distribution(g, v, steps)
        summed = spectral.discrepancy_terms(walk, g.degrees, g.m).sum()
        direct = float((walk - pi) @ (walk - pi))
        worst = max(worst, abs(summed - direct))
    return CheckResult("identity", "pass" if worst <= tol else "fail", worst, f"max |summed - direct| over vertices, tol {tol:g}")


def decomposition_check(g: Graph, steps: int, tol: float = 1e-9) -> CheckResult:
    if not is_connected(g):
        return CheckResult("decomposition", "skip", None, "graph is disconnected")
    if g.n > spectral.EIGEN_MAX_N:
        return CheckResult("decomposition", "skip", None, f"n > {spectral.EIGEN_MAX_N}")
    res = spectral.walk_decomposition_residual(g, steps)
    return CheckResult("decomposition", "pass" if res <= tol else "fail", res, f"max residual, tol {tol:g}")


def mixing_check(g: Graph, steps: int, phi: float | None = None, tol: float = 1e-12) -> CheckResult:
    if phi is None:
        if g.n > BRUTE_FORCE_MAX_N:
            return CheckResult("mixing", "skip", None, f"n > {BRUTE_FORCE_MAX_N} for exact conductance")
        if g.n < 2 or not is_connected(g):
            return CheckResult("mixing", "skip", None, "needs a connected graph with n >= 2")
        phi = min_conductance_cut(g)[0]
    bound = spectral.mixing_upper_bound(phi, steps)
    walks = spectral.all_walk_distributions(g, steps)
    pi = spectral.stationary_distribution(g)
    norms = np.linalg.norm(walks - pi[:, None], axis=0)
    excess = float(norms.max() - bound)
    return CheckResult("mixing", "pass" if excess <= tol else "fail", excess, f"max norm minus bound {bound:.6g} (phi={phi:.6g})")


def weak_set_check(g: Graph, steps: int, theta: float = 0.1) -> CheckResult:
    if g.n > BRUTE_FORCE_MAX_N or g.n < 2:
        return CheckResult("weak_set", "skip", None, "needs 2 <= n <= 24")
    _, side = min_conductance_cut(g)
    rep = spectral.verify_weak_set_lemma(g, side, steps, theta)
    return CheckResult(
        "weak_set",
        "pass" if rep.success else "fail",
        float(rep.vol_witness),
        f"{rep.status}: |T|={len(rep.witness)} vol(T)={rep.vol_witness} of vol(S)={rep.vol_set}, delta={rep.delta:.4g}",
    )


def partition_check(g: Graph, phi_target: float) -> CheckResult:
    if g.n > spectral.PARTITION_MAX_N or g.n < 2:
        return CheckResult("partition", "skip", None, f"needs 2 <= n <= {spectral.PARTITION_MAX_N}")
    res = spectral.sparse_cut_partition(g, phi_target)
    target = Fraction(phi_target).limit_denominator(10**9)
    st = cut_stats(g, res.removed)
    ok = Fraction(st.cut_edges) <= target * st.vol_s
    return CheckResult(
        "partition",
        "pass" if ok else "fail",
        res.remainder_conductance,
        f"|P|={len(res.removed)} cut={st.cut_edges} vol(P)={st.vol_s} remainder conductance={res.remainder_conductance:.4g}",
    )


def run_battery(g: Graph, steps: int, phi_target: float = 0.2) -> list[CheckResult]:
    if g.m == 0:
        return [CheckResult("all", "skip", None, "graph has no edges")]
    return [
        identity_check(g, steps),
        decomposition_check(g, steps),
        mixing_check(g, steps),
        weak_set_check(g, steps),
        partition_check(g, phi_target),
    ]
