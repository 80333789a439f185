"""The distributed conductance tester as a single vertex program.

Phase schedule (identical at every vertex, so all vertices stay in lockstep):

1. BFS election by min-id flooding (``bfs_depth + 1`` rounds).
2. Aggregate ``(1, deg)`` over the tree: vertex count and ``2m``.
3. Mark a random start set and gather ``(|S|, smallest ids)`` over the tree.
4. Lazy walks from every start, one step per round (``walk_length`` rounds).
5. Aggregate the per-source discrepancy vector and compare with the
   acceptance threshold in log space.

Any vertex that rejects outputs 0 and halts at once; the global AND then
rejects without extra rounds.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ..congest import (
    DEFAULT_LANES,
    CongestionViolation,
    GeneratorProgram,
    VertexContext,
    run,
)
from ..graph import Graph
from ..wire import Reader, Writer
from .aggregate import decode_floats, encode_floats, tree_reduce
from .bfs import bfs_tree
from .walks import lazy_walks, marking_probability, walk_message_bits

REASONS = (
    "none",
    "bfs_incomplete",
    "sample_too_large",
    "endpoint_too_small",
    "discrepancy_large",
    "timeout",
)
# vertices whose aggregation stalled because a neighbor stopped report this
# locally; it never outranks a substantive reason
_STALLED = "aggregate_stalled"
_PRECEDENCE = {r: i for i, r in enumerate(["bfs_incomplete", "sample_too_large", "endpoint_too_small", "discrepancy_large", _STALLED])}

ACCEPT_RULES = ("paper", "mixing", "mixing+hoeffding")


@dataclass(frozen=True)
class TesterConfig:
    """All tunable constants of the tester.

    ``reject_threshold=None`` means ``2 / m^2`` (evaluated at run time once
    ``m`` is known). ``accept_log_threshold=None`` means the value given by
    ``accept_rule``: ``paper`` is ``-15 ln m``, ``mixing`` is
    ``2 l ln(1 - phi^2 / 2)``, ``mixing+hoeffding`` adds a sampling slack of
    ``3 n sqrt(ln(200) / (2 N))`` before taking the log.
    ``congest_lanes=None`` picks the smallest ``c >= 64`` whose budget fits a
    walk message carrying ``set_cap`` sources.
    """

    phi: float
    eps: float
    bfs_depth: int
    aggregate_depth: int
    walk_length: int
    walk_count: int = 10**6
    sample_scale: float = 1.0
    set_cap: int = 20
    reject_threshold: float | None = None
    accept_log_threshold: float | None = None
    accept_rule: str = "mixing"
    mode: str = "exact"
    seed: int = 0
    congest_lanes: int | None = None

    __test__ = False  # name starts with "Test"; not a pytest class

    def __post_init__(self):
        if not 0 < self.phi <= 1:
            raise ValueError("phi must lie in (0, 1]")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        for name in ("bfs_depth", "aggregate_depth", "walk_length", "walk_count", "set_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.sample_scale < 0:
            raise ValueError("sample_scale must be nonnegative")
        if self.reject_threshold is not None and self.reject_threshold <= 0:
            raise ValueError("reject_threshold must be positive")
        if self.mode not in ("exact", "sampled"):
            raise ValueError("mode must be 'exact' or 'sampled'")
        if self.accept_rule not in ACCEPT_RULES:
            raise ValueError(f"accept_rule must be one of {ACCEPT_RULES}")

    @classmethod
    def paper(cls, n: int, phi: float, eps: float, **kw) -> TesterConfig:
        """Asymptotic constants; only meaningful in exact mode."""
        _check_phi(phi)
        ln = math.log(max(n, 2))
        base = dict(
            phi=phi,
            eps=eps,
            bfs_depth=math.ceil(6 / phi * ln),
            aggregate_depth=math.ceil(12 / phi * ln),
            walk_length=math.ceil(40 / phi**2 * ln),
            walk_count=max(n, 2) ** 100,
            sample_scale=1e4,
            set_cap=math.ceil(1e5 / eps),
            accept_rule="paper",
        )
        base.update(kw)
        return cls(**base)

    @classmethod
    def desk(cls, n: int, phi: float, eps: float = 0.5, mode: str = "exact", **kw) -> TesterConfig:
        """Constants scaled so both modes finish in seconds at n in the hundreds."""
        _check_phi(phi)
        ln = math.log(max(n, 2))
        depth = math.ceil(6 / phi * ln)
        base = dict(
            phi=phi,
            eps=eps,
            bfs_depth=depth,
            aggregate_depth=depth,
            walk_length=math.ceil(4 / phi**2 * ln),
            walk_count=10**6,
            sample_scale=1.0,
            set_cap=math.ceil(10 / eps),
            accept_rule="mixing" if mode == "exact" else "mixing+hoeffding",
            mode=mode,
        )
        base.update(kw)
        return cls(**base)

    def with_(self, **kw) -> TesterConfig:
        return replace(self, **kw)

    def schedule_rounds(self) -> int:
        """Rounds used by a run that reaches the final verdict."""
        return self.bfs_depth + 1 + 3 * 2 * self.aggregate_depth + self.walk_length + 1

    def log_accept_threshold(self, n: int, m: int) -> float:
        if self.accept_log_threshold is not None:
            return self.accept_log_threshold
        if self.accept_rule == "paper":
            return -15.0 * math.log(m)
        mix = 2 * self.walk_length * math.log1p(-self.phi**2 / 2)
        if self.accept_rule == "mixing":
            return mix
        slack = 3.0 * n * math.sqrt(math.log(200) / (2.0 * self.walk_count))
        return math.log(math.exp(mix) + slack)

    def resolved_reject_threshold(self, m: int) -> float:
        return self.reject_threshold if self.reject_threshold is not None else 2.0 / m**2

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name}={'none' if v is None else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> TesterConfig:
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or key not in types:
                raise ValueError(f"bad config line {raw!r}")
            kw[key] = _parse_value(types[key], val)
        return cls(**kw)


def _check_phi(phi: float) -> None:
    if not 0 < phi <= 1:
        raise ValueError("phi must lie in (0, 1]")


def _parse_value(type_name: str, val: str):
    if val.lower() == "none":
        return None
    if type_name.startswith("int"):
        return int(float(val)) if "e" in val.lower() and "." not in val else int(val)
    if type_name.startswith("float"):
        return float(val)
    return val


@dataclass
class TestVerdict:
    decision: int
    reject_reason: str
    rounds: int
    congestion: int
    budget_bits: int
    sample_size: int | None
    log_s: tuple[float, ...]
    sources: tuple[int, ...]
    output_bits: tuple[int, ...]
    timed_out: bool = False
    violations: int = 0

    __test__ = False  # keep pytest from collecting this class

    def as_dict(self) -> dict:
        return asdict(self)


def _encode_gather(value) -> bytes:
    count, ids = value
    return Writer().uint(count).uints(ids).getvalue()


def _decode_gather(data: bytes):
    rd = Reader(data)
    return rd.uint(), rd.uints()


def tester_body(cfg: TesterConfig):
    exact = cfg.mode == "exact"
    A = cfg.aggregate_depth

    def body(ctx: VertexContext):
        st = ctx.state
        n = int(ctx.inputs["n"])

        def reject(reason):
            st["reason"] = reason
            return 0

        tree = yield from bfs_tree(ctx, cfg.bfs_depth)
        st["root"] = tree.root
        if not tree.consistent:
            return reject("bfs_incomplete")

        counts = yield from tree_reduce(tree, [1, ctx.degree], A)
        if counts is None:
            return reject(_STALLED)
        if counts[0] != n:
            return reject("bfs_incomplete")
        m = counts[1] // 2

        marked = ctx.rng.random() < marking_probability(ctx.degree, m, cfg.eps, cfg.sample_scale)
        cap = cfg.set_cap

        def merge(a, b):
            return a[0] + b[0], sorted(a[1] + b[1])[: cap + 1]

        gathered = yield from tree_reduce(
            tree, (int(marked), [ctx.vid] if marked else []), A, merge, _encode_gather, _decode_gather
        )
        if gathered is None:
            return reject(_STALLED)
        size, ids = gathered
        st["sample_size"] = size
        if size > cap:
            return reject("sample_too_large")
        if size == 0:
            st["reason"] = "none"
            return 1
        st["sources"] = tuple(ids)
        index = {v: i for i, v in enumerate(ids)}
        unit = 1.0 if exact else int(cfg.walk_count)
        init = {index[ctx.vid]: unit} if ctx.vid in index else {}
        table = yield from lazy_walks(ctx, init, cfg.walk_length, exact)

        w_hat = np.zeros(size)
        for idx, amount in table.items():
            w_hat[idx] = amount if exact else amount / cfg.walk_count
        st["w_hat"] = w_hat
        floor = cfg.resolved_reject_threshold(m)
        if np.any((w_hat > 0) & (w_hat <= floor)):
            return reject("endpoint_too_small")
        pi_u = ctx.degree / (2.0 * m)
        s_local = (w_hat - pi_u) ** 2

        total = yield from tree_reduce(tree, s_local, A, np.add, encode_floats, decode_floats)
        if total is None:
            return reject(_STALLED)
        with np.errstate(divide="ignore"):
            log_s = np.log(total)
        st["log_s"] = tuple(float(x) for x in log_s)
        if np.any(log_s > cfg.log_accept_threshold(n, m)):
            return reject("discrepancy_large")
        st["reason"] = "none"
        return 1

    return body


def lanes_needed(cfg: TesterConfig, n: int, m: int) -> int:
    """Smallest lane count (at least the default) whose budget fits every message kind."""
    word = max(1, math.ceil(math.log2(max(2, n + m))))
    cap = cfg.set_cap
    walk = walk_message_bits(cap, cfg.mode == "exact", cfg.walk_count)
    s_vector = 8 * (1 + 8 * cap)
    id_bytes = max(1, math.ceil(max(1, n - 1).bit_length() / 7))
    gather = 8 * (1 + 2 * max(1, math.ceil((n + 1).bit_length() / 7)) + (cap + 1) * id_bytes)
    need = max(walk, s_vector, gather)
    return max(DEFAULT_LANES, math.ceil(need / word))


def budget_for(cfg: TesterConfig, g: Graph) -> int:
    lanes = cfg.congest_lanes or lanes_needed(cfg, g.n, g.m)
    return lanes * max(1, math.ceil(math.log2(max(2, g.n + g.m))))


def test_conductance(
    g: Graph,
    cfg: TesterConfig,
    declared_n: int | None = None,
    strict: bool = False,
    keep_states: bool = False,
):
    """Run the tester on ``g`` and summarize the outcome.

    ``declared_n`` is the vertex count written into every input (defaults to
    ``g.n``). In strict mode an over-budget message raises
    ``CongestionViolation``.
    """
    n = g.n if declared_n is None else int(declared_n)
    budget = budget_for(cfg, g)
    body = tester_body(cfg)
    res = run(
        g,
        lambda v: GeneratorProgram(body),
        max_rounds=cfg.schedule_rounds() + 1,
        budget_bits=budget,
        mode="strict" if strict else "record",
        seed=cfg.seed,
        inputs=lambda v: {"n": n},
    )
    states = [p.state for p in res.programs]
    if res.timed_out:
        reason = "timeout"
    else:
        reasons = {s.get("reason") for s in states} - {None, "none"}
        if not reasons:
            reason = "none"
        else:
            worst = min(reasons, key=_PRECEDENCE.__getitem__)
            reason = "bfs_incomplete" if worst == _STALLED else worst
    sizes = [s["sample_size"] for s in states if "sample_size" in s]
    log_s = next((s["log_s"] for s in states if "log_s" in s), ())
    sources = next((s["sources"] for s in states if "sources" in s), ())
    verdict = TestVerdict(
        decision=0 if res.timed_out else int(res.decision),
        reject_reason=reason,
        rounds=res.rounds_executed,
        congestion=res.congestion,
        budget_bits=budget,
        sample_size=sizes[0] if sizes else None,
        log_s=tuple(log_s),
        sources=tuple(sources),
        output_bits=tuple(res.output_bits),
        timed_out=res.timed_out,
        violations=len(res.violations),
    )
    if keep_states:
        return verdict, states
    return verdict


test_conductance.__test__ = False

__all__ = [
    "REASONS",
    "TesterConfig",
    "TestVerdict",
    "CongestionViolation",
    "tester_body",
    "test_conductance",
    "budget_for",
    "lanes_needed",
]
