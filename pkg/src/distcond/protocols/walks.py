"""Per-source lazy random walk statistics, moved one step per round.

Each vertex keeps a table ``source index -> amount``: integer walk counts in
sampled mode, probability mass in exact mode. Every round it keeps half of
each amount and splits the other half evenly over its ports (exactly, or by a
multinomial draw), so after ``steps`` rounds the table at ``u`` holds the
number of walks from each source ending at ``u``.
"""
from __future__ import annotations

import math

import numpy as np

from ..congest import GeneratorProgram, VertexContext, run
from ..graph import Graph
from ..wire import Reader, Writer


def marking_probability(degree: int, m: int, eps: float, sample_scale: float) -> float:
    return min(1.0, sample_scale * degree / (2.0 * eps * m))


def sample_starts(g: Graph, eps: float, m: int, sample_scale: float, rng: np.random.Generator) -> frozenset[int]:
    """Mark every vertex independently with its marking probability."""
    p = np.array([marking_probability(d, m, eps, sample_scale) for d in g.degrees])
    return frozenset(int(v) for v in np.flatnonzero(rng.random(g.n) < p))


def encode_table(entries, exact: bool) -> bytes:
    w = Writer()
    for idx, amount in entries:
        w.uint(idx)
        if exact:
            w.f64(amount)
        else:
            w.uint(amount)
    return w.getvalue()


def decode_table(data: bytes, exact: bool):
    rd = Reader(data)
    while not rd.done:
        idx = rd.uint()
        yield idx, (rd.f64() if exact else rd.uint())


def lazy_walks(ctx: VertexContext, initial: dict[int, float | int], steps: int, exact: bool):
    """Generator fragment of exactly ``steps`` rounds; returns the final table.

    ``initial`` maps source index to the amount starting here (1.0 in exact
    mode, N walks in sampled mode, for each source this vertex owns).
    """
    deg = ctx.degree
    table = {k: v for k, v in initial.items() if v}
    if exact:
        zero = 0.0
    else:
        zero = 0
        probs = np.full(deg + 1, 0.5 / deg) if deg else np.ones(1)
        if deg:
            probs[0] = 0.5
    for _ in range(steps):
        per_port: list[list] = [[] for _ in range(deg)]
        kept = {}
        for idx in sorted(table):
            amount = table[idx]
            if deg == 0:
                kept[idx] = amount
                continue
            if exact:
                kept[idx] = amount / 2.0
                share = amount / (2.0 * deg)
                for lst in per_port:
                    lst.append((idx, share))
            else:
                draw = ctx.rng.multinomial(amount, probs)
                if draw[0]:
                    kept[idx] = int(draw[0])
                for p in range(deg):
                    if draw[p + 1]:
                        per_port[p].append((idx, int(draw[p + 1])))
        out = {p + 1: encode_table(lst, exact) for p, lst in enumerate(per_port) if lst}
        inbox = yield out
        table = kept
        for port in sorted(inbox):
            for idx, amount in decode_table(inbox[port], exact):
                table[idx] = table.get(idx, zero) + amount
    return table


def walk_message_bits(set_size: int, exact: bool, walk_count: int = 1) -> int:
    """Worst-case size of one walk message carrying every source."""
    idx_bytes = max(1, math.ceil(max(1, set_size - 1).bit_length() / 7))
    amount_bytes = 8 if exact else max(1, math.ceil(max(1, walk_count).bit_length() / 7))
    return 8 * set_size * (idx_bytes + amount_bytes)


def random_walk_phase(
    g: Graph,
    sources,
    steps: int,
    walk_count: int = 10**6,
    mode: str = "exact",
    seed: int = 0,
    reject_threshold: float | None = None,
):
    """Run the walk phase alone and return per-vertex estimates.

    Returns a dict with ``w_hat`` (|S| x n matrix of endpoint estimates),
    ``s`` (|S| x n per-endpoint squared deviations from pi), ``rejected``
    (vertices that saw a reached estimate at or below ``reject_threshold``),
    and the engine result.
    """
    if mode not in ("exact", "sampled"):
        raise ValueError("mode must be 'exact' or 'sampled'")
    if steps < 1:
        raise ValueError("walk phase needs at least one step")
    exact = mode == "exact"
    srcs = sorted(sources)
    index = {v: i for i, v in enumerate(srcs)}
    k = len(srcs)
    tables: list[dict] = [None] * g.n
    unit = 1.0 if exact else int(walk_count)

    def factory(v):
        def body(ctx):
            init = {index[ctx.vid]: unit} if ctx.vid in index else {}
            tables[ctx.vid] = yield from lazy_walks(ctx, init, steps, exact)
            return 1

        return GeneratorProgram(body)

    res = run(g, factory, max_rounds=steps + 1, seed=seed)
    w_hat = np.zeros((k, g.n))
    for u, t in enumerate(tables):
        for idx, amount in t.items():
            w_hat[idx, u] = amount if exact else amount / walk_count
    pi = g.degrees / (2.0 * g.m)
    s = (w_hat - pi[None, :]) ** 2
    rejected = frozenset()
    if reject_threshold is not None:
        reached = w_hat > 0
        rejected = frozenset(int(u) for u in np.flatnonzero((reached & (w_hat <= reject_threshold)).any(axis=0)))
    return {"w_hat": w_hat, "s": s, "rejected": rejected, "sources": srcs, "result": res}
