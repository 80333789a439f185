"""Convergecast up a BFS tree followed by a broadcast of the root's total."""
from __future__ import annotations

from collections.abc import Callable
from typing import Any

import numpy as np

from ..congest import GeneratorProgram, run
from ..graph import Graph
from ..wire import Reader, Writer
from .bfs import BfsState


def encode_ints(values) -> bytes:
    w = Writer()
    for x in values:
        w.sint(int(x))
    return w.getvalue()


def decode_ints(data: bytes) -> list[int]:
    rd = Reader(data)
    out = []
    while not rd.done:
        out.append(rd.sint())
    return out


def encode_floats(values) -> bytes:
    w = Writer()
    for x in np.atleast_1d(values):
        w.f64(x)
    return w.getvalue()


def decode_floats(data: bytes) -> np.ndarray:
    rd = Reader(data)
    out = []
    while not rd.done:
        out.append(rd.f64())
    return np.array(out)


def int_sum(a, b):
    return [x + y for x, y in zip(a, b)]


def tree_reduce(
    tree: BfsState,
    value: Any,
    depth: int,
    combine: Callable[[Any, Any], Any] = int_sum,
    encode: Callable[[Any], bytes] = encode_ints,
    decode: Callable[[bytes], Any] = decode_ints,
):
    """Generator fragment of exactly ``2 * depth`` rounds.

    A vertex sends its combined subtree value to its parent as soon as every
    child has reported. The root adopts the total once all children reported
    and pushes it down; every vertex forwards the total to its children.
    Returns the total, or ``None`` when it did not arrive in time (a tree
    deeper than ``depth`` or a child that stopped participating).
    """
    pending = set(tree.children)
    acc = value
    sent_up = False
    total = None
    forwarded = False
    for _ in range(2 * depth):
        out = {}
        if not sent_up and not pending:
            sent_up = True
            if tree.is_root:
                total = acc
            else:
                out[tree.parent_port] = b"\x00" + encode(acc)
        if total is not None and not forwarded:
            forwarded = True
            payload = b"\x01" + encode(total)
            for c in tree.children:
                out[c] = payload
        inbox = yield out
        for port, data in inbox.items():
            if data[:1] == b"\x00" and port in pending:
                pending.discard(port)
                acc = combine(acc, decode(data[1:]))
            elif data[:1] == b"\x01" and port == tree.parent_port and total is None:
                total = decode(data[1:])
    return total


def aggregate_sum(g: Graph, trees: list[BfsState], values, depth: int, seed: int = 0, max_rounds: int | None = None):
    """Sum integer ``values`` (scalar or vector per vertex) over each BFS tree.

    Returns ``(totals, result)``; ``totals[v]`` is ``None`` where the
    aggregation stalled. A stalled vertex never halts, so the engine reports a
    timeout.
    """
    totals: list[Any] = [None] * g.n

    def factory(v):
        def body(ctx):
            val = values[ctx.vid]
            scalar = np.isscalar(val)
            got = yield from tree_reduce(trees[ctx.vid], [val] if scalar else list(val), depth)
            if got is None:
                while True:
                    yield {}
            totals[ctx.vid] = got[0] if scalar else got
            return 1

        return GeneratorProgram(body)

    res = run(g, factory, max_rounds=max_rounds or 2 * depth + 1, seed=seed)
    return totals, res
