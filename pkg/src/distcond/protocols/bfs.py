"""Min-id flooding that builds a BFS tree rooted at the smallest id."""
from __future__ import annotations

from dataclasses import dataclass

from ..congest import GeneratorProgram, VertexContext, run
from ..graph import Graph
from ..wire import Reader, Writer


@dataclass
class BfsState:
    root: int
    parent_port: int | None
    children: tuple[int, ...]
    level: int
    consistent: bool  # parent agrees on the root (or this vertex is its own root)

    @property
    def is_root(self) -> bool:
        return self.parent_port is None


def _announce(root: int, level: int) -> bytes:
    return Writer().uint(root).uint(level).getvalue()


def bfs_tree(ctx: VertexContext, depth: int):
    """Generator body fragment: ``depth + 1`` rounds, returns a ``BfsState``.

    Rounds ``0..depth-1`` flood the smallest id seen so far together with the
    hop count; a vertex forwards only when its root improves, so information
    travels exactly ``depth`` hops. The extra round tells every neighbor which
    root this vertex adopted and whether that neighbor is its parent.
    """
    if depth < 1:
        raise ValueError("BFS depth must be at least 1")
    ports = range(1, ctx.degree + 1)
    root, level, parent = ctx.vid, 0, None
    out = {p: _announce(root, level) for p in ports}
    for step in range(depth):
        inbox = yield out
        out = {}
        best = None
        for port in sorted(inbox):
            rd = Reader(inbox[port])
            cand = (rd.uint(), rd.uint() + 1, port)
            if best is None or cand < best:
                best = cand
        if best is not None and best[0] < root:
            root, level, parent = best
            if step < depth - 1:
                out = {p: _announce(root, level) for p in ports}
    notify = {p: Writer().uint(root).uint(int(p == parent)).getvalue() for p in ports}
    inbox = yield notify
    children = []
    parent_root = None
    for port in sorted(inbox):
        rd = Reader(inbox[port])
        their_root, flag = rd.uint(), rd.uint()
        if flag and their_root == root:
            children.append(port)
        if port == parent:
            parent_root = their_root
    consistent = parent is None and root == ctx.vid or parent is not None and parent_root == root
    return BfsState(root, parent, tuple(children), level, consistent)


def bfs_elect(g: Graph, depth: int, seed: int = 0) -> list[BfsState]:
    """Run BFS election alone and return every vertex's state."""
    states: list[BfsState | None] = [None] * g.n

    def factory(v):
        def body(ctx):
            states[ctx.vid] = yield from bfs_tree(ctx, depth)
            return 1

        return GeneratorProgram(body)

    run(g, factory, max_rounds=depth + 2, seed=seed)
    return states
