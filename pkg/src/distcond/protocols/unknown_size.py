"""Computing n without knowing it: pipelined BFS exploration from every vertex.

Every vertex starts as the maintainer of its own exploration and floods
``EXPLORE(root, level)``; a vertex switches to any smaller root it hears about,
so one maintainer per component survives (the minimum id). A vertex at level
``l`` of root ``x`` adopts at round ``l`` and learns at round ``l + 1`` how
many of its edges leave the ball of radius ``l`` ("up" edges). Per-level
sums ``(vertices, volume, up edges)`` are convergecast on a fixed schedule:
the level-``i`` report leaves a level-``l`` vertex at round ``2i + 1 - l``, so
the maintainer holds the totals for level ``i`` at round ``2i + 1`` and
decides at round ``2i + 2``.

The maintainer grows its ball while ``cut / volume >= phi`` and then for
``ceil(ln(volume) / ln(1 / (1 - phi)))`` more levels. If the ball has no
outgoing edge it announces its size; if edges still leave at the last level
it announces a rejection. A vertex that switches roots sends ``POISON`` up its
old tree so the abandoned maintainer can never decide on a ball that was cut
short by a smaller competitor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..congest import SimulationResult, VertexContext, VertexProgram, run
from ..graph import Graph
from ..wire import Reader, Writer

EXPLORE, REPORT, POISON, DECIDE = range(4)


def extra_levels(volume: int, phi: float) -> int:
    """Levels needed after the ball passes half the volume."""
    if phi >= 1:
        return 0
    return math.ceil(math.log(volume) / -math.log1p(-phi))


class UnknownSizeProgram(VertexProgram):
    def __init__(self, phi: float):
        if not 0 < phi <= 1:
            raise ValueError("phi must lie in (0, 1]")
        self.phi = phi
        self.halted = False
        self.output = 0

    def init(self, ctx: VertexContext) -> None:
        self.ctx = ctx
        self.deg = ctx.degree
        self.estimate: int | None = None
        self.decided_by: int | None = None
        self.old_parents: dict[int, int | None] = {}
        self._adopt(ctx.vid, 0, None)
        self._fresh = True

    # -- per-root state ---------------------------------------------------

    def _adopt(self, root: int, level: int, parent: int | None) -> None:
        self.root = root
        self.level = level
        self.parent = parent
        self.seen_levels: dict[int, int] = {}
        self.children: set[int] = set()
        self.child_reports: dict[int, dict[int, tuple[int, int, int]]] = {}
        self.own: tuple[int, int, int] | None = None
        self.stalled = False
        # maintainer bookkeeping
        self.poisoned = False
        self.totals: dict[int, tuple[int, int, int]] = {}
        self.n_sum = 0
        self.vol_sum = 0
        self.phase_one = True
        self.final_level: int | None = None

    @property
    def is_maintainer(self) -> bool:
        return self.root == self.ctx.vid

    def snapshot(self):
        return (self.halted, self.output, self.root, self.level, self.parent, self.estimate)

    # -- protocol ------------------------------------------------------------

    def compute(self, r, inbox):
        records = []
        for port in sorted(inbox):
            rd = Reader(inbox[port])
            while not rd.done:
                tag = rd.uint()
                if tag == EXPLORE:
                    records.append((port, tag, rd.uint(), rd.uint(), rd.uint()))
                elif tag == REPORT:
                    records.append((port, tag, rd.uint(), rd.uint(), (rd.uint(), rd.uint(), rd.uint())))
                elif tag == POISON:
                    records.append((port, tag, rd.uint()))
                elif tag == DECIDE:
                    records.append((port, tag, rd.uint(), rd.uint()))
                else:
                    raise ValueError(f"unknown record tag {tag}")
        out: dict[int, Writer] = {}

        def send(port, *fields):
            w = out.setdefault(port, Writer())
            for f in fields:
                w.uint(f)

        # 1. switch to the smallest announced root, if it beats ours
        offers = [(rec[2], rec[3] + 1, rec[0]) for rec in records if rec[1] == EXPLORE and rec[2] < self.root]
        if offers:
            root, level, parent = min(offers)
            old_root, old_parent = self.root, self.parent
            if old_parent is not None:
                self.old_parents[old_root] = old_parent
                send(old_parent, POISON, old_root)
            self._adopt(root, level, parent)
            self._fresh = True
        if self._fresh:
            self._fresh = False
            for p in range(1, self.deg + 1):
                send(p, EXPLORE, self.root, self.level, int(p == self.parent))

        for rec in records:
            port, tag = rec[0], rec[1]
            if tag == EXPLORE and rec[2] == self.root:
                lvl = rec[3]
                self.seen_levels[port] = min(lvl, self.seen_levels.get(port, lvl))
                if rec[4] and lvl == self.level + 1:
                    self.children.add(port)
            elif tag == POISON:
                root = rec[2]
                if root == self.root:
                    if self.is_maintainer:
                        self.poisoned = True
                    else:
                        send(self.parent, POISON, root)
                elif self.old_parents.get(root) is not None:
                    send(self.old_parents[root], POISON, root)
            elif tag == REPORT and rec[2] == self.root:
                self.child_reports.setdefault(rec[3], {})[port] = rec[4]
            elif tag == DECIDE and rec[2] == self.root and port == self.parent:
                return self._finish(rec[3], self.children, out)

        # 2. scheduled report for level i leaves at round 2i + 1 - level
        if r >= self.level + 1 and (r + self.level - 1) % 2 == 0 and not self.stalled:
            i = (r + self.level - 1) // 2
            if i == self.level:
                up = self.deg - sum(1 for lv in self.seen_levels.values() if lv <= self.level)
                acc = (1, self.deg, up)
            else:
                got = self.child_reports.pop(i, {})
                if set(got) != self.children:
                    self.stalled = True
                    acc = None
                else:
                    acc = tuple(map(sum, zip((0, 0, 0), *got.values())))
            if acc is not None:
                if self.is_maintainer:
                    self.totals[i] = acc
                else:
                    send(self.parent, REPORT, self.root, i, *acc)

        # 3. the maintainer decides on level i one round after holding it
        if self.is_maintainer and r >= 2 and r % 2 == 0 and not self.poisoned and not self.stalled:
            i = r // 2 - 1
            if i in self.totals:
                outcome = self._judge(i, *self.totals.pop(i))
                if outcome is not None:
                    return self._finish(outcome, self.children, out)
        return {p: w.getvalue() for p, w in out.items()}

    def _judge(self, i, count, vol, cut):
        """Return ``n + 1`` to announce n, ``0`` to reject, ``None`` to go on."""
        self.n_sum += count
        self.vol_sum += vol
        if cut == 0:
            return self.n_sum + 1
        if self.phase_one and cut < self.phi * self.vol_sum:
            self.phase_one = False
            self.final_level = i + extra_levels(self.vol_sum, self.phi)
        if not self.phase_one and i >= self.final_level:
            return 0
        return None

    def _finish(self, outcome, children, out):
        for c in children:
            w = out.setdefault(c, Writer())
            w.uint(DECIDE).uint(self.root).uint(outcome)
        self.halted = True
        self.decided_by = self.root
        self.output = int(outcome > 0)
        self.estimate = outcome - 1 if outcome > 0 else None
        return {p: w.getvalue() for p, w in out.items()}


@dataclass
class SizeOutcome:
    n: int | None  # None means reject
    per_vertex: tuple[int | None, ...]
    maintainers: tuple[int, ...]
    rounds: int
    congestion: int
    timed_out: bool
    result: SimulationResult


def size_decision(estimates, maintainers, bits) -> int | None:
    """Global verdict: n only if every vertex accepted, all agree and one maintainer survived."""
    if not bits or not all(bits):
        return None
    if len(set(estimates)) != 1 or len(set(maintainers)) != 1:
        return None
    return estimates[0]


def unknown_size_explore(g: Graph, phi: float, seed: int = 0, max_rounds: int | None = None) -> SizeOutcome:
    """Run the exploration; ``n`` is the agreed size or ``None`` for reject."""
    cap = max_rounds if max_rounds is not None else 3 * g.n + 8
    res = run(g, lambda v: UnknownSizeProgram(phi), max_rounds=cap, seed=seed)
    progs = res.programs
    estimates = tuple(p.estimate for p in progs)
    roots = tuple(p.decided_by if p.decided_by is not None else p.root for p in progs)
    bits = [0 if res.timed_out else b for b in res.output_bits]
    n = size_decision(estimates, roots, bits)
    return SizeOutcome(n, estimates, tuple(sorted(set(roots))), res.rounds_executed, res.congestion, res.timed_out, res)


def round_budget(m: int, phi: float, constant: float) -> int:
    """``ceil(constant * ln m / ln(1 / (1 - phi)))``."""
    if phi >= 1:
        return math.ceil(constant * math.log(max(m, 2)))
    return math.ceil(constant * math.log(max(m, 2)) / -math.log1p(-phi))
