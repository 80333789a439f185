"""Port-numbered undirected graphs and exact combinatorial quantities.

Vertices are the integers ``0..n-1``. Every vertex ``v`` owns ports
``1..deg(v)``; port ``i`` of ``v`` leads to ``g.neighbors(v)[i - 1]``.
"""
from __future__ import annotations

import math
from collections import deque
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "CapabilityError",
    "CutStats",
    "Graph",
    "BRUTE_FORCE_MAX_N",
    "vertex_set",
    "volume",
    "cut_stats",
    "set_conductance",
    "min_conductance_cut",
    "graph_conductance_bruteforce",
    "diameter",
    "is_connected",
    "components",
    "generate",
    "GENERATORS",
    "read_edgelist",
    "write_edgelist",
    "format_edgelist",
    "parse_edgelist",
]

BRUTE_FORCE_MAX_N = 24


class CapabilityError(RuntimeError):
    """Raised when an exact computation is asked to run past its size cap."""


class Graph:
    """Immutable simple undirected graph with per-vertex port numbering."""

    __slots__ = ("n", "_ports", "_rev", "_deg", "_m", "__weakref__", "_cache")

    def __init__(self, ports: Sequence[Sequence[int]]):
        n = len(ports)
        adj = [tuple(int(u) for u in row) for row in ports]
        for v, row in enumerate(adj):
            if len(set(row)) != len(row):
                raise ValueError(f"parallel edge at vertex {v}")
            for u in row:
                if not 0 <= u < n:
                    raise ValueError(f"neighbor {u} of vertex {v} out of range")
                if u == v:
                    raise ValueError(f"self-loop at vertex {v}")
        index = [{u: i for i, u in enumerate(row)} for row in adj]
        rev = []
        for v, row in enumerate(adj):
            back = []
            for u in row:
                j = index[u].get(v)
                if j is None:
                    raise ValueError(f"asymmetric adjacency: {v} lists {u} but not vice versa")
                back.append(j + 1)
            rev.append(tuple(back))
        self.n = n
        self._ports = tuple(adj)
        self._rev = tuple(rev)
        self._deg = np.array([len(r) for r in adj], dtype=np.int64)
        self._deg.setflags(write=False)
        self._m = int(self._deg.sum()) // 2
        self._cache: dict = {}

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        seed: int | None = None,
    ) -> Graph:
        """Build a graph from an edge list.

        Port order is ascending neighbor id unless ``seed`` is given, in which
        case every vertex gets an independent uniformly random port order.
        """
        if n < 0:
            raise ValueError("n must be nonnegative")
        adj: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if v in adj[u]:
                raise ValueError(f"parallel edge ({u}, {v})")
            adj[u].add(v)
            adj[v].add(u)
        rows = [sorted(a) for a in adj]
        if seed is not None:
            rng = np.random.default_rng(seed)
            rows = [[row[i] for i in rng.permutation(len(row))] for row in rows]
        return cls(rows)

    # -- basic accessors -------------------------------------------------

    @property
    def m(self) -> int:
        return self._m

    @property
    def degrees(self) -> np.ndarray:
        return self._deg

    def degree(self, v: int) -> int:
        return int(self._deg[v])

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Neighbors of ``v`` in port order."""
        return self._ports[v]

    def port_target(self, v: int, port: int) -> int:
        return self._ports[v][port - 1]

    def reverse_port(self, v: int, port: int) -> int:
        """Port at the far end of ``v``'s ``port`` that leads back to ``v``."""
        return self._rev[v][port - 1]

    def port_of(self, v: int, u: int) -> int:
        return self._ports[v].index(u) + 1

    @property
    def ports(self) -> tuple[tuple[int, ...], ...]:
        return self._ports

    def edges(self) -> list[tuple[int, int]]:
        return [(v, u) for v in range(self.n) for u in self._ports[v] if v < u]

    def arcs(self) -> tuple[np.ndarray, np.ndarray]:
        """Directed arc arrays ``(src, dst)``, both directions of every edge."""
        if "arcs" not in self._cache:
            src = np.repeat(np.arange(self.n), self._deg)
            dst = np.fromiter((u for row in self._ports for u in row), dtype=np.int64, count=2 * self._m)
            self._cache["arcs"] = (src, dst)
        return self._cache["arcs"]

    def adjacency_matrix(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        src, dst = self.arcs()
        a[src, dst] = 1.0
        return a

    def relabel(self, perm: Sequence[int]) -> Graph:
        """Graph with vertex ``v`` renamed to ``perm[v]``; port order is kept."""
        perm = list(perm)
        if sorted(perm) != list(range(self.n)):
            raise ValueError("perm must be a permutation of range(n)")
        rows: list[list[int]] = [[] for _ in range(self.n)]
        for v, row in enumerate(self._ports):
            rows[perm[v]] = [perm[u] for u in row]
        return Graph(rows)

    def induced_subgraph(self, keep: Iterable[int]) -> tuple[Graph, list[int]]:
        """Induced subgraph on ``keep``; returns the graph and new->old labels."""
        old = sorted(vertex_set(self, keep))
        new = {v: i for i, v in enumerate(old)}
        rows = [[new[u] for u in self._ports[v] if u in new] for v in old]
        return Graph(rows), old

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self._ports == other._ports

    def __hash__(self) -> int:
        return hash(self._ports)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"



def vertex_set(g: Graph, s: Iterable[int]) -> frozenset[int]:
    members = frozenset(int(v) for v in s)
    for v in members:
        if not 0 <= v < g.n:
            raise ValueError(f"vertex {v} out of range for n={g.n}")
    return members


@dataclass(frozen=True)
class CutStats:
    cut_edges: int
    vol_s: int
    vol_complement: int


def volume(g: Graph, s: Iterable[int]) -> int:
    members = vertex_set(g, s)
    return int(sum(g.degree(v) for v in members))


def cut_stats(g: Graph, s: Iterable[int]) -> CutStats:
    members = vertex_set(g, s)
    vol_s = sum(g.degree(v) for v in members)
    cut = sum(1 for v in members for u in g.neighbors(v) if u not in members)
    return CutStats(cut, vol_s, 2 * g.m - vol_s)


def set_conductance(g: Graph, s: Iterable[int]) -> float:
    """|E(S, S-bar)| / vol(S); requires 0 < vol(S) <= vol(S-bar)."""
    st = cut_stats(g, s)
    if st.vol_s <= 0:
        raise ValueError("set conductance needs vol(S) > 0")
    if st.vol_s > st.vol_complement:
        raise ValueError(f"vol(S)={st.vol_s} exceeds vol(complement)={st.vol_complement}")
    return st.cut_edges / st.vol_s


def components(g: Graph) -> list[list[int]]:
    seen = [False] * g.n
    out = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        comp, queue = [s], deque([s])
        while queue:
            v = queue.popleft()
            for u in g.neighbors(v):
                if not seen[u]:
                    seen[u] = True
                    comp.append(u)
                    queue.append(u)
        out.append(sorted(comp))
    return out


def is_connected(g: Graph) -> bool:
    return g.n > 0 and len(components(g)) == 1


def _eccentricity(g: Graph, s: int) -> float:
    dist = [-1] * g.n
    dist[s] = 0
    queue = deque([s])
    seen = 1
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):
            if dist[u] < 0:
                dist[u] = dist[v] + 1
                seen += 1
                queue.append(u)
    return math.inf if seen < g.n else max(dist)


def diameter(g: Graph) -> float:
    """Largest shortest-path distance; ``math.inf`` when disconnected."""
    if g.n == 0:
        return 0
    best = 0
    for s in range(g.n):
        e = _eccentricity(g, s)
        if e == math.inf:
            return math.inf
        best = max(best, e)
    return best


def _subset_tables(g: Graph, k: int) -> tuple[np.ndarray, np.ndarray]:
    """vol and cut for every subset of vertices ``0..k-1`` (bit i = vertex i)."""
    deg = g.degrees
    vol = np.zeros(1, dtype=np.int32)
    cut = np.zeros(1, dtype=np.int32)
    for i in range(k):
        lower = 0
        for u in g.neighbors(i):
            if u < i:
                lower |= 1 << u
        masks = np.arange(1 << i, dtype=np.int64)
        inside = np.bitwise_count(masks & lower).astype(np.int32)
        vol = np.concatenate([vol, vol + deg[i]])
        cut = np.concatenate([cut, cut + deg[i] - 2 * inside])
    return vol, cut


def min_conductance_cut(g: Graph) -> tuple[float, frozenset[int]]:
    """Exact minimum set conductance and a minimizing set (smaller-volume side).

    Ties are broken by smaller cut ratio numerator, then by the lowest mask.
    Disconnected graphs return 0 with the smallest-volume component.
    """
    if g.n > BRUTE_FORCE_MAX_N:
        raise CapabilityError(f"brute-force conductance capped at n <= {BRUTE_FORCE_MAX_N}, got {g.n}")
    if g.n < 2:
        raise ValueError("conductance needs at least two vertices")
    if not is_connected(g):
        comps = components(g)
        best = min(comps, key=lambda c: (volume(g, c), c))
        return 0.0, frozenset(best)
    two_m = 2 * g.m
    vol, cut = _subset_tables(g, g.n - 1)
    vol = vol[1:].astype(np.int64)
    cut = cut[1:].astype(np.int64)
    small = np.minimum(vol, two_m - vol)
    # compare cut/small exactly by cross multiplication against the float argmin
    ratio = cut / small
    best = float(ratio.min())
    idx = np.flatnonzero(ratio <= best * (1 + 1e-12))
    num, den = int(cut[idx[0]]), int(small[idx[0]])
    pick = int(idx[0])
    for j in idx[1:]:
        c, s = int(cut[j]), int(small[j])
        if c * den < num * s:
            num, den, pick = c, s, int(j)
    mask = pick + 1
    side = frozenset(v for v in range(g.n - 1) if mask >> v & 1)
    if int(vol[pick]) > two_m - int(vol[pick]):
        side = frozenset(range(g.n)) - side
    return num / den, side


def graph_conductance_bruteforce(g: Graph) -> float:
    """Exact graph conductance by subset enumeration (n <= 24)."""
    return min_conductance_cut(g)[0]


# -- generators ------------------------------------------------------------


def _complete_edges(k: int, offset: int = 0) -> list[tuple[int, int]]:
    return [(offset + i, offset + j) for i in range(k) for j in range(i + 1, k)]


def _cycle(p, rng):
    n = int(p["n"])
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return n, [(i, (i + 1) % n) for i in range(n)]


def _path(p, rng):
    n = int(p["n"])
    if n < 1:
        raise ValueError("path needs n >= 1")
    return n, [(i, i + 1) for i in range(n - 1)]


def _complete(p, rng):
    n = int(p["n"])
    if n < 1:
        raise ValueError("complete graph needs n >= 1")
    return n, _complete_edges(n)


def _star(p, rng):
    leaves = int(p["leaves"] if "leaves" in p else p["n"] - 1)
    if leaves < 1:
        raise ValueError("star needs at least one leaf")
    return leaves + 1, [(0, i) for i in range(1, leaves + 1)]


def _barbell(p, rng):
    k = int(p["k"])
    if k < 2:
        raise ValueError("barbell needs cliques of size >= 2")
    edges = _complete_edges(k) + _complete_edges(k, offset=k) + [(k - 1, k)]
    return 2 * k, edges


def _cycle_of_cliques(p, rng):
    cliques, size = int(p["cliques"]), int(p["size"])
    if cliques < 3 or size < 2:
        raise ValueError("cycle_of_cliques needs cliques >= 3 and size >= 2")
    edges = []
    for c in range(cliques):
        edges += _complete_edges(size, offset=c * size)
        nxt = ((c + 1) % cliques) * size
        edges.append((c * size + size - 1, nxt))
    return cliques * size, edges


def _random_regular(p, rng):
    import networkx as nx

    n, d = int(p["n"]), int(p["d"])
    if d >= n or d < 0:
        raise ValueError(f"random_regular needs 0 <= d < n, got d={d}, n={n}")
    if (n * d) % 2:
        raise ValueError(f"random_regular needs n*d even, got n={n}, d={d}")
    g = nx.random_regular_graph(d, n, seed=int(rng.integers(2**31)))
    return n, list(g.edges())


def _gnp(p, rng):
    n, prob = int(p["n"]), float(p["p"])
    if not 0 <= prob <= 1:
        raise ValueError("gnp needs 0 <= p <= 1")
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < prob
    return n, list(zip(iu[keep].tolist(), ju[keep].tolist()))


def _disjoint_union(p, rng):
    parts = p.get("parts")
    if parts is None:
        base = {k[5:]: v for k, v in p.items() if k.startswith("base_")}
        of = p["of"]
        parts = [generate(of, base, seed=int(rng.integers(2**31))) for _ in range(int(p.get("copies", 2)))]
    else:
        parts = [q if isinstance(q, Graph) else generate(q[0], q[1], seed=int(rng.integers(2**31))) for q in parts]
    n, edges = 0, []
    for q in parts:
        edges += [(u + n, v + n) for u, v in q.edges()]
        n += q.n
    return n, edges


GENERATORS = {
    "cycle": _cycle,
    "path": _path,
    "complete": _complete,
    "star": _star,
    "barbell": _barbell,
    "cycle_of_cliques": _cycle_of_cliques,
    "random_regular": _random_regular,
    "gnp": _gnp,
    "disjoint_union": _disjoint_union,
}


def generate(kind: str, params: Mapping | None = None, seed: int = 0) -> Graph:
    """Build a graph of the given family with seeded random port numbering.

    ``params`` by kind: cycle/path/complete ``n``; star ``leaves``; barbell ``k``
    (two K_k joined by one edge); cycle_of_cliques ``cliques``, ``size``;
    random_regular ``n``, ``d``; gnp ``n``, ``p``; disjoint_union either
    ``parts`` (graphs or ``(kind, params)`` pairs) or ``of`` + ``copies`` with
    ``base_*`` keys forwarded as the base family's params.
    """
    if kind not in GENERATORS:
        raise ValueError(f"unknown graph kind {kind!r}; choose from {sorted(GENERATORS)}")
    params = dict(params or {})
    ss = np.random.SeedSequence(seed)
    structure_rng, port_rng = (np.random.default_rng(s) for s in ss.spawn(2))
    n, edges = GENERATORS[kind](params, structure_rng)
    return Graph.from_edges(n, edges, seed=int(port_rng.integers(2**63)))


# -- edge-list files -----------------------------------------------------------


def format_edgelist(g: Graph, with_ports: bool = True) -> str:
    lines = [f"{g.n} {g.m}"]
    lines += [f"{u} {v}" for u, v in g.edges()]
    if with_ports:
        lines.append("ports")
        lines += [f"{v}: " + " ".join(map(str, g.neighbors(v))) for v in range(g.n)]
    return "\n".join(lines) + "\n"


def parse_edgelist(text: str) -> Graph:
    rows = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln]
    if not rows:
        raise ValueError("empty edge-list")
    try:
        n, m = (int(x) for x in rows[0].split())
    except ValueError as exc:
        raise ValueError(f"bad header line {rows[0]!r}; expected 'n m'") from exc
    edges = []
    for ln in rows[1 : 1 + m]:
        u, v = ln.split()
        edges.append((int(u), int(v)))
    if len(edges) != m:
        raise ValueError(f"header promises {m} edges, found {len(edges)}")
    rest = rows[1 + m :]
    g = Graph.from_edges(n, edges)
    if not rest:
        return g
    if rest[0] != "ports":
        raise ValueError(f"unexpected line {rest[0]!r} after edges")
    order: list[list[int] | None] = [None] * n
    for ln in rest[1:]:
        head, _, tail = ln.partition(":")
        order[int(head)] = [int(x) for x in tail.split()]
    if any(o is None for o in order):
        raise ValueError("port block must list every vertex")
    for v in range(n):
        if sorted(order[v]) != sorted(g.neighbors(v)):
            raise ValueError(f"port block for vertex {v} disagrees with the edges")
    return Graph(order)


def write_edgelist(g: Graph, path: str | Path, with_ports: bool = True) -> None:
    Path(path).write_text(format_edgelist(g, with_ports))


def read_edgelist(path: str | Path) -> Graph:
    return parse_edgelist(Path(path).read_text())
