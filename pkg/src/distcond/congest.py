"""Round-synchronous CONGEST engine with per-edge bit accounting.

Every round has three phases: all live vertices compute on the messages
delivered at the end of the previous round, every outgoing message is
collected and charged to its directed edge, and the messages are delivered for
the next round. A vertex that halts is never computed again and messages sent
to it are dropped.
"""
from __future__ import annotations

import json
import math
from collections.abc import Callable, Generator, Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .graph import Graph

DEFAULT_LANES = 64


@dataclass(frozen=True)
class Message:
    payload: bytes = b""

    @property
    def bit_length(self) -> int:
        return 8 * len(self.payload)


def message_bits(msg: Message | bytes) -> int:
    if isinstance(msg, Message):
        return msg.bit_length
    return 8 * len(msg)


def decide(outputs) -> int:
    """Global verdict: 1 iff every vertex output 1 (empty conjunction is 1)."""
    return int(all(int(b) == 1 for b in outputs))


def default_budget(n: int, m: int, lanes: int = DEFAULT_LANES) -> int:
    """``lanes * ceil(log2(n + m))`` bits per directed edge per round."""
    return lanes * max(1, math.ceil(math.log2(max(2, n + m))))


class CongestionViolation(RuntimeError):
    def __init__(self, round_index: int, src: int, port: int, bits: int, budget: int):
        super().__init__(
            f"round {round_index}: vertex {src} port {port} sent {bits} bits, budget {budget}"
        )
        self.round_index = round_index
        self.src = src
        self.port = port
        self.bits = bits
        self.budget = budget


@dataclass
class VertexContext:
    """What a vertex knows locally: its id, degree, input and private RNG."""

    vid: int
    degree: int
    inputs: Any
    rng: np.random.Generator
    state: dict = field(default_factory=dict)  # protocol diagnostics, never shared


class VertexProgram:
    """Per-vertex state machine. Subclasses override ``init`` and ``compute``."""

    halted: bool = False
    output: int = 0

    def init(self, ctx: VertexContext) -> None:
        self.ctx = ctx

    def compute(self, round_index: int, inbox: dict[int, bytes]) -> dict[int, bytes]:
        raise NotImplementedError

    def snapshot(self) -> Any:
        """State summary used by the locality checks; override as needed."""
        return (self.halted, self.output)


@dataclass
class Halt:
    """Yielded by a generator body to send ``outbox`` and halt with ``bit``."""

    bit: int
    outbox: dict = field(default_factory=dict)


Body = Callable[[VertexContext], Generator[Any, dict, int]]


class GeneratorProgram(VertexProgram):
    """Adapts a generator body to the ``VertexProgram`` interface.

    The body receives the vertex context, yields one outbox per round and gets
    the next round's inbox back (``inbox = yield outbox``). Returning ends the
    program with the returned value as output bit; yielding ``Halt`` sends a
    last outbox and halts in the same round.
    """

    def __init__(self, body: Body):
        self.body = body
        self.halted = False
        self.output = 0

    def init(self, ctx: VertexContext) -> None:
        self.ctx = ctx
        self._gen = self.body(ctx)

    def compute(self, round_index, inbox):
        try:
            out = next(self._gen) if round_index == 0 else self._gen.send(inbox)
        except StopIteration as stop:
            self.halted = True
            self.output = int(stop.value or 0)
            return {}
        if isinstance(out, Halt):
            self.halted = True
            self.output = int(out.bit)
            self._gen.close()
            return out.outbox
        return out or {}

    @property
    def state(self) -> dict:
        return self.ctx.state

    def snapshot(self):
        return (self.halted, self.output, repr(sorted(self.ctx.state.items())))


@dataclass
class RoundTrace:
    round_index: int
    edge_bits: dict[tuple[int, int], int]
    halted: tuple[bool, ...]
    outputs: tuple[int, ...]


@dataclass
class SimulationResult:
    rounds_executed: int
    output_bits: list[int]
    decision: int | None  # None when the run timed out
    congestion: int
    timed_out: bool
    budget_bits: int | None
    violations: list[tuple[int, int, int, int]]  # (round, src, port, bits)
    traces: list[RoundTrace] | None
    programs: list[VertexProgram]
    messages: int = 0
    total_bits: int = 0


def vertex_rng(seed: int, v: int) -> np.random.Generator:
    """Independent stream for vertex ``v``, a function of (seed, v) only."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(v,)))


def _encode(payload) -> bytes:
    if isinstance(payload, Message):
        return payload.payload
    if isinstance(payload, (bytes, bytearray)):
        return bytes(payload)
    raise TypeError(f"messages must be bytes or Message, got {type(payload).__name__}")


def run(
    g: Graph,
    factory: Callable[[int], VertexProgram],
    max_rounds: int,
    budget_bits: int | None = None,
    mode: str = "record",
    seed: int = 0,
    inputs: Mapping[int, Any] | Callable[[int], Any] | Any = None,
    keep_traces: bool = False,
) -> SimulationResult:
    """Execute the programs built by ``factory`` until all halt or ``max_rounds``.

    ``budget_bits=None`` means unlimited. In ``strict`` mode the first message
    over budget raises ``CongestionViolation``; in ``record`` mode it is logged
    in ``violations`` and delivered anyway.
    """
    if mode not in ("record", "strict"):
        raise ValueError("mode must be 'record' or 'strict'")
    if max_rounds < 0:
        raise ValueError("max_rounds must be nonnegative")
    programs = []
    for v in range(g.n):
        if callable(inputs):
            inp = inputs(v)
        elif isinstance(inputs, Mapping):
            inp = inputs.get(v)
        else:
            inp = inputs
        prog = factory(v)
        prog.init(VertexContext(v, g.degree(v), inp, vertex_rng(seed, v)))
        programs.append(prog)

    inboxes: list[dict[int, bytes]] = [{} for _ in range(g.n)]
    congestion = 0
    violations = []
    traces = [] if keep_traces else None
    messages = total_bits = 0
    r = 0
    while r < max_rounds and not all(p.halted for p in programs):
        outboxes = []
        for v, prog in enumerate(programs):
            if prog.halted:
                outboxes.append({})
                continue
            out = prog.compute(r, inboxes[v])
            outboxes.append(out or {})
        nxt: list[dict[int, bytes]] = [{} for _ in range(g.n)]
        edge_bits = {}
        for v, out in enumerate(outboxes):
            deg = g.degree(v)
            for port, payload in out.items():
                if not (isinstance(port, (int, np.integer)) and 1 <= port <= deg):
                    raise ValueError(f"vertex {v} addressed port {port!r}; valid ports are 1..{deg}")
                data = _encode(payload)
                bits = 8 * len(data)
                congestion = max(congestion, bits)
                messages += 1
                total_bits += bits
                if keep_traces:
                    edge_bits[(v, int(port))] = bits
                if budget_bits is not None and bits > budget_bits:
                    if mode == "strict":
                        raise CongestionViolation(r, v, int(port), bits, budget_bits)
                    violations.append((r, v, int(port), bits))
                u = g.port_target(v, port)
                if not programs[u].halted:
                    nxt[u][g.reverse_port(v, port)] = data
        inboxes = nxt
        if keep_traces:
            traces.append(
                RoundTrace(
                    r,
                    edge_bits,
                    tuple(p.halted for p in programs),
                    tuple(int(p.output) for p in programs),
                )
            )
        r += 1

    timed_out = not all(p.halted for p in programs)
    outputs = [int(p.output) for p in programs]
    return SimulationResult(
        rounds_executed=r,
        output_bits=outputs,
        decision=None if timed_out else decide(outputs),
        congestion=congestion,
        timed_out=timed_out,
        budget_bits=budget_bits,
        violations=violations,
        traces=traces,
        programs=programs,
        messages=messages,
        total_bits=total_bits,
    )


def dump_traces(traces: list[RoundTrace], path: str | Path) -> None:
    """Write one JSON line per message: round, src, port, bits."""
    with open(path, "w") as fh:
        for t in traces:
            for (src, port), bits in sorted(t.edge_bits.items()):
                fh.write(json.dumps({"round": t.round_index, "src": src, "port": port, "bits": bits}) + "\n")
