"""Command-line front end: generate, test, oracle, sweep."""
from __future__ import annotations

import argparse
import itertools
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import battery
from .graph import BRUTE_FORCE_MAX_N, GENERATORS, Graph, generate, graph_conductance_bruteforce, read_edgelist, write_edgelist
from .protocols.tester import CongestionViolation, TesterConfig, test_conductance
from .report import ReportRecord, write_records

OUT_ENV = "DISTCOND_OUT_DIR"

# bare positional values map onto these parameters in order
PRIMARY_PARAMS = {
    "cycle": ("n",),
    "path": ("n",),
    "complete": ("n",),
    "star": ("leaves",),
    "barbell": ("k",),
    "cycle_of_cliques": ("cliques", "size"),
    "random_regular": ("n", "d"),
    "gnp": ("n", "p"),
    "disjoint_union": ("of", "copies"),
}


def _number(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_params(kind: str, tokens) -> dict:
    params, order = {}, list(PRIMARY_PARAMS.get(kind, ()))
    for tok in tokens:
        if "=" in tok:
            k, v = tok.split("=", 1)
            params[k] = _number(v)
        else:
            if not order:
                raise ValueError(f"too many positional parameters for {kind}")
            params[order.pop(0)] = _number(tok)
    return params


def graph_label(kind: str | None, params: dict | None, path: str | None) -> str:
    if path:
        return str(path)
    inner = ",".join(f"{k}={v}" for k, v in sorted(params.items()))
    return f"{kind}({inner})"


@dataclass
class ExperimentSpec:
    kind: str | None = None
    params: dict = field(default_factory=dict)
    graph_path: str | None = None
    graph_seed: int = 0
    config: TesterConfig | None = None
    reps: int = 1
    seed: int = 0
    declared_n: int | None = None
    strict: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("repetitions must be at least 1")
        if (self.kind is None) == (self.graph_path is None):
            raise ValueError("give exactly one of a generator kind or an edge-list path")
        if self.graph_path is not None and not Path(self.graph_path).exists():
            raise FileNotFoundError(self.graph_path)

    def load_graph(self) -> Graph:
        if self.graph_path is not None:
            return read_edgelist(self.graph_path)
        return generate(self.kind, self.params, seed=self.graph_seed)

    @property
    def label(self) -> str:
        return graph_label(self.kind, self.params, self.graph_path)


def run_one(spec: ExperimentSpec, g: Graph, rep: int) -> ReportRecord:
    cfg = spec.config.with_(seed=spec.seed + rep)
    t0 = time.perf_counter()
    error = None
    try:
        v = test_conductance(g, cfg, declared_n=spec.declared_n, strict=spec.strict)
        verdict, reason, rounds, cong, sample, log_s = v.decision, v.reject_reason, v.rounds, v.congestion, v.sample_size, list(v.log_s)
        budget = v.budget_bits
    except CongestionViolation as exc:
        verdict, reason, rounds, cong, sample, log_s = 0, "congestion_violation", exc.round_index + 1, exc.bits, None, []
        budget, error = exc.budget, str(exc)
    return ReportRecord(
        seed=cfg.seed,
        graph=spec.label,
        n=g.n,
        m=g.m,
        mode=cfg.mode,
        phi=cfg.phi,
        eps=cfg.eps,
        verdict=verdict,
        reject_reason=reason,
        rounds=rounds,
        congestion=cong,
        budget_bits=budget,
        sample_size=sample,
        log_s=log_s,
        error=error,
        wall_time=time.perf_counter() - t0,
    )


def _run_star(args):
    return run_one(*args)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list[ReportRecord]:
    """One record per repetition, in seed order regardless of completion order."""
    g = spec.load_graph()
    tasks = [(spec, g, rep) for rep in range(spec.reps)]
    if jobs > 1 and spec.reps > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_star, tasks))
    return [run_one(*t) for t in tasks]


def summarize(records) -> dict:
    ok = [r for r in records if r.error is None]
    return {
        "runs": len(records),
        "accept_rate": sum(r.verdict for r in records) / len(records) if records else float("nan"),
        "max_rounds": max((r.rounds for r in ok), default=0),
        "max_congestion": max((r.congestion for r in ok), default=0),
        "reasons": sorted({r.reject_reason for r in records}),
    }


# -- argument parsing --------------------------------------------------------

_CONFIG_FLAGS = {
    "bfs_depth": int,
    "aggregate_depth": int,
    "walk_length": int,
    "walk_count": int,
    "sample_scale": float,
    "set_cap": int,
    "reject_threshold": float,
    "accept_log_threshold": float,
    "accept_rule": str,
    "congest_lanes": int,
}


def _default_out(name: str) -> Path:
    return Path(os.environ.get(OUT_ENV, ".")) / name


def _add_graph_args(p):
    p.add_argument("--graph", help="edge-list file (otherwise use --kind and params)")
    p.add_argument("--kind", choices=sorted(GENERATORS))
    p.add_argument("params", nargs="*", help="generator params, e.g. 8 or n=64 d=3")
    p.add_argument("--graph-seed", type=int, default=0)


def _add_config_args(p):
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    p.add_argument("--config", help="key=value tester config file; flags override it")
    for name, typ in _CONFIG_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)


def build_config(args, n: int, **point) -> TesterConfig:
    """Desk preset for ``n`` (or the --config file), then flag and grid overrides."""
    phi = point.get("phi", args.phi)
    eps = point.get("eps", args.eps)
    if args.config:
        cfg = TesterConfig.from_text(Path(args.config).read_text()).with_(**point)
    else:
        cfg = TesterConfig.desk(n, phi, eps, mode=args.mode)
    overrides = {k: getattr(args, k) for k in _CONFIG_FLAGS if getattr(args, k) is not None}
    return cfg.with_(**overrides) if overrides else cfg


def _spec_from_args(args, graph_kw: dict | None = None, config_kw: dict | None = None) -> tuple[ExperimentSpec, Graph]:
    if args.graph is None and args.kind is None:
        raise ValueError("give --graph or --kind")
    params = parse_params(args.kind, args.params) if args.kind else {}
    params.update(graph_kw or {})
    spec = ExperimentSpec(
        kind=None if args.graph else args.kind,
        params=params,
        graph_path=args.graph,
        graph_seed=args.graph_seed,
        reps=args.reps,
        seed=args.seed,
        declared_n=args.declared_n,
        strict=args.strict_congestion,
    )
    g = spec.load_graph()
    spec.config = build_config(args, g.n, **(config_kw or {}))
    return spec, g


def cmd_generate(args) -> int:
    params = parse_params(args.kind, args.params)
    g = generate(args.kind, params, seed=args.seed)
    out = Path(args.out) if args.out else _default_out(f"{args.kind}.edges")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_edgelist(g, out)
    line = f"n={g.n} m={g.m}"
    if 2 <= g.n <= BRUTE_FORCE_MAX_N:
        line += f" conductance={graph_conductance_bruteforce(g):.6g}"
    print(line)
    print(f"wrote {out}")
    return 0


def cmd_test(args) -> int:
    spec, _ = _spec_from_args(args)
    records = run_experiment(spec, jobs=args.jobs)
    out = Path(args.out) if args.out else _default_out("test.jsonl")
    write_records(records, out)
    s = summarize(records)
    print(
        f"runs={s['runs']} accept_rate={s['accept_rate']:.4f} max_rounds={s['max_rounds']} "
        f"max_congestion={s['max_congestion']} reasons={','.join(s['reasons'])}"
    )
    print(f"wrote {out}")
    return 0


def cmd_oracle(args) -> int:
    if args.graph:
        g = read_edgelist(args.graph)
    elif args.kind:
        g = generate(args.kind, parse_params(args.kind, args.params), seed=args.graph_seed)
    else:
        raise ValueError("give --graph or --kind")
    results = battery.run_battery(g, args.steps, args.phi_target)
    for r in results:
        val = "-" if r.value is None else f"{r.value:.3e}"
        print(f"{r.name:14s} {r.status.upper():5s} {val:>11s}  {r.detail}")
    return 0 if all(r.ok for r in results) else 1


def parse_grid(items) -> list[dict]:
    if not items:
        raise ValueError("sweep grid is empty")
    axes = []
    for item in items:
        key, sep, vals = item.partition("=")
        if not sep or not vals:
            raise ValueError(f"bad grid axis {item!r}; expected key=v1,v2,...")
        axes.append([(key, _number(v)) for v in vals.split(",")])
    return [dict(combo) for combo in itertools.product(*axes)]


def sweep_rows(args) -> list[dict]:
    rows = []
    for point in parse_grid(args.vary):
        graph_kw = {k: v for k, v in point.items() if k not in ("phi", "eps")}
        cfg_kw = {k: v for k, v in point.items() if k in ("phi", "eps")}
        try:
            spec, g = _spec_from_args(args, graph_kw, cfg_kw)
            records = run_experiment(spec, jobs=args.jobs)
            s = summarize(records)
            cfg = spec.config
            scale = math.log(g.n + g.m) / (cfg.eps * cfg.phi**2)
            rows.append(
                dict(point=point, n=g.n, m=g.m, phi=cfg.phi, eps=cfg.eps, rounds=s["max_rounds"],
                     congestion=s["max_congestion"], accept_rate=s["accept_rate"], K=s["max_rounds"] / scale, error=None)
            )
        except Exception as exc:  # a failing cell must not kill the sweep
            rows.append(dict(point=point, error=f"{type(exc).__name__}: {exc}"))
    return rows


def cmd_sweep(args) -> int:
    rows = sweep_rows(args)
    cols = ("n", "m", "phi", "eps", "rounds", "congestion", "accept_rate", "K")
    lines = ["\t".join(cols)]
    for row in rows:
        if row["error"]:
            lines.append(f"# {row['point']} failed: {row['error']}")
        else:
            lines.append("\t".join(f"{row[c]:.6g}" if isinstance(row[c], float) else str(row[c]) for c in cols))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distcond", description="Distributed conductance tester on a simulated CONGEST network")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a generated graph as an edge list")
    p.add_argument("kind", choices=sorted(GENERATORS))
    p.add_argument("params", nargs="*")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    for name, func, help_text in (
        ("test", cmd_test, "run the tester repeatedly and write one record per run"),
        ("sweep", cmd_sweep, "run the tester over a parameter grid"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_graph_args(p)
        _add_config_args(p)
        p.add_argument("--seed", type=int, default=0, help="seed of the first repetition")
        p.add_argument("--reps", type=int, default=1)
        p.add_argument("--declared-n", type=int, help="vertex count written into inputs")
        p.add_argument("--strict-congestion", action="store_true")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out")
        if name == "sweep":
            p.add_argument("--vary", action="append", default=[], help="grid axis key=v1,v2,... (repeatable)")
        p.set_defaults(func=func)

    p = sub.add_parser("oracle", help="run the spectral verification battery")
    _add_graph_args(p)
    p.add_argument("--steps", type=int, default=4)
    p.add_argument("--phi-target", type=float, default=0.2)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
