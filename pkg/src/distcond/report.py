"""Line-delimited JSON run records with a schema version."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

SCHEMA_VERSION = 1
TIMING_FIELDS = ("wall_time",)


@dataclass
class ReportRecord:
    seed: int
    graph: str
    n: int
    m: int
    mode: str
    phi: float
    eps: float
    verdict: int
    reject_reason: str
    rounds: int
    congestion: int
    budget_bits: int
    sample_size: int | None
    log_s: list[float] = field(default_factory=list)
    oracle: dict = field(default_factory=dict)
    error: str | None = None
    wall_time: float = 0.0
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> ReportRecord:
        raw = json.loads(line)
        version = raw.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema version {version!r}")
        known = {f.name for f in fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown report fields {sorted(extra)}")
        return cls(**raw)

    def without_timing(self) -> dict:
        d = asdict(self)
        for k in TIMING_FIELDS:
            d.pop(k, None)
        return d


def write_records(records, path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_records(path: str | Path) -> list[ReportRecord]:
    with open(path) as fh:
        return [ReportRecord.from_json(line) for line in fh if line.strip()]
