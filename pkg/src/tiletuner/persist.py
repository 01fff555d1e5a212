"""Trace files (the performance database) and comparison summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .harness import Budget, EvalRecord, MeasureProtocol, TuningTrace
from .space import Configuration

COLUMNS = ("eval_index", "config", "runtime_s", "elapsed_s", "best_so_far_s", "status")
MAGIC = "# tiletuner trace v1"


class TraceParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def fmt_float(x: float) -> str:
    # 17 significant digits round-trip any float64
    return format(x, ".17g")


def format_config(config: Sequence[int]) -> str:
    return "|".join(f"P{i}={v}" for i, v in enumerate(config))


def parse_config(text: str) -> Configuration:
    values = []
    for i, item in enumerate(text.split("|")):
        name, sep, v = item.partition("=")
        if not sep or name != f"P{i}":
            raise ValueError(f"bad config field {item!r}")
        values.append(int(v))
    return tuple(values)


def render_trace(trace: TuningTrace) -> str:
    b, p = trace.budget, trace.protocol
    meta = {
        "kernel": trace.kernel,
        "size": trace.size_name,
        "tuner": trace.tuner,
        "seed": trace.seed,
        "objective": trace.objective,
        "max_evals": b.max_evals,
        "max_seconds": "none" if b.max_seconds is None else fmt_float(b.max_seconds),
        "warmups": p.warmups,
        "repetitions": p.repetitions,
        "aggregate": p.aggregate,
        "version": trace.version,
        "timestamp": trace.timestamp,
        "total_process_s": fmt_float(trace.total_process_s),
    }
    lines = [MAGIC]
    lines += [f"# {k}: {v}" for k, v in meta.items()]
    lines.append(",".join(COLUMNS))
    for r in trace.records:
        lines.append(",".join([
            str(r.eval_index),
            format_config(r.config),
            "" if r.runtime_s is None else fmt_float(r.runtime_s),
            fmt_float(r.elapsed_s),
            fmt_float(r.best_so_far_s),
            "ok" if r.ok else "fail",
        ]))
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> TuningTrace:
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise TraceParseError(1, "missing trace header")
    meta: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        key, sep, value = lines[i][1:].strip().partition(": ")
        if not sep:
            raise TraceParseError(i + 1, f"bad metadata line {lines[i]!r}")
        meta[key] = value
        i += 1
    if i >= len(lines) or lines[i] != ",".join(COLUMNS):
        raise TraceParseError(i + 1, "missing column header")
    try:
        trace = TuningTrace(
            kernel=meta["kernel"],
            size_name=meta["size"],
            tuner=meta["tuner"],
            seed=int(meta["seed"]),
            objective=meta["objective"],
            budget=Budget(
                int(meta["max_evals"]),
                None if meta["max_seconds"] == "none" else float(meta["max_seconds"]),
            ),
            protocol=MeasureProtocol(int(meta["warmups"]), int(meta["repetitions"]), meta["aggregate"]),
            version=meta["version"],
            timestamp=meta["timestamp"],
            total_process_s=float(meta["total_process_s"]),
        )
    except (KeyError, ValueError) as exc:
        raise TraceParseError(i, f"bad metadata: {exc}") from None
    for lineno, line in enumerate(lines[i + 1:], start=i + 2):
        if not line.strip():
            continue
        fields = line.split(",")
        if len(fields) != len(COLUMNS):
            raise TraceParseError(lineno, f"expected {len(COLUMNS)} fields, got {len(fields)}")
        idx, cfg, rt, el, best, status = fields
        try:
            if status not in ("ok", "fail") or (status == "ok") == (rt == ""):
                raise ValueError(f"inconsistent status {status!r}")
            trace.records.append(EvalRecord(
                int(idx), parse_config(cfg), float(rt) if rt else None, float(el), float(best)
            ))
        except ValueError as exc:
            raise TraceParseError(lineno, str(exc)) from None
    return trace


def write_trace(trace: TuningTrace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_trace(trace))
    return path


def read_trace(path) -> TuningTrace:
    return parse_trace(Path(path).read_text())


def best_of(trace: TuningTrace) -> tuple[Configuration, float]:
    """Lowest runtime; the earliest evaluation wins ties."""
    ok = [r for r in trace.records if r.ok]
    if not ok:
        raise ValueError("trace has no successful evaluations")
    best = min(ok, key=lambda r: (r.runtime_s, r.eval_index))
    return best.config, best.runtime_s


@dataclass(frozen=True)
class TunerSummary:
    tuner: str
    best_runtime_s: float
    best_config: Optional[Configuration]
    evals: int
    total_process_s: float


@dataclass(frozen=True)
class ComparisonSummary:
    kernel: str
    size_name: str
    rows: tuple[TunerSummary, ...]

    def row(self, tuner: str) -> TunerSummary:
        return next(r for r in self.rows if r.tuner == tuner)


def summarize(traces: Sequence[TuningTrace]) -> ComparisonSummary:
    if not traces:
        raise ValueError("nothing to summarize")
    rows = []
    for t in traces:
        try:
            cfg, rt = best_of(t)
        except ValueError:
            cfg, rt = None, math.inf
        rows.append(TunerSummary(t.tuner, rt, cfg, len(t.records), t.total_process_s))
    return ComparisonSummary(traces[0].kernel, traces[0].size_name, tuple(rows))


def render_summary(summary: ComparisonSummary) -> str:
    out = [f"# tiletuner comparison: kernel={summary.kernel} size={summary.size_name}"]
    for r in summary.rows:
        out += [
            "",
            f"[{r.tuner}]",
            f"best_runtime_s = {fmt_float(r.best_runtime_s)}",
            f"best_config = {format_config(r.best_config) if r.best_config else 'none'}",
            f"evals = {r.evals}",
            f"total_process_s = {fmt_float(r.total_process_s)}",
        ]
    return "\n".join(out) + "\n"


def write_summary(summary: ComparisonSummary, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_summary(summary))
    return path
