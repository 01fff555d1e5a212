"""Static SVG charts: runtime-vs-elapsed scatter and per-tuner minimum bars."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .harness import TuningTrace
from .persist import ComparisonSummary, format_config

PALETTE = {
    "random": "#1f77b4",
    "grid": "#ff7f0e",
    "genetic": "#2ca02c",
    "boosted": "#d62728",
    "bayesopt": "#9467bd",
}
LABELS = {
    "random": "Random",
    "grid": "GridSearch",
    "genetic": "GA",
    "boosted": "BoostedTree",
    "bayesopt": "BayesOpt (RF+LCB)",
}
_FALLBACK = ["#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]

W, H = 720, 440
ML, MR, MT, MB = 80, 190, 50, 60
PW, PH = W - ML - MR, H - MT - MB


def _color(name: str, i: int) -> str:
    return PALETTE.get(name, _FALLBACK[i % len(_FALLBACK)])


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def _head(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" '
        'font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<text x="{ML + PW / 2}" y="28" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]


def _axes(xlabel: str, ylabel: str, ylo: float, yhi: float, xlo=None, xhi=None) -> list[str]:
    out = [
        f'<line x1="{ML}" y1="{MT + PH}" x2="{ML + PW}" y2="{MT + PH}" stroke="black"/>',
        f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{MT + PH}" stroke="black"/>',
        f'<text class="xlabel" x="{ML + PW / 2}" y="{H - 15}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text class="ylabel" x="20" y="{MT + PH / 2}" text-anchor="middle" '
        f'transform="rotate(-90 20 {MT + PH / 2})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(ylo, yhi):
        y = MT + PH - (t - ylo) / (yhi - ylo) * PH
        out.append(f'<line x1="{ML - 4}" y1="{y:.2f}" x2="{ML}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ML - 7}" y="{y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    if xlo is not None:
        for t in _ticks(xlo, xhi):
            x = ML + (t - xlo) / (xhi - xlo) * PW
            out.append(f'<line x1="{x:.2f}" y1="{MT + PH}" x2="{x:.2f}" y2="{MT + PH + 4}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{MT + PH + 18}" text-anchor="middle">{_fmt(t)}</text>')
    return out


def _span(values: list[float], pad: float = 0.05) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 0.5 if lo else -0.5, hi + 0.5 if hi else 0.5
    d = (hi - lo) * pad
    return lo - d, hi + d


def render_trace_plot(traces: Sequence[TuningTrace], title: str = "") -> str:
    if not traces:
        raise ValueError("need at least one trace to plot")
    pts = [(r.elapsed_s, r.runtime_s) for t in traces for r in t.records if r.ok]
    xlo, xhi = _span([p[0] for p in pts] or [0.0, 1.0])
    xlo = min(xlo, 0.0)
    ylo, yhi = _span([p[1] for p in pts] or [0.0, 1.0])
    ylo = max(ylo, 0.0) if all(p[1] >= 0 for p in pts) else ylo
    t0 = traces[0]
    title = title or f"Autotuning process: {t0.kernel} {t0.size_name}"
    out = _head(title) + _axes("elapsed time (s)", "runtime (s)", ylo, yhi, xlo, xhi)
    for i, t in enumerate(traces):
        c = _color(t.tuner, i)
        out.append(f'<g class="series" data-tuner="{escape(t.tuner)}" fill="{c}">')
        for r in t.records:
            if not r.ok:
                continue
            x = ML + (r.elapsed_s - xlo) / (xhi - xlo) * PW
            y = MT + PH - (r.runtime_s - ylo) / (yhi - ylo) * PH
            out.append(f'<circle class="marker" cx="{x:.2f}" cy="{y:.2f}" r="3"/>')
        out.append("</g>")
        ly = MT + 10 + 20 * i
        out.append(f'<rect x="{ML + PW + 15}" y="{ly - 8}" width="10" height="10" fill="{c}"/>')
        out.append(f'<text x="{ML + PW + 30}" y="{ly + 1}">{escape(LABELS.get(t.tuner, t.tuner))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_min_plot(summary: ComparisonSummary, title: str = "") -> str:
    rows = [r for r in summary.rows if math.isfinite(r.best_runtime_s)]
    if not rows:
        raise ValueError("summary has no finite minimum to plot")
    title = title or f"Minimum runtimes: {summary.kernel} {summary.size_name}"
    yhi = max(r.best_runtime_s for r in rows) * 1.15
    out = _head(title) + _axes("tuner", "minimum runtime (s)", 0.0, yhi)
    slot = PW / len(rows)
    for i, r in enumerate(rows):
        h = r.best_runtime_s / yhi * PH
        x = ML + i * slot + slot * 0.15
        cfg = format_config(r.best_config) if r.best_config else ""
        out.append(
            f'<rect class="bar" data-tuner="{escape(r.tuner)}" x="{x:.2f}" y="{MT + PH - h:.2f}" '
            f'width="{slot * 0.7:.2f}" height="{h:.2f}" fill="{_color(r.tuner, i)}">'
            f"<title>{escape(cfg)}</title></rect>"
        )
        out.append(
            f'<text x="{x + slot * 0.35:.2f}" y="{MT + PH - h - 5:.2f}" text-anchor="middle">'
            f"{_fmt(r.best_runtime_s)}</text>"
        )
        out.append(
            f'<text x="{x + slot * 0.35:.2f}" y="{MT + PH + 16}" text-anchor="middle">'
            f"{escape(LABELS.get(r.tuner, r.tuner))}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_trace(traces: Sequence[TuningTrace], path, title: str = "") -> Path:
    svg = render_trace_plot(traces, title)
    path = Path(path)
    path.write_text(svg)
    return path


def plot_min(summary: ComparisonSummary, path, title: str = "") -> Path:
    svg = render_min_plot(summary, title)
    path = Path(path)
    path.write_text(svg)
    return path
