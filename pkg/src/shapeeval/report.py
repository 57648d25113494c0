"""Tables, CSV/JSON data files, and standalone SVG plots.

Curve export writes, into one directory::

    NN_<run>_pr.csv      recall,precision    (interpolated, mean over queries)
    NN_<run>_ndcg.csv    rank,ndcg           (mean over queries)
    manifest.json

``NN`` is the 1-based position of the run in the bundle. The manifest is a
JSON object::

    {
      "schema": "shapeeval-curves/1",
      "pr_interpolation": "...",
      "curves": [
        {"run": str, "type": "pr" | "ndcg", "file": str,
         "columns": [str, str], "points": int},
        ...
      ]
    }

Every writer is deterministic: fixed key order, ``repr`` floats, LF endings.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from shapeeval.analysis import METRICS, ComparisonReport, ReliabilityEstimate, RunSummary

STYLES = ("percent", "fraction")
COLUMN_LABELS = {
    "percent": ("NN", "Tier1", "Tier2", "E-Measure", "DCG", "MAP"),
    "fraction": ("NN", "FT", "ST", "E", "DCG", "MAP"),
}
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
PR_INTERPOLATION = "precision at each recall level is the maximum over all points at or beyond it"


def format_value(value: float, style: str = "percent") -> str:
    """``0.845 -> '84.50%'`` (percent) or ``0.884 -> '0.884'`` (fraction)."""
    exact = Decimal(repr(float(value)))
    if style == "percent":
        return f"{(exact * 100).quantize(Decimal('0.01'), ROUND_HALF_UP)}%"
    if style == "fraction":
        return str(exact.quantize(Decimal("0.001"), ROUND_HALF_UP))
    raise ValueError(f"unknown style {style!r}")


def parse_value(text: str) -> float:
    text = text.strip()
    if text.endswith("%"):
        return float(Decimal(text[:-1]) / 100)
    return float(text)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def render_summary_table(
    summaries: Sequence[RunSummary], style: str = "percent", fmt: str = "text"
) -> str:
    """Summary table, one row per run, measures in the fixed column order."""
    if not summaries:
        raise ValueError("no summaries to render")
    labels = COLUMN_LABELS[style]
    if fmt == "text":
        rows = [[s.run_name, *(format_value(getattr(s, m), style) for m in METRICS)] for s in summaries]
        header = ["Run", *labels]
        widths = [max(len(r[k]) for r in [header, *rows]) for k in range(len(header))]
        lines = []
        for row in [header, *rows]:
            cells = [row[0].ljust(widths[0])] + [
                cell.rjust(w) for cell, w in zip(row[1:], widths[1:])
            ]
            lines.append("  ".join(cells).rstrip() + "\n")
        return "".join(lines)
    if fmt == "csv":
        header = ["run", "method", *labels, *(f"{m}_value" for m in METRICS),
                  "query_count", "query_time_ms", "descriptor_bytes"]
        rows = [header]
        for s in summaries:
            meta = s.meta
            rows.append([
                s.run_name,
                s.method_label,
                *(format_value(getattr(s, m), style) for m in METRICS),
                *(repr(getattr(s, m)) for m in METRICS),
                s.query_count,
                "" if meta is None or meta.reported_query_time_ms is None else repr(meta.reported_query_time_ms),
                "" if meta is None or meta.descriptor_bytes is None else meta.descriptor_bytes,
            ])
        return _csv_text(rows)
    if fmt == "json":
        payload = []
        for s in summaries:
            payload.append({
                "run": s.run_name,
                "method": s.method_label,
                "query_count": s.query_count,
                "excluded_queries": list(s.excluded_queries),
                "scores": {m: getattr(s, m) for m in METRICS},
                "formatted": {
                    label: format_value(getattr(s, m), style) for label, m in zip(labels, METRICS)
                },
                "meta": None if s.meta is None else {
                    "query_time_ms": s.meta.reported_query_time_ms,
                    "descriptor_bytes": s.meta.descriptor_bytes,
                },
            })
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def parse_summary_table(text: str) -> list[tuple[str, dict[str, float]]]:
    """Read back the plain-text table produced by :func:`render_summary_table`."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    out = []
    for line in lines[1:]:
        name, *cells = line.rsplit(None, len(METRICS))
        out.append((name.strip(), dict(zip(METRICS, map(parse_value, cells)))))
    return out


def render_per_query_csv(summary: RunSummary) -> str:
    rows = [["query", "class", *METRICS]]
    for r in summary.per_query:
        rows.append([r.query, r.class_label, *(repr(r.values[m]) for m in METRICS)])
    return _csv_text(rows)


def render_per_class_csv(summary: RunSummary) -> str:
    counts: dict[str, int] = {}
    for r in summary.per_query:
        counts[r.class_label] = counts.get(r.class_label, 0) + 1
    rows = [["class", "queries", *METRICS]]
    for label, values in summary.per_class.items():
        rows.append([label, counts.get(label, 0), *(repr(values[m]) for m in METRICS)])
    return _csv_text(rows)


def render_comparison(report: ComparisonReport, fmt: str = "text") -> str:
    if fmt == "json":
        payload = {
            "run_a": report.run_a,
            "run_b": report.run_b,
            "metrics": {
                m: {
                    "a": report.per_metric_delta[m][0],
                    "b": report.per_metric_delta[m][1],
                    "delta": report.per_metric_delta[m][2],
                    "wins_a": report.per_query_wins[m][0],
                    "wins_b": report.per_query_wins[m][1],
                    "ties": report.per_query_wins[m][2],
                }
                for m in METRICS
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        rows = [["metric", "a", "b", "delta", "wins_a", "wins_b", "ties"]]
        for m in METRICS:
            a, b, d = report.per_metric_delta[m]
            rows.append([m, repr(a), repr(b), repr(d), *report.per_query_wins[m]])
        return _csv_text(rows)
    if fmt == "text":
        lines = [f"a = {report.run_a}\n", f"b = {report.run_b}\n",
                 f"{'metric':<12}{'a':>9}{'b':>9}{'b-a':>10}{'wins_a':>8}{'wins_b':>8}{'ties':>8}\n"]
        for m in METRICS:
            a, b, d = report.per_metric_delta[m]
            wa, wb, t = report.per_query_wins[m]
            lines.append(f"{m:<12}{a:>9.4f}{b:>9.4f}{d:>+10.4f}{wa:>8}{wb:>8}{t:>8}\n")
        return "".join(lines)
    raise ValueError(f"unknown output format {fmt!r}")


def render_reliability(est: ReliabilityEstimate, fmt: str = "text") -> str:
    if fmt == "json":
        payload = {
            "metric": est.metric,
            "trials": est.trials,
            "seed": est.seed,
            "swap_rate": [{"subset_size": s, "swap_rate": est.swap_rate[s]} for s in est.subset_sizes],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        return _csv_text(
            [["subset_size", "swap_rate"]]
            + [[s, repr(est.swap_rate[s])] for s in est.subset_sizes]
        )
    if fmt == "text":
        lines = [f"metric={est.metric} trials={est.trials} seed={est.seed}\n",
                 f"{'classes':>8}  swap_rate\n"]
        lines.extend(f"{s:>8}  {est.swap_rate[s]:.4f}\n" for s in est.subset_sizes)
        return "".join(lines)
    raise ValueError(f"unknown output format {fmt!r}")


# -- curves ----------------------------------------------------------------

@dataclass(frozen=True)
class RunCurves:
    run_name: str
    pr: tuple[tuple[float, float], ...]
    ndcg: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if len(self.pr) < 2 or len(self.ndcg) < 2:
            raise ValueError(f"curves for {self.run_name!r} need at least 2 points each")
        for x, y in self.pr:
            if not (0 <= x <= 1 and 0 <= y <= 1):
                raise ValueError(f"PR point ({x}, {y}) outside [0,1]^2")
        for _, y in self.ndcg:
            if not 0 <= y <= 1:
                raise ValueError(f"NDCG value {y} outside [0,1]")


@dataclass(frozen=True)
class CurveBundle:
    runs: tuple[RunCurves, ...] = ()

    @classmethod
    def from_summaries(cls, summaries: Sequence[RunSummary]) -> "CurveBundle":
        return cls(tuple(
            RunCurves(
                s.run_name,
                tuple(s.pr_curve),
                tuple((rank, v) for rank, v in enumerate(s.ndcg_curve, start=1)),
            )
            for s in summaries
        ))

    def __len__(self) -> int:
        return len(self.runs)


def slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_") or "run"


def export_curves(bundle: CurveBundle, path) -> list[Path]:
    directory = Path(path)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {directory}: {exc.strerror}") from exc

    written = []
    entries = []
    for idx, curves in enumerate(bundle.runs, start=1):
        stem = f"{idx:02d}_{slug(curves.run_name)}"
        for kind, columns, points in (
            ("pr", ["recall", "precision"], curves.pr),
            ("ndcg", ["rank", "ndcg"], curves.ndcg),
        ):
            target = directory / f"{stem}_{kind}.csv"
            target.write_text(
                _csv_text([columns, *([repr(x), repr(y)] for x, y in points)]),
                encoding="utf-8",
                newline="\n",
            )
            written.append(target)
            entries.append({
                "run": curves.run_name,
                "type": kind,
                "file": target.name,
                "columns": columns,
                "points": len(points),
            })
    manifest = {
        "schema": "shapeeval-curves/1",
        "pr_interpolation": PR_INTERPOLATION,
        "curves": entries,
    }
    target = directory / "manifest.json"
    target.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n")
    written.append(target)
    return written


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def render_svg(
    bundle: CurveBundle,
    width: int = 640,
    height: int = 480,
    title: str | None = None,
    legend: bool = True,
    kind: str = "pr",
) -> str:
    """Line plot of every run's curve on the unit square.

    ``kind="pr"`` plots precision against recall; ``kind="ndcg"`` plots NDCG
    against rank scaled by the longest ranking in the bundle.
    """
    if not bundle.runs:
        raise ValueError("cannot plot an empty curve bundle")
    if kind == "pr":
        series = [c.pr for c in bundle.runs]
        x_label, y_label = "Recall", "Precision"
    elif kind == "ndcg":
        max_rank = max(c.ndcg[-1][0] for c in bundle.runs)
        series = [tuple((rank / max_rank, v) for rank, v in c.ndcg) for c in bundle.runs]
        x_label, y_label = f"Rank / {max_rank}", "NDCG"
    else:
        raise ValueError(f"unknown plot kind {kind!r}")

    left, right, top, bottom = 60, 20, 40 if title else 20, 50
    x0, x1 = left, width - right
    y0, y1 = top, height - bottom

    def sx(x):
        return x0 + x * (x1 - x0)

    def sy(y):
        return y1 - y * (y1 - y0)

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>\n',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">\n',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>\n',
    ]
    if title:
        out.append(
            f'<text x="{_fmt(width / 2)}" y="24" text-anchor="middle" font-family="sans-serif" '
            f'font-size="16">{escape(title)}</text>\n'
        )

    out.append('<g class="grid" stroke="#dddddd" stroke-width="1">\n')
    for k in range(11):
        v = k / 10
        out.append(f'<line x1="{_fmt(sx(v))}" y1="{_fmt(y0)}" x2="{_fmt(sx(v))}" y2="{_fmt(y1)}"/>\n')
        out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(sy(v))}" x2="{_fmt(x1)}" y2="{_fmt(sy(v))}"/>\n')
    out.append("</g>\n")

    out.append('<g class="axes" stroke="#000000" stroke-width="1">\n')
    out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y1)}" x2="{_fmt(x1)}" y2="{_fmt(y1)}"/>\n')
    out.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0)}" y2="{_fmt(y1)}"/>\n')
    out.append("</g>\n")

    out.append('<g class="ticks" font-family="sans-serif" font-size="10" fill="#000000">\n')
    for k in range(0, 11, 2):
        v = k / 10
        out.append(f'<text x="{_fmt(sx(v))}" y="{_fmt(y1 + 14)}" text-anchor="middle">{v:.1f}</text>\n')
        out.append(f'<text x="{_fmt(x0 - 6)}" y="{_fmt(sy(v) + 3)}" text-anchor="end">{v:.1f}</text>\n')
    out.append(
        f'<text x="{_fmt((x0 + x1) / 2)}" y="{_fmt(height - 12)}" text-anchor="middle" '
        f'font-size="12">{escape(x_label)}</text>\n'
    )
    out.append(
        f'<text x="16" y="{_fmt((y0 + y1) / 2)}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {_fmt((y0 + y1) / 2)})">{escape(y_label)}</text>\n'
    )
    out.append("</g>\n")

    out.append('<g class="curves" fill="none" stroke-width="2">\n')
    for idx, points in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        coords = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in points)
        out.append(f'<polyline stroke="{color}" points="{coords}"/>\n')
    out.append("</g>\n")

    if legend:
        row_h = 16
        box_w = 12 + 24 + 8 + 7 * max(len(c.run_name) for c in bundle.runs)
        box_h = 8 + row_h * len(bundle.runs)
        bx = x1 - box_w - 8
        by = y0 + 8
        out.append('<g class="legend" font-family="sans-serif" font-size="11">\n')
        out.append(
            f'<rect x="{_fmt(bx)}" y="{_fmt(by)}" width="{_fmt(box_w)}" height="{_fmt(box_h)}" '
            f'fill="#ffffff" stroke="#999999"/>\n'
        )
        for idx, c in enumerate(bundle.runs):
            color = PALETTE[idx % len(PALETTE)]
            ly = by + 4 + row_h * idx + row_h / 2
            out.append(
                f'<line x1="{_fmt(bx + 6)}" y1="{_fmt(ly)}" x2="{_fmt(bx + 30)}" y2="{_fmt(ly)}" '
                f'stroke="{color}" stroke-width="2"/>\n'
            )
            out.append(
                f'<text x="{_fmt(bx + 36)}" y="{_fmt(ly + 4)}">{escape(c.run_name)}</text>\n'
            )
        out.append("</g>\n")

    out.append("</svg>\n")
    return "".join(out)


__all__ = [
    "COLUMN_LABELS",
    "CurveBundle",
    "PALETTE",
    "RunCurves",
    "export_curves",
    "format_value",
    "parse_summary_table",
    "parse_value",
    "render_comparison",
    "render_per_class_csv",
    "render_per_query_csv",
    "render_reliability",
    "render_summary_table",
    "render_svg",
]
