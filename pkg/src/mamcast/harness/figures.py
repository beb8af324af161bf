"""Aggregated CSV tables and dependency-free SVG line charts."""
from __future__ import annotations

import csv
import io
from collections import defaultdict
from pathlib import Path
from statistics import median
from typing import Sequence

import numpy as np

from mamcast.harness.experiments import TrialRecord

TRIAL_COLUMNS = ("trial", "method", "M", "N", "K", "power_dbm", "rate", "iterations", "visited_nodes")

SCHEMAS = {
    "convergence": ("iteration", "mean_rate", "N"),
    "rate_vs_power": ("power_dbm", "method", "N", "mean_rate"),
    "rate_vs_users": ("K", "method", "N", "mean_rate"),
    "two_user_los": ("power_dbm", "method", "M", "N", "mean_rate"),
    "bab_complexity": ("M", "N", "method", "mean_visited_nodes", "mean_rate"),
}


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def aggregate(records: Sequence[TrialRecord], experiment: str) -> list[tuple]:
    if not records:
        raise ValueError("no records to aggregate")
    groups: dict = defaultdict(list)
    if experiment == "convergence":
        for r in records:
            groups[r.n].append(r.trace)
        rows = []
        for n in sorted(groups):
            traces = groups[n]
            length = max(len(t) for t in traces)
            # converged runs hold their final rate
            padded = np.array([list(t) + [t[-1]] * (length - len(t)) for t in traces])
            rows += [(i, float(v), n) for i, v in enumerate(padded.mean(axis=0))]
        return rows
    if experiment == "rate_vs_power":
        key = lambda r: (r.power_dbm, r.method, r.n)
    elif experiment == "rate_vs_users":
        key = lambda r: (r.k, r.method, r.n)
    elif experiment == "two_user_los":
        key = lambda r: (r.power_dbm, r.method, r.m, r.n)
    elif experiment == "bab_complexity":
        key = lambda r: (r.m, r.n, r.method)
    else:
        raise ValueError(f"unknown experiment {experiment!r}")
    order: list = []
    for r in records:
        k = key(r)
        if k not in groups:
            order.append(k)
        groups[k].append(r)
    rows = []
    for k in sorted(order, key=lambda t: tuple((0, v) if not isinstance(v, str) else (1, v) for v in t)):
        rs = groups[k]
        mean_rate = float(np.mean([r.rate for r in rs]))
        if experiment == "bab_complexity":
            rows.append(k + (float(np.mean([r.visited_nodes for r in rs])), mean_rate))
        else:
            rows.append(k + (mean_rate,))
    return rows


def to_csv(header: Sequence[str], rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trials_csv(records: Sequence[TrialRecord]) -> str:
    rows = [(r.trial, r.method, r.m, r.n, r.k, r.power_dbm, r.rate, r.iterations, r.visited_nodes)
            for r in records]
    return to_csv(TRIAL_COLUMNS, rows)


def summary(records: Sequence[TrialRecord], experiment: str, eps: float = 1e-4) -> dict:
    """Headline numbers; wall times are informational only."""
    out: dict = {"experiment": experiment, "records": len(records)}
    times: dict = defaultdict(list)
    for r in records:
        times[r.method].append(r.wall_time)
    out["mean_wall_time_s"] = {m: float(np.mean(v)) for m, v in sorted(times.items())}
    by_key: dict = defaultdict(dict)
    for r in records:
        by_key[(r.trial, r.m, r.n, r.k, r.power_dbm)][r.method] = r
    if experiment == "convergence":
        iters = [r.iterations for r in records if r.method == "ao_sca"]
        out["ao_rounds_median"] = float(median(iters))
        out["ao_converged_within_10"] = float(np.mean([len(r.trace) - 1 <= 10 and _conv(r.trace, eps) for r in records]))
    gaps = [v["bab"].rate - v["greedy"].rate for v in by_key.values() if "bab" in v and "greedy" in v]
    if gaps:
        out["greedy_gap_median"] = float(median(gaps))
        out["greedy_gap_max"] = float(max(gaps))
    dom = [v["ao_sca"].rate >= v["fpa_grid"].rate for v in by_key.values() if "ao_sca" in v and "fpa_grid" in v]
    if dom:
        out["ma_beats_fpa_grid_fraction"] = float(np.mean(dom))
    return out


def _conv(trace, eps) -> bool:
    if len(trace) < 2:
        return False
    prev, last = trace[-2], trace[-1]
    return prev > 0 and (last - prev) / prev < eps


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


def series_for(rows: Sequence[tuple], experiment: str) -> tuple[str, str, dict]:
    series: dict = defaultdict(list)
    if experiment == "convergence":
        for it, rate, n in rows:
            series[f"N={n}"].append((it, rate))
        return "AO iteration", "multicast rate (bit/s/Hz)", series
    if experiment == "rate_vs_power":
        for p, method, n, rate in rows:
            series[f"{method} N={n}"].append((p, rate))
        return "P (dBm)", "multicast rate (bit/s/Hz)", series
    if experiment == "rate_vs_users":
        for k, method, n, rate in rows:
            series[f"{method} N={n}"].append((k, rate))
        return "K", "multicast rate (bit/s/Hz)", series
    if experiment == "two_user_los":
        for p, method, m, n, rate in rows:
            series[f"{method} M={m}"].append((p, rate))
        return "P (dBm)", "multicast rate (bit/s/Hz)", series
    for m, n, method, visited, _ in rows:
        series[f"{method} N={n}"].append((m, visited))
    return "M", "visited nodes", series


def svg_line_chart(series: dict, xlabel: str, ylabel: str, title: str = "",
                   width: int = 560, height: int = 380) -> str:
    left, right, top, bottom = 64, 150, 30, 48
    pts = [p for s in series.values() for p in s]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="18" text-anchor="middle">{title}</text>')
    for i in range(5):
        xv = x0 + i * (x1 - x0) / 4
        yv = y0 + i * (y1 - y0) / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{top + ph + 16}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2:.1f})">{ylabel}</text>')
    for i, (name, s) in enumerate(series.items()):
        colour = _COLOURS[i % len(_COLOURS)]
        s = sorted(s)
        path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in s)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.6" points="{path}"/>')
        for x, y in s:
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="2.5" fill="{colour}"/>')
        ly = top + 14 + 16 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 28}" y2="{ly - 4}" '
                   f'stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 32}" y="{ly}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_figure_data(records: Sequence[TrialRecord], experiment: str, out_dir=None, svg: bool = False) -> dict:
    """Write ``<experiment>.csv`` (and optionally ``.svg``) and return the texts."""
    if not records:
        raise ValueError("no records to emit")
    rows = aggregate(records, experiment)
    texts = {"csv": to_csv(SCHEMAS[experiment], rows), "trials_csv": trials_csv(records)}
    if svg:
        xlabel, ylabel, series = series_for(rows, experiment)
        texts["svg"] = svg_line_chart(series, xlabel, ylabel, experiment.replace("_", " "))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{experiment}.csv").write_text(texts["csv"])
        (out / f"{experiment}_trials.csv").write_text(texts["trials_csv"])
        if svg:
            (out / f"{experiment}.svg").write_text(texts["svg"])
    return texts
