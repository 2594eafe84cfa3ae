"""CSV ingestion, curve files, JSON summaries and log-log SVG plots."""

from __future__ import annotations

import html
import json
import math
from pathlib import Path

import numpy as np


class InputError(ValueError):
    """Malformed input file; ``diagnostics`` holds one message per bad line."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("\n".join(diagnostics))
        self.diagnostics = diagnostics


def _parse_float(token: str) -> float:
    token = token.strip()
    if "," in token:
        raise ValueError(token)
    return float(token)


def read_matrix(path, delimiter: str = ",") -> np.ndarray:
    """Numeric CSV to a float matrix; a single non-numeric first line is a header.

    Every malformed line is reported, not just the first one.
    """
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InputError([f"{path}: {exc.strerror or exc}"]) from exc
    rows = []
    problems = []
    width = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        fields = line.split(delimiter)
        try:
            row = [_parse_float(f) for f in fields]
        except ValueError:
            if lineno == 1:
                continue  # header
            problems.append(f"{path}:{lineno}: non-numeric field in {line!r}")
            continue
        if not all(math.isfinite(v) for v in row):
            problems.append(f"{path}:{lineno}: NaN or infinite value")
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            problems.append(f"{path}:{lineno}: expected {width} fields, found {len(row)}")
            continue
        rows.append(row)
    if problems:
        raise InputError(problems)
    if not rows:
        raise InputError([f"{path}: no numeric rows"])
    return np.array(rows, dtype=np.float64)


def parse_columns(spec: str, n_cols: int) -> list[int]:
    """Column selection such as ``-1``, ``3,4`` or ``2:5`` (zero-based, end exclusive)."""
    cols: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if ":" in part:
            a, b = part.split(":")
            cols.extend(range(n_cols)[slice(int(a) if a else None, int(b) if b else None)])
        else:
            c = int(part)
            cols.append(c % n_cols if c < 0 else c)
    if not cols or any(not 0 <= c < n_cols for c in cols):
        raise ValueError(f"column selection {spec!r} is out of range for {n_cols} columns")
    if len(set(cols)) != len(cols):
        raise ValueError(f"column selection {spec!r} repeats a column")
    return cols


def write_curve(path, scales, omega) -> None:
    # repr gives the shortest round-tripping decimal
    with open(path, "w", newline="") as fh:
        fh.write("t,omega\n")
        for t, w in zip(np.asarray(scales).tolist(), np.asarray(omega).tolist()):
            fh.write(f"{t!r},{w!r}\n")


def read_curve(path) -> tuple[np.ndarray, np.ndarray]:
    data = read_matrix(path)
    if data.shape[1] != 2:
        raise InputError([f"{path}: a curve file has two columns (t, omega), found {data.shape[1]}"])
    return data[:, 0].copy(), data[:, 1].copy()


def write_table(path, header: list[str], columns: list) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*(np.asarray(c).tolist() for c in columns)):
            fh.write(",".join(repr(v) for v in row) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def loglog_svg(
    series: list[tuple[str, np.ndarray, np.ndarray]],
    width: int = 640,
    height: int = 420,
    title: str = "",
) -> str:
    """Self-contained SVG with one polyline per series on log-log axes.

    Nonpositive points cannot sit on a log axis and are omitted.
    """
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
    pts = []
    for name, t, w in series:
        t = np.asarray(t, float)
        w = np.asarray(w, float)
        keep = (t > 0) & (w > 0)
        pts.append((name, np.log10(t[keep]), np.log10(w[keep])))
    xs = np.concatenate([p[1] for p in pts]) if pts else np.array([])
    ys = np.concatenate([p[2] for p in pts]) if pts else np.array([])
    if xs.size == 0:
        xs = ys = np.array([0.0, 1.0])
    x0, x1 = math.floor(xs.min()), math.ceil(xs.max())
    y0, y1 = math.floor(ys.min()), math.ceil(ys.max())
    x1 = max(x1, x0 + 1)
    y1 = max(y1, y0 + 1)
    left, right, top, bottom = 70, 20, 30, 50
    pw = width - left - right
    ph = height - top - bottom

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + (1 - (y - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#000"/>',
    ]
    for e in range(x0, x1 + 1):
        x = px(e)
        out.append(f'<line x1="{x:.2f}" y1="{top + ph}" x2="{x:.2f}" y2="{top + ph + 5}" stroke="#000"/>')
        out.append(f'<text x="{x:.2f}" y="{top + ph + 18}" text-anchor="middle">1e{e}</text>')
    for e in range(y0, y1 + 1):
        y = py(e)
        out.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="#000"/>')
        out.append(f'<text x="{left - 8}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">t</text>')
    out.append(f'<text x="15" y="{top + ph / 2:.1f}" text-anchor="middle" transform="rotate(-90 15 {top + ph / 2:.1f})">omega</text>')
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="18" text-anchor="middle">{html.escape(title)}</text>')
    for n, (name, lx, ly) in enumerate(pts):
        color = colors[n % len(colors)]
        coords = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(lx, ly))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{left + 10}" y="{top + 16 + 14 * n}" fill="{color}">{html.escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
