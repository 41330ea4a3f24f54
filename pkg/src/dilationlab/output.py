"""Deterministic CSV/JSON/SVG writers.  Floats are written with 17
significant digits and files are replaced atomically."""
from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    return str(x)


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        if isinstance(row, dict):
            row = [row[h] for h in header]
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows) -> Path:
    return write_atomic(path, csv_text(header, rows))


def _json_value(x, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(x, dict):
        if not x:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_json_value(v, indent, level + 1)}"
                 for k, v in x.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        if len(x) == 0:
            return "[]"
        return "[" + ", ".join(_json_value(v, indent, level + 1) for v in x) + "]"
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x if math.isfinite(x) else "null"
    if isinstance(x, (complex, np.complexfloating)):
        return _json_value([x.real, x.imag], indent, level)
    return json.dumps(str(x))


def json_text(obj, indent: int = 2) -> str:
    """JSON with every float at 17 significant digits (nan/inf become null)."""
    return _json_value(obj, indent, 0) + "\n"


def write_json(path, obj) -> Path:
    return write_atomic(path, json_text(obj))


# --------------------------------------------------------------------------
# Minimal SVG
# --------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def svg_plot(path, series, title: str = "", xlabel: str = "", ylabel: str = "",
             width: int = 480, height: int = 360) -> Path:
    """``series`` is a list of (kind, x, y) with kind 'points', 'line' or 'polygon'."""
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    ok = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = xs[ok], ys[ok]
    x0, x1 = (xs.min(), xs.max()) if xs.size else (0.0, 1.0)
    y0, y1 = (ys.min(), ys.max()) if ys.size else (0.0, 1.0)
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 1, x1 + 1
    if y1 - y0 < 1e-12:
        y0, y1 = y0 - 1, y1 + 1
    m = 50

    def px(x):
        return m + (np.asarray(x, float) - x0) / (x1 - x0) * (width - 2 * m)

    def py(y):
        return height - m - (np.asarray(y, float) - y0) / (y1 - y0) * (height - 2 * m)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
           f'<rect x="{m}" y="{m}" width="{width - 2 * m}" height="{height - 2 * m}" '
           'fill="none" stroke="#888"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="13">{title}</text>',
           f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="11">{xlabel}</text>',
           f'<text x="12" y="{height / 2}" font-size="11" transform="rotate(-90 12 {height / 2})">'
           f'{ylabel}</text>',
           f'<text x="{m}" y="{height - m + 14}" font-size="9">{x0:.4g}</text>',
           f'<text x="{width - m}" y="{height - m + 14}" font-size="9" text-anchor="end">{x1:.4g}</text>',
           f'<text x="{m - 4}" y="{height - m}" font-size="9" text-anchor="end">{y0:.4g}</text>',
           f'<text x="{m - 4}" y="{m + 8}" font-size="9" text-anchor="end">{y1:.4g}</text>']
    for i, (kind, x, y) in enumerate(series):
        c = _COLORS[i % len(_COLORS)]
        X, Y = px(x), py(y)
        if kind == "points":
            out += [f'<circle cx="{a:.2f}" cy="{b:.2f}" r="2.5" fill="{c}"/>' for a, b in zip(X, Y)
                    if np.isfinite(a) and np.isfinite(b)]
        else:
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(X, Y))
            tag = "polygon" if kind == "polygon" else "polyline"
            out.append(f'<{tag} points="{pts}" fill="none" stroke="{c}"/>')
    out.append("</svg>")
    return write_atomic(path, "\n".join(out) + "\n")
