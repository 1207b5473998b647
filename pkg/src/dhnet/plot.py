"""Deterministic SVG rendering for ROC curves and per-frame score series.

Output contains no timestamps or random ids, so identical inputs produce
identical bytes.
"""

from __future__ import annotations

WIDTH, HEIGHT, MARGIN = 480, 360, 48


def _fmt(x: float) -> str:
    return f"{x:.3f}".rstrip("0").rstrip(".")


def _svg(body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _axes(x_label: str, y_label: str) -> list[str]:
    x0, y0 = MARGIN, HEIGHT - MARGIN
    x1, y1 = WIDTH - MARGIN, MARGIN
    return [
        f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
        'fill="none" stroke="black"/>',
        f'<text x="{(x0 + x1) // 2}" y="{HEIGHT - 12}" text-anchor="middle" '
        f'font-size="14">{x_label}</text>',
        f'<text x="14" y="{(y0 + y1) // 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 14 {(y0 + y1) // 2})">{y_label}</text>',
    ]


def _polyline(xy: list[tuple[float, float]], x_range, y_range) -> str:
    x_lo, x_hi = x_range
    y_lo, y_hi = y_range
    sx = (WIDTH - 2 * MARGIN) / max(x_hi - x_lo, 1e-12)
    sy = (HEIGHT - 2 * MARGIN) / max(y_hi - y_lo, 1e-12)
    pts = " ".join(
        f"{_fmt(MARGIN + (x - x_lo) * sx)},{_fmt(HEIGHT - MARGIN - (y - y_lo) * sy)}"
        for x, y in xy
    )
    return f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>'


def roc_svg(points: list[tuple[float, float]], auc: float | None = None) -> str:
    """ROC polyline over the unit square, with a diagonal reference line."""
    body = _axes("false positive rate", "true positive rate")
    body.append(
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{MARGIN}" stroke="gray" stroke-dasharray="4 4"/>'
    )
    body.append(_polyline(points, (0.0, 1.0), (0.0, 1.0)))
    if auc is not None:
        body.append(
            f'<text x="{WIDTH - MARGIN - 6}" y="{HEIGHT - MARGIN - 8}" '
            f'text-anchor="end" font-size="14">AUC = {auc:.4f}</text>'
        )
    return _svg(body)


def series_svg(series: list[tuple[int, float]]) -> str:
    """Per-frame score polyline; scores plotted over [0, 1]."""
    if not series:
        raise ValueError("empty score series")
    xs = [s[0] for s in series]
    body = _axes("frame index", "score")
    body.append(
        _polyline([(float(i), s) for i, s in series], (min(xs), max(xs)), (0.0, 1.0))
    )
    return _svg(body)
