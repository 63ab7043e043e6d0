"""Write-only SVG drawing of planar flows."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, check_alpha
from .eulerian import FlowField, net_outflow

SIZE = 600.0
MARGIN = 20.0
MAX_STROKE = 12.0


def flow_to_svg(v: FlowField, alpha: float = 0.5, size: float = SIZE) -> str:
    """Edges as segments whose stroke width is proportional to ``w^alpha``.

    Sources are drawn as red dots and sinks as blue dots. Only 2-D flows.
    """
    alpha = check_alpha(alpha)
    if v.dim != 2:
        raise DimensionMismatch(f"SVG export needs a planar flow, got dimension {v.dim}")
    pts = v.network.vertices
    lo = pts.min(axis=0) if len(pts) else np.zeros(2)
    span = float(np.max(np.ptp(pts, axis=0))) if len(pts) else 0.0
    scale = (size - 2 * MARGIN) / span if span > 0 else 1.0

    def xy(p):
        # SVG's y axis points down
        return MARGIN + (p[0] - lo[0]) * scale, size - MARGIN - (p[1] - lo[1]) * scale

    keep = v.weights > 0
    widths = np.zeros(len(v.weights))
    widths[keep] = v.weights[keep] ** alpha
    top = widths.max() if len(widths) and widths.max() > 0 else 1.0

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:g}" height="{size:g}" '
        f'viewBox="0 0 {size:g} {size:g}">',
        f'<rect width="{size:g}" height="{size:g}" fill="white"/>',
    ]
    for (a, b), w in zip(v.network.edges, widths):
        if w <= 0:
            continue
        x1, y1 = xy(pts[a])
        x2, y2 = xy(pts[b])
        lines.append(
            f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
            f'stroke="black" stroke-linecap="round" stroke-width="{MAX_STROKE * w / top:.3f}"/>'
        )
    net = net_outflow(v)
    for p, x in zip(pts, net):
        if abs(x) <= 1e-12:
            continue
        cx, cy = xy(p)
        color = "#c0392b" if x > 0 else "#2459a8"
        lines.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="4" fill="{color}"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
