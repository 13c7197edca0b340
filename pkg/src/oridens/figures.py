"""Visualizations: radar-style density charts and report figures.

The radar chart is handwritten SVG so its bytes are deterministic and
diffable; the error-population chart uses matplotlib and is meant for
human inspection, not byte comparison.
"""

import math

import numpy as np

from .core import Density
from .evaluate import ABOVE_THRESHOLDS, BELOW_THRESHOLDS


def radar_svg(density: Density, size: int = 400,
              min_radius_frac: float = 0.01) -> str:
    """Render a density as a closed radar polygon over N spokes.

    Spoke i points along theta_i = 2*pi*i/N, with spoke 0 at +x and the
    angle increasing counter-clockwise on the page. Vertex radii scale
    linearly with bin value (1.0 for the largest bin), floored at
    min_radius_frac of the full radius so empty bins stay visible.
    Output bytes are deterministic for identical input.
    """
    if size < 16:
        raise ValueError(f"size must be at least 16, got {size}")
    if not 0.0 < min_radius_frac < 1.0:
        raise ValueError(f"min_radius_frac must be in (0, 1), got {min_radius_frac!r}")
    bins = density.bins
    n = density.n_bins
    center = size / 2.0
    full = 0.45 * size
    radii = full * np.maximum(bins / bins.max(), min_radius_frac)

    points = []
    spokes = []
    for i in range(n):
        theta = 2.0 * math.pi * i / n
        # SVG y grows downward; flip it so the angle runs counter-clockwise
        ux, uy = math.cos(theta), -math.sin(theta)
        points.append(f"{center + radii[i] * ux:.6f},{center + radii[i] * uy:.6f}")
        spokes.append(
            f'  <line x1="{center:.6f}" y1="{center:.6f}" '
            f'x2="{center + full * ux:.6f}" y2="{center + full * uy:.6f}" '
            f'stroke="#cccccc" stroke-width="1"/>'
        )

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'  <circle cx="{center:.6f}" cy="{center:.6f}" r="{full:.6f}" '
        f'fill="none" stroke="#999999" stroke-width="1"/>',
    ]
    parts.extend(spokes)
    parts.append(
        f'  <polygon points="{" ".join(points)}" '
        f'fill="#2f9e44" fill-opacity="0.35" stroke="#2f9e44" stroke-width="2"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def population_chart(reports, path) -> None:
    """Save a bar chart of below/above-threshold percentages per method.

    Below-threshold buckets go on the left panel, the (much smaller)
    above-threshold buckets on the right.
    """
    from matplotlib.figure import Figure

    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report to chart")

    fig = Figure(figsize=(9.0, 4.0))
    ax_below, ax_above = fig.subplots(1, 2)
    n = len(reports)
    width = 0.8 / n

    for panel, thresholds, getter, prefix in (
        (ax_below, BELOW_THRESHOLDS, lambda r, t: r.below_thresholds[t], "<"),
        (ax_above, ABOVE_THRESHOLDS, lambda r, t: r.above_thresholds[t], ">"),
    ):
        x = np.arange(len(thresholds))
        for j, rep in enumerate(reports):
            offsets = x + (j - (n - 1) / 2.0) * width
            panel.bar(offsets, [getter(rep, t) for t in thresholds],
                      width=width, label=rep.method_name)
        panel.set_xticks(x)
        panel.set_xticklabels([f"{prefix}{t}°" for t in thresholds])
        panel.set_ylabel("% of samples")
        panel.grid(axis="y", linestyle=":", linewidth=0.5)
    ax_below.set_title("errors below threshold")
    ax_above.set_title("errors above threshold")
    ax_below.legend(fontsize="small")

    fig.tight_layout()
    fig.savefig(path, dpi=150)
