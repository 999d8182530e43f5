"""SVG rendering of scaled discovered sets with the unit diamond overlaid.

Each discovered site x becomes the unit cell centered on x, scaled by 1/n;
type 1 cells are blue, type 2 red, matching the usual labeling.
"""

from __future__ import annotations

from typing import Mapping

from .rng import Site

CELL_COLORS = {1: "#3b6fd4", 2: "#d43b3b"}


def render_shape_svg(cells_by_type: Mapping[int, set[Site]], n: int) -> str:
    """SVG document for d=2 cell sets scaled by 1/n, viewBox [-1.1, 1.1]^2."""
    if n < 1:
        n = 1
    for cells in cells_by_type.values():
        for cell in cells:
            if len(cell) != 2:
                raise ValueError("SVG rendering supports d=2 only")
    s = 1.0 / n
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" '
        'viewBox="-1.1 -1.1 2.2 2.2" width="640" height="640">',
        '  <g stroke="none">',
    ]
    for ptype in sorted(cells_by_type):
        color = CELL_COLORS.get(ptype, "#888888")
        for (x, y) in sorted(cells_by_type[ptype]):
            lines.append(
                f'    <rect x="{(x - 0.5) * s!r}" y="{(-y - 0.5) * s!r}" '
                f'width="{s!r}" height="{s!r}" fill="{color}"/>')
    lines.append('  </g>')
    lines.append('  <polygon points="1,0 0,1 -1,0 0,-1" fill="none" '
                 'stroke="#000000" stroke-width="0.01"/>')
    lines.append('</svg>')
    return "\n".join(lines) + "\n"
