"""SVG export of gasket approximations.

Cells are drawn as upward triangles on an integer lattice: at level n every
vertex is (a/2^n, b*sqrt(3)/2^n), so scaling by 2^n puts all x-coordinates
and all sqrt(3)-multipliers on integers and the only floating constant is a
single sqrt(3) inside the top-level transform.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterable, Optional

from .geometry import ElementaryPath, OrientedEdge, Word, cell_corners, lacuna_path

_SQRT3 = math.sqrt(3.0)


def _lattice(p, scale: int) -> tuple[int, int]:
    x = p.x * scale
    y = p.y * scale
    if x.denominator != 1 or y.denominator != 1:
        raise ValueError("coordinate does not land on the integer lattice")
    return int(x), int(y)


def _poly(points, scale) -> str:
    return " ".join(f"{x},{y}" for x, y in (_lattice(p, scale) for p in points))


def render_svg(
    level: int,
    size: int = 512,
    highlight_cells: Iterable[Word] = (),
    path: Optional[ElementaryPath] = None,
    lacunas: Iterable[Word] = (),
    edge_magnitudes: Optional[dict[OrientedEdge, float]] = None,
) -> str:
    """An SVG document showing the 3^level cells of the given approximation,
    with optional highlighted cells, a path overlay, lacuna outlines, and
    per-edge coloring by magnitude."""
    # V_n sits on the (1/2^(n+1))-lattice (the top vertex already has
    # half-integer coordinates); one extra doubling also covers lacuna
    # outlines one level down
    scale = 2 ** (level + 2)
    sx = size / scale
    sy = size / scale * _SQRT3
    height = int(math.ceil(size * _SQRT3 / 2)) + 2
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{height}" '
        f'viewBox="0 0 {size} {height}">',
        f'<g transform="translate(0,{height - 1}) scale({sx:.10g},{-sy:.10g})">',
    ]
    for letters in itertools.product("012", repeat=level):
        word = "".join(letters)
        pts = _poly(cell_corners(word), scale)
        parts.append(f'<polygon class="cell" points="{pts}" fill="#d8d8d8" stroke="none"/>')
    for word in highlight_cells:
        pts = _poly(cell_corners(word), scale)
        parts.append(f'<polygon class="highlight" points="{pts}" fill="#7fb3d5"/>')
    if edge_magnitudes:
        top = max(abs(v) for v in edge_magnitudes.values()) or 1.0
        for e, v in sorted(edge_magnitudes.items(), key=lambda kv: str(kv[0])):
            s = _lattice(e.source, scale)
            t = _lattice(e.target, scale)
            shade = int(240 * (1 - abs(v) / top))
            color = f"rgb(255,{shade},{shade})"
            parts.append(
                f'<line class="form-edge" x1="{s[0]}" y1="{s[1]}" x2="{t[0]}" y2="{t[1]}" '
                f'stroke="{color}" stroke-width="{0.45 / scale * size:.4g}" '
                f'vector-effect="non-scaling-stroke"/>'
            )
    for word in lacunas:
        lp = lacuna_path(word)
        pts = _poly([e.source for e in lp.edges], scale)
        parts.append(f'<polygon class="lacuna" points="{pts}" fill="none" stroke="#c0392b" '
                     'stroke-width="1.5" vector-effect="non-scaling-stroke"/>')
    if path is not None:
        pts = [path.edges[0].source] + [e.target for e in path.edges]
        coords = _poly(pts, scale)
        parts.append(f'<polyline class="path" points="{coords}" fill="none" stroke="#1a5276" '
                     'stroke-width="2" vector-effect="non-scaling-stroke"/>')
    parts.append("</g></svg>")
    return "\n".join(parts)
