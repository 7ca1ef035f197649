"""Static SVG rendering of a deployment, its cells and sensing sectors."""

from __future__ import annotations

import math
import os
from typing import Sequence, Union

from .sensing import SensorState
from .voronoi import VoronoiDiagram


def _f(x: float) -> str:
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _sector_path(s: SensorState, r: float, view: float) -> str:
    ax, ay = s.evaluated
    if view >= 2 * math.pi - 1e-12:
        return (
            f'<circle cx="{_f(ax)}" cy="{_f(ay)}" r="{_f(r)}"/>'
        )
    h = 0.5 * view
    a0, a1 = s.orientation - h, s.orientation + h
    x0, y0 = ax + r * math.cos(a0), ay + r * math.sin(a0)
    x1, y1 = ax + r * math.cos(a1), ay + r * math.sin(a1)
    large = 1 if view > math.pi else 0
    return (
        f'<path d="M{_f(ax)} {_f(ay)} L{_f(x0)} {_f(y0)} '
        f'A{_f(r)} {_f(r)} 0 {large} 1 {_f(x1)} {_f(y1)} Z"/>'
    )


def svg_document(states: Sequence[SensorState], diagram: VoronoiDiagram, config) -> str:
    """SVG 1.1 text with one group per layer: cells, circles, sectors, markers.

    Drawing uses y-up region coordinates through a flip transform.
    """
    w, h = config.region
    stroke = max(w, h) / 500.0
    dot = max(w, h) / 250.0
    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{_f(w)}" height="{_f(h)}" viewBox="0 0 {_f(w)} {_f(h)}">',
        f'<g transform="matrix(1 0 0 -1 0 {_f(h)})">',
        f'<g id="cells" fill="none" stroke="#555" stroke-width="{_f(stroke)}">',
        f'<rect x="0" y="0" width="{_f(w)}" height="{_f(h)}" stroke="#000"/>',
    ]
    for cell in diagram.cells:
        pts = " ".join(f"{_f(v.x)},{_f(v.y)}" for v in cell.vertices)
        out.append(f'<polygon points="{pts}"/>')
    out.append("</g>")

    out.append(
        f'<g id="circles" fill="none" stroke="#1f77b4" stroke-width="{_f(stroke)}" '
        f'stroke-dasharray="{_f(3 * stroke)} {_f(2 * stroke)}">'
    )
    for s in states:
        if s.rho > 0:
            out.append(f'<circle cx="{_f(s.nominal.x)}" cy="{_f(s.nominal.y)}" r="{_f(s.rho)}"/>')
    out.append("</g>")

    out.append(
        f'<g id="sectors" fill="#ff7f0e" fill-opacity="0.35" stroke="#d62728" '
        f'stroke-width="{_f(stroke)}">'
    )
    for s in states:
        out.append(_sector_path(s, config.r_s, config.theta_s))
    out.append("</g>")

    out.append('<g id="markers">')
    for s in states:
        out.append(f'<circle cx="{_f(s.nominal.x)}" cy="{_f(s.nominal.y)}" r="{_f(dot)}" fill="#000"/>')
    for s in states:
        if s.chosen_vertex is not None:
            vx, vy = s.chosen_vertex
            out.append(
                f'<rect x="{_f(vx - dot)}" y="{_f(vy - dot)}" width="{_f(2 * dot)}" '
                f'height="{_f(2 * dot)}" fill="#2ca02c"/>'
            )
    out.append("</g>")
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_svg(
    states: Sequence[SensorState],
    diagram: VoronoiDiagram,
    config,
    path: Union[str, os.PathLike],
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg_document(states, diagram, config))
