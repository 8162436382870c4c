"""Run artifacts: JSON report, CSV profiles, and a minimal SVG shape plot.

The SVG writer is deliberately tiny (polylines, axes, labels) so runs have
no plotting dependency; wall-shear and parameter data go to CSV for anyone
who wants nicer figures.
"""

from __future__ import annotations

import json

import numpy as np

from .mesh import Mesh2D, boundary_components

__all__ = ["report_json", "wss_csv", "alpha_csv", "shape_svg"]


def report_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def wss_csv(path, rows) -> None:
    """rows: iterables of (component, arclen, sigma0, sigma_d, sigma_opt, lo, hi)."""
    with open(path, "w") as fh:
        fh.write("component,arclength,sigma_ref,sigma_target,sigma_opt,"
                 "band_lower,band_upper\n")
        for comp, s, s0, sd, so, lo, hi in rows:
            fh.write(f"{comp},{s:.10g},{s0:.10g},{sd:.10g},{so:.10g},"
                     f"{lo:.10g},{hi:.10g}\n")


def alpha_csv(path, mesh: Mesh2D, alpha_vertex: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("x,y,alpha\n")
        for (x, y), a in zip(mesh.vertices, alpha_vertex):
            fh.write(f"{x:.10g},{y:.10g},{a:.10g}\n")


def _boundary_loops(mesh: Mesh2D, positions: np.ndarray):
    loops = []
    for comp in boundary_components(mesh):
        loops.append(positions[comp.vertices])
    return loops


def shape_svg(path, mesh: Mesh2D, theta: np.ndarray, title: str = "") -> None:
    """Overlay of the reference boundary (grey) and deformed boundary (red)."""
    ref_loops = _boundary_loops(mesh, mesh.vertices)
    new_loops = _boundary_loops(mesh, theta)
    pts = np.vstack(ref_loops + new_loops)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    W, H, pad = 640, 480, 40.0
    scale = min((W - 2 * pad) / span[0], (H - 2 * pad) / span[1])

    def to_px(p):
        q = (p - lo) * scale
        return q[:, 0] + pad, (H - pad) - q[:, 1]

    def polyline(p, color, width):
        xs, ys = to_px(p)
        path_d = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        return (f'<polyline fill="none" stroke="{color}" stroke-width="{width}" '
                f'points="{path_d}"/>')

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
             f'viewBox="0 0 {W} {H}">',
             f'<rect width="{W}" height="{H}" fill="white"/>']
    # simple axes box with extent labels
    parts.append(f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" '
                 f'height="{H - 2 * pad}" fill="none" stroke="#cccccc"/>')
    parts.append(f'<text x="{pad}" y="{H - 12}" font-size="12" fill="#555555">'
                 f'x: [{lo[0]:.3g}, {hi[0]:.3g}]  y: [{lo[1]:.3g}, {hi[1]:.3g}]</text>')
    if title:
        parts.append(f'<text x="{pad}" y="24" font-size="14" fill="#111111">'
                     f'{title}</text>')
    for loop in ref_loops:
        parts.append(polyline(loop, "#888888", 1.5))
    for loop in new_loops:
        parts.append(polyline(loop, "#cc2222", 1.5))
    parts.append(f'<text x="{W - 220}" y="24" font-size="12" fill="#888888">'
                 f'reference</text>')
    parts.append(f'<text x="{W - 120}" y="24" font-size="12" fill="#cc2222">'
                 f'deformed</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
