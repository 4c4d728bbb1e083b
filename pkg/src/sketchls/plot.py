"""Self-contained SVG overlays of empirical and predicted efficiency curves.

Each method gets one colour: the prediction is a solid polyline, the
empirical mean a dashed polyline with circle markers and a shaded
``q05..q95`` band. The x-axis is ``r/n``.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


@dataclass(frozen=True)
class PlotStyle:
    log_y: bool = False
    width: int = 640
    height: int = 420
    title: str = ""


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def emit_plot(rows, output_path, style: PlotStyle | None = None) -> Path:
    """Render rows sharing one metric to an SVG file.

    Raises:
        ValueError: on empty input, mixed metrics, or nonpositive values with
            a log-scale y-axis.
    """
    style = style or PlotStyle()
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to plot")
    metrics = {r.metric for r in rows}
    if len(metrics) != 1:
        raise ValueError(f"rows must share one metric, got {sorted(metrics)}")
    metric = metrics.pop()

    ys = []
    for r in rows:
        ys += [r.empirical_mean, r.empirical_q05, r.empirical_q95]
        if r.theory_value is not None:
            ys.append(r.theory_value)
    ys = [y for y in ys if y is not None]
    if style.log_y and any(y <= 0 for y in ys):
        raise ValueError("log-scale y-axis needs strictly positive values")
    ty = (lambda v: math.log10(v)) if style.log_y else (lambda v: v)
    xs = [r.xi for r in rows]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ty(y) for y in ys), max(ty(y) for y in ys)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.05, x_hi + 0.05
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5

    ml, mr, mt, mb = 64, 150, 36, 48
    pw, ph = style.width - ml - mr, style.height - mt - mb

    def px(x):
        return ml + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return mt + ph - (ty(y) - y_lo) / (y_hi - y_lo) * ph

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(style.width),
                     height=str(style.height), viewBox=f"0 0 {style.width} {style.height}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(style.width), height=str(style.height), fill="white")
    title = style.title or f"{metric.upper()} vs r/n"
    ET.SubElement(svg, "text", x=str(ml), y="22", **{"font-size": "14", "font-family": "sans-serif"}).text = title
    axes = ET.SubElement(svg, "g", stroke="black", **{"stroke-width": "1"})
    ET.SubElement(axes, "line", x1=str(ml), y1=str(mt + ph), x2=str(ml + pw), y2=str(mt + ph))
    ET.SubElement(axes, "line", x1=str(ml), y1=str(mt), x2=str(ml), y2=str(mt + ph))
    labels = ET.SubElement(svg, "g", **{"font-size": "10", "font-family": "sans-serif"})
    for xv in _ticks(x_lo, x_hi):
        ET.SubElement(labels, "text", x=f"{px(xv):.2f}", y=str(mt + ph + 14), **{"text-anchor": "middle"}).text = f"{xv:.3g}"
    for yv in _ticks(y_lo, y_hi):
        ypos = mt + ph - (yv - y_lo) / (y_hi - y_lo) * ph
        shown = 10**yv if style.log_y else yv
        ET.SubElement(labels, "text", x=str(ml - 6), y=f"{ypos + 3:.2f}", **{"text-anchor": "end"}).text = f"{shown:.3g}"
    ET.SubElement(labels, "text", x=str(ml + pw / 2), y=str(style.height - 10), **{"text-anchor": "middle"}).text = "r/n"
    ylabel = metric.upper() + (" (log scale)" if style.log_y else "")
    ET.SubElement(labels, "text", x="14", y=str(mt + ph / 2),
                  transform=f"rotate(-90 14 {mt + ph / 2})", **{"text-anchor": "middle"}).text = ylabel

    methods = sorted({r.method for r in rows})
    for i, method in enumerate(methods):
        colour = PALETTE[i % len(PALETTE)]
        pts = sorted((r for r in rows if r.method == method), key=lambda r: r.xi)
        g = ET.SubElement(svg, "g", **{"class": f"method {method}"})
        band = [(px(r.xi), py(r.empirical_q95)) for r in pts] + [(px(r.xi), py(r.empirical_q05)) for r in reversed(pts)]
        ET.SubElement(g, "polygon", points=" ".join(f"{a:.2f},{b:.2f}" for a, b in band),
                      fill=colour, **{"fill-opacity": "0.15", "stroke": "none", "class": "band"})
        emp = " ".join(f"{px(r.xi):.2f},{py(r.empirical_mean):.2f}" for r in pts)
        ET.SubElement(g, "polyline", points=emp, fill="none", stroke=colour,
                      **{"stroke-dasharray": "5,4", "stroke-width": "1.5", "class": "empirical"})
        for r in pts:
            ET.SubElement(g, "circle", cx=f"{px(r.xi):.2f}", cy=f"{py(r.empirical_mean):.2f}", r="3",
                          fill=colour, **{"class": "marker"})
        th = [r for r in pts if r.theory_value is not None]
        if th:
            ET.SubElement(g, "polyline", points=" ".join(f"{px(r.xi):.2f},{py(r.theory_value):.2f}" for r in th),
                          fill="none", stroke=colour, **{"stroke-width": "2", "class": "theory"})
            for r in th:
                ET.SubElement(g, "rect", x=f"{px(r.xi) - 2:.2f}", y=f"{py(r.theory_value) - 2:.2f}",
                              width="4", height="4", fill=colour, **{"class": "theory-point"})
        ly = mt + 14 + 16 * i
        ET.SubElement(g, "line", x1=str(ml + pw + 12), y1=str(ly), x2=str(ml + pw + 32), y2=str(ly),
                      stroke=colour, **{"stroke-width": "2"})
        ET.SubElement(g, "text", x=str(ml + pw + 36), y=str(ly + 4),
                      **{"font-size": "10", "font-family": "sans-serif"}).text = method

    out = Path(output_path)
    ET.ElementTree(svg).write(out, encoding="utf-8", xml_declaration=True)
    return out
