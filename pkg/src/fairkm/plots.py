"""Chart output for sweep and benchmark reports.

Two render paths: a dependency-free SVG line-chart writer (fixed 800x600
canvas, linear axes, one polyline per series) used for the sweep's
metric-vs-lambda charts, and matplotlib PNG figures rendered alongside the
delimited report files. Output bytes are deterministic for identical inputs.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path
from typing import Mapping, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

PALETTE = ["#1b6ca8", "#d1495b", "#2e933c", "#e0a100", "#6f42c1", "#495057"]

_WIDTH, _HEIGHT = 800, 600
_MARGIN_LEFT, _MARGIN_RIGHT = 80, 80
_MARGIN_TOP, _MARGIN_BOTTOM = 60, 70


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _scale(values: Sequence[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:  # flat series still needs a nonzero span
        lo, hi = lo - 1.0, hi + 1.0
    return lo, hi


def line_chart_svg(
    path: Union[str, Path],
    x_values: Sequence[float],
    series: Mapping[str, Sequence[float]],
    title: str,
    x_label: str,
) -> None:
    """Write a line chart with one polyline per series.

    With exactly two series each gets its own y scale (left/right axis
    labels); otherwise all series share one y scale.
    """
    if not series:
        raise ValueError("need at least one series")
    names = list(series)
    x_lo, x_hi = _scale(x_values)
    plot_w = _WIDTH - _MARGIN_LEFT - _MARGIN_RIGHT
    plot_h = _HEIGHT - _MARGIN_TOP - _MARGIN_BOTTOM

    def sx(v: float) -> float:
        return _MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    dual = len(names) == 2
    if dual:
        scales = [_scale(series[n]) for n in names]
    else:
        all_vals = [v for n in names for v in series[n]]
        scales = [_scale(all_vals)] * len(names)

    def sy(v: float, idx: int) -> float:
        lo, hi = scales[idx]
        return _MARGIN_TOP + plot_h - (v - lo) / (hi - lo) * plot_h

    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(_WIDTH),
            "height": str(_HEIGHT),
            "viewBox": f"0 0 {_WIDTH} {_HEIGHT}",
        },
    )
    ET.SubElement(svg, "rect", {
        "x": "0", "y": "0", "width": str(_WIDTH), "height": str(_HEIGHT),
        "fill": "white",
    })
    t = ET.SubElement(svg, "text", {
        "x": str(_WIDTH // 2), "y": "30", "text-anchor": "middle",
        "font-size": "18", "font-family": "sans-serif",
    })
    t.text = title

    # axes
    axis_style = {"stroke": "#333333", "stroke-width": "1"}
    ET.SubElement(svg, "line", {
        "x1": _fmt(_MARGIN_LEFT), "y1": _fmt(_MARGIN_TOP + plot_h),
        "x2": _fmt(_MARGIN_LEFT + plot_w), "y2": _fmt(_MARGIN_TOP + plot_h),
        **axis_style,
    })
    ET.SubElement(svg, "line", {
        "x1": _fmt(_MARGIN_LEFT), "y1": _fmt(_MARGIN_TOP),
        "x2": _fmt(_MARGIN_LEFT), "y2": _fmt(_MARGIN_TOP + plot_h),
        **axis_style,
    })
    if dual:
        ET.SubElement(svg, "line", {
            "x1": _fmt(_MARGIN_LEFT + plot_w), "y1": _fmt(_MARGIN_TOP),
            "x2": _fmt(_MARGIN_LEFT + plot_w), "y2": _fmt(_MARGIN_TOP + plot_h),
            **axis_style,
        })

    # x ticks
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xv = x_lo + frac * (x_hi - x_lo)
        px = sx(xv)
        ET.SubElement(svg, "line", {
            "x1": _fmt(px), "y1": _fmt(_MARGIN_TOP + plot_h),
            "x2": _fmt(px), "y2": _fmt(_MARGIN_TOP + plot_h + 6), **axis_style,
        })
        lab = ET.SubElement(svg, "text", {
            "x": _fmt(px), "y": _fmt(_MARGIN_TOP + plot_h + 22),
            "text-anchor": "middle", "font-size": "12", "font-family": "sans-serif",
        })
        lab.text = _fmt(xv)
    xl = ET.SubElement(svg, "text", {
        "x": str(_WIDTH // 2), "y": str(_HEIGHT - 20), "text-anchor": "middle",
        "font-size": "14", "font-family": "sans-serif",
    })
    xl.text = x_label

    # y ticks: left axis for the first scale, right axis for the second
    tick_axes = [(0, _MARGIN_LEFT, "end", -8)] + (
        [(1, _MARGIN_LEFT + plot_w, "start", 8)] if dual else []
    )
    for idx, px, anchor, off in tick_axes:
        lo, hi = scales[idx]
        for frac in (0.0, 0.5, 1.0):
            yv = lo + frac * (hi - lo)
            py = sy(yv, idx)
            lab = ET.SubElement(svg, "text", {
                "x": _fmt(px + off), "y": _fmt(py + 4),
                "text-anchor": anchor, "font-size": "12",
                "font-family": "sans-serif",
                "fill": PALETTE[idx] if dual else "#333333",
            })
            lab.text = _fmt(yv)

    for i, name in enumerate(names):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(
            f"{_fmt(sx(x))},{_fmt(sy(y, i if dual else 0))}"
            for x, y in zip(x_values, series[name])
        )
        ET.SubElement(svg, "polyline", {
            "points": pts, "fill": "none", "stroke": color, "stroke-width": "2",
        })
        # legend entry
        lx = _MARGIN_LEFT + 10 + i * 150
        ly = _MARGIN_TOP - 12
        ET.SubElement(svg, "line", {
            "x1": _fmt(lx), "y1": _fmt(ly), "x2": _fmt(lx + 24), "y2": _fmt(ly),
            "stroke": color, "stroke-width": "3",
        })
        lab = ET.SubElement(svg, "text", {
            "x": _fmt(lx + 30), "y": _fmt(ly + 4), "font-size": "13",
            "font-family": "sans-serif",
        })
        lab.text = name

    ET.ElementTree(svg).write(path, xml_declaration=True, encoding="utf-8")


def line_chart_png(
    path: Union[str, Path],
    x_values: Sequence[float],
    series: Mapping[str, Sequence[float]],
    title: str,
    x_label: str,
) -> None:
    """Matplotlib rendering of the same chart; two series get twin axes."""
    names = list(series)
    fig, ax = plt.subplots(figsize=(8, 5))
    if len(names) == 2:
        ax2 = ax.twinx()
        ax.plot(x_values, series[names[0]], color=PALETTE[0], marker="o", label=names[0])
        ax2.plot(x_values, series[names[1]], color=PALETTE[1], marker="s", label=names[1])
        ax.set_ylabel(names[0], color=PALETTE[0])
        ax2.set_ylabel(names[1], color=PALETTE[1])
        lines = ax.get_lines() + ax2.get_lines()
        ax.legend(lines, [ln.get_label() for ln in lines], loc="best")
    else:
        for i, name in enumerate(names):
            ax.plot(x_values, series[name], color=PALETTE[i % len(PALETTE)],
                    marker="o", label=name)
        ax.legend(loc="best")
    ax.set_xlabel(x_label)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def grouped_bar_png(
    path: Union[str, Path],
    group_labels: Sequence[str],
    series: Mapping[str, Sequence[float]],
    title: str,
    y_label: str,
) -> None:
    """Grouped bar chart: one bar group per label, one bar per series."""
    import numpy as np

    names = list(series)
    x = np.arange(len(group_labels), dtype=float)
    width = 0.8 / max(len(names), 1)
    fig, ax = plt.subplots(figsize=(8, 5))
    for i, name in enumerate(names):
        ax.bar(x + (i - (len(names) - 1) / 2) * width, series[name],
               width=width, color=PALETTE[i % len(PALETTE)], label=name)
    ax.set_xticks(x)
    ax.set_xticklabels(group_labels)
    ax.set_ylabel(y_label)
    ax.set_title(title)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def per_metric_bars_png(
    path: Union[str, Path],
    metrics: Mapping[str, Mapping[str, float]],
    title: str,
) -> None:
    """One subplot per metric (metrics vary wildly in scale), one bar per
    method within each subplot."""
    names = list(metrics)
    ncols = 2
    nrows = (len(names) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(9, 3.2 * nrows), squeeze=False)
    for idx, name in enumerate(names):
        ax = axes[idx // ncols][idx % ncols]
        methods = list(metrics[name])
        values = [metrics[name][m] for m in methods]
        ax.bar(range(len(methods)), values,
               color=[PALETTE[i % len(PALETTE)] for i in range(len(methods))])
        ax.set_xticks(range(len(methods)))
        ax.set_xticklabels(methods, rotation=20, ha="right", fontsize=8)
        ax.set_title(name, fontsize=11)
    for idx in range(len(names), nrows * ncols):
        axes[idx // ncols][idx % ncols].axis("off")
    fig.suptitle(title)
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    fig.savefig(path, dpi=120)
    plt.close(fig)
