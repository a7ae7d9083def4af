"""Report assembly and SVG figures.

Figures are drawn with matplotlib's SVG backend; a fixed hash salt, text kept
as text and no date metadata make the output byte-identical across runs.
"""

from __future__ import annotations

import io
import json
from collections import deque

import matplotlib
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure
from matplotlib.patches import Rectangle

from .frame import Frame

REPORT_SCHEMA = "report_v1"

matplotlib.rcParams["svg.hashsalt"] = "heatframe"
matplotlib.rcParams["svg.fonttype"] = "none"
matplotlib.rcParams["path.simplify"] = False


def svg_bytes(fig: Figure) -> bytes:
    FigureCanvasSVG(fig)
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    return buf.getvalue()


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# heat-path graph

def graph_layout(frame: Frame) -> tuple[list[str], list[tuple[str, str]], dict[str, tuple[float, float]]]:
    """Layered layout: breadth-first from the first least-connected node."""
    hide = frame.parents() - set(frame.components)
    edges = [(e.a, e.b) for e in frame.graph.edges if e.a not in hide and e.b not in hide]
    nodes = [n for n in frame.graph.nodes if any(n in e for e in edges)]
    if not nodes:
        return [], [], {}
    adj = {n: [] for n in nodes}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    layer: dict[str, int] = {}
    while len(layer) < len(nodes):
        rest = [n for n in nodes if n not in layer]
        start = min(rest, key=lambda n: (len(adj[n]), rest.index(n)))
        base = max(layer.values(), default=-1) + 1
        layer[start] = base
        q = deque([start])
        while q:
            n = q.popleft()
            for m in adj[n]:
                if m not in layer:
                    layer[m] = layer[n] + 1
                    q.append(m)
    pos = {}
    count: dict[int, int] = {}
    for n in nodes:
        k = count.get(layer[n], 0)
        count[layer[n]] = k + 1
        pos[n] = (float(layer[n]), -float(k))
    return nodes, edges, pos


def render_graph_figure(frame: Frame) -> bytes:
    nodes, edges, pos = graph_layout(frame)
    width = max((p[0] for p in pos.values()), default=0.0) + 1
    fig = Figure(figsize=(2.0 + 1.8 * width, 3.0))
    ax = fig.add_subplot()
    ax.set_axis_off()
    for a, b in edges:
        (x0, y0), (x1, y1) = pos[a], pos[b]
        ax.plot([x0, x1], [y0, y1], color="0.4", lw=1.2, zorder=1)
    for n in nodes:
        e = frame.entities.get(n)
        fluid = e is not None and e.state == "fluid"
        dashed = e is not None and e.is_insulator
        style = "round,pad=0.3" if fluid else "square,pad=0.3"
        x, y = pos[n]
        ax.text(x, y, n, ha="center", va="center", fontsize=9, zorder=3,
                bbox=dict(boxstyle=style, fc="#dbe9f6" if fluid else "#f3e1c7",
                          ec="0.2", ls="--" if dashed else "-"))
    if pos:
        xs = [p[0] for p in pos.values()]
        ys = [p[1] for p in pos.values()]
        ax.set_xlim(min(xs) - 0.7, max(xs) + 0.7)
        ax.set_ylim(min(ys) - 0.7, max(ys) + 0.7)
    ax.set_title(f"heat transfer paths: {frame.source_name}", fontsize=10)
    return svg_bytes(fig)


# ---------------------------------------------------------------------------
# geometry

def _bc_label(rec, template) -> str:
    if rec.kind == "robin":
        return f"h={float(template.value(rec.h)):g}, T={float(template.value(rec.T_fluid)):g}"
    if rec.kind == "dirichlet":
        return f"T={float(template.value(rec.T)):g}"
    if rec.kind == "neumann":
        return f"q={float(template.value(rec.g)):g}"
    return "insulated"


def component_rects(system, cross: str | None = None) -> list[tuple[str, float, float, float, float]]:
    out = []
    for c in system.components:
        x0, x1 = (float(v) for v in (c.x_left, c.x_right))
        if cross is None:
            b = float(c.shape.section[1]) if c.shape.section else 1.0
            y0, y1 = -b / 2, b / 2
        else:
            y0, y1 = (float(v) for v in c.shape.interval(cross))
        out.append((c.name, x0, x1, y0, y1))
    return out


def render_geometry_figure(system, template, cross: str | None = None) -> bytes:
    rects = component_rects(system, cross)
    fig = Figure(figsize=(7.0, 3.6))
    ax = fig.add_subplot()
    colors = ["#e7c79a", "#c9dba5", "#a8c8e0", "#e3b5c9", "#d7d0a8", "#b9e0d4"]
    for k, (name, x0, x1, y0, y1) in enumerate(rects):
        ax.add_patch(Rectangle((x0, y0), x1 - x0, y1 - y0, fc=colors[k % len(colors)], ec="0.2", lw=1.0))
        ax.text(0.5 * (x0 + x1), 0.5 * (y0 + y1), name, ha="center", va="center", fontsize=8)
    stations = sorted({v for r in rects for v in r[1:3]})
    for x in stations:
        ax.axvline(x, color="0.6", ls=":", lw=0.8)
    for c, (name, x0, x1, y0, y1) in zip(system.components, rects):
        for p, face in enumerate(c.ports):
            rec = c.bc(face.id)
            if rec is None or rec.kind == "insulated":
                continue
            x = x0 if p == 0 else x1
            ax.annotate(_bc_label(rec, template), (x, 0.5 * (y0 + y1)), fontsize=7,
                        xytext=(-6 if p == 0 else 6, 0), textcoords="offset points",
                        ha="right" if p == 0 else "left", va="center", rotation=90)
        lat = c.bc("lateral")
        if lat is not None and lat.kind != "insulated":
            ax.text(0.5 * (x0 + x1), y1, "lateral: " + _bc_label(lat, template), ha="center", va="bottom", fontsize=7)
    xs = [v for r in rects for v in r[1:3]]
    ys = [v for r in rects for v in r[3:5]]
    dx, dy = max(xs) - min(xs), max(ys) - min(ys)
    ax.set_xlim(min(xs) - 0.15 * dx, max(xs) + 0.15 * dx)
    ax.set_ylim(min(ys) - 0.25 * dy, max(ys) + 0.25 * dy)
    ax.set_aspect("equal" if cross is not None else "auto")
    ax.set_xlabel(system.components[0].shape.through)
    if cross is not None:
        ax.set_ylabel(cross)
    ax.set_xticks(stations)
    ax.tick_params(labelsize=7)
    return svg_bytes(fig)


# ---------------------------------------------------------------------------
# fields

def render_field_curve(samples: list[dict], xlabel: str = "x") -> bytes:
    fig = Figure(figsize=(6.0, 3.6))
    ax = fig.add_subplot()
    for k, s in enumerate(samples):
        x, T = s["x"], s["T"]
        if k % 2:
            ax.axvspan(x[0], x[-1], color="0.93", lw=0)
        ax.plot(x, T, lw=1.6, label=s["component"])
    ax.set_xlabel(xlabel)
    ax.set_ylabel("T")
    ax.legend(fontsize=8)
    ax.grid(True, lw=0.3)
    return svg_bytes(fig)


def render_field_contour(mesh, values, xlabel: str, ylabel: str) -> bytes:
    fig = Figure(figsize=(5.0, 5.0))
    ax = fig.add_subplot()
    cs = ax.tricontourf(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles, values, levels=16, cmap="inferno")
    fig.colorbar(cs, ax=ax, label="T")
    ax.set_aspect("equal")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return svg_bytes(fig)


def render_bounds_figure(panel: dict) -> bytes:
    fig = Figure(figsize=(5.0, 2.0))
    ax = fig.add_subplot()
    lb, ub = panel["H_LB"], panel["H_UB"]
    ax.plot([lb, ub], [0, 0], color="0.3", lw=6, solid_capstyle="butt", alpha=0.35)
    ax.plot([lb], [0], "v", color="tab:blue", label=f"H_LB = {lb:.6f}")
    ax.plot([ub], [0], "^", color="tab:red", label=f"H_UB = {ub:.6f}")
    if panel.get("H_FE") is not None:
        eps = panel.get("fe_error_estimate") or 0.0
        ax.errorbar([panel["H_FE"]], [0], xerr=[eps], fmt="o", color="k", capsize=4,
                    label=f"H_FE = {panel['H_FE']:.6f}")
    pad = 0.1 * max(ub - lb, 1e-3)
    ax.set_xlim(lb - pad, ub + pad)
    ax.set_yticks([])
    ax.set_xlabel("H")
    ax.legend(fontsize=7, loc="upper center", ncol=3, frameon=False, bbox_to_anchor=(0.5, 1.35))
    fig.subplots_adjust(top=0.7, bottom=0.3)
    return svg_bytes(fig)
