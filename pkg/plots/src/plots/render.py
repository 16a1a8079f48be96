"""Figure rendering from orbitmeter trace CSVs.

Three figure kinds:

* ``average-trace``: running averages against horizon (log-x), one line
  per (target, orbit) series, optional horizontal reference lines for
  closed-form limsup/liminf values;
* ``mass-vs-generation``: cover mass accumulation against cylinder
  generation;
* ``means-grid``: one panel per summation order, for oscillation of
  higher-order means.

Rendering is read-only over its inputs and fully deterministic: the
style is fixed by a seed that only permutes a color palette, and every
render writes a ``<output>.data.json`` sidecar with the exact plotted
series, which is the artifact golden-file tests compare (raster bytes
are not a stable contract across matplotlib versions).
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

TRACE_HEADER = ["n", "value", "target", "orbit_id"]
KINDS = ("average-trace", "mass-vs-generation", "means-grid")

PALETTE = [
    "#1b6ca8",
    "#c23b22",
    "#2e8540",
    "#7b4ea3",
    "#b8860b",
    "#366f6f",
    "#8c4646",
]


class RenderError(Exception):
    """Bad inputs: missing files, schema mismatches, empty series."""


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple[float, ...]
    y: tuple[float, ...]


@dataclass(frozen=True)
class PlotJob:
    kind: str
    inputs: tuple[str, ...]
    output: str
    ref: str | None = None
    style_seed: int = 0
    dpi: int = 120
    title: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; pick one of {KINDS}")
        if not self.inputs:
            raise RenderError("need at least one input CSV")


def _parse_value(raw: str) -> float:
    if "/" in raw:
        num, den = raw.split("/", 1)
        return int(num) / int(den)
    return float(raw)


def read_trace_series(path: str | Path) -> list[Series]:
    """Parse one trace CSV into per-(target, orbit) series.

    Refuses files whose header is not the published trace schema.
    """
    path = Path(path)
    if not path.exists():
        raise RenderError(f"input {path} does not exist")
    grouped: dict[tuple[str, str], list[tuple[float, float]]] = {}
    order: list[tuple[str, str]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRACE_HEADER:
            raise RenderError(
                f"{path} is not an orbitmeter trace CSV (header {header!r})"
            )
        for row in reader:
            if len(row) != len(TRACE_HEADER):
                raise RenderError(f"{path} has a malformed row: {row!r}")
            n, value, target, orbit_id = row
            key = (target, orbit_id)
            if key not in grouped:
                grouped[key] = []
                order.append(key)
            grouped[key].append((float(n), _parse_value(value)))
    if not order:
        raise RenderError(f"{path} contains no data rows")
    out = []
    for target, orbit_id in order:
        pts = grouped[(target, orbit_id)]
        out.append(
            Series(
                label=f"{target} @ {orbit_id}",
                x=tuple(p[0] for p in pts),
                y=tuple(p[1] for p in pts),
            )
        )
    return out


def load_reference_lines(path: str | Path) -> list[tuple[str, float]]:
    """Reference values from a JSON report.

    Accepts the orbitmeter ``bowen.json`` shape (``closed_form`` with
    ``limsup``/``liminf``), a flat ``{"limsup": .., "liminf": ..}``, or
    a generic ``{"lines": [{"label": .., "value": ..}, ...]}``.
    """
    with open(path) as fh:
        data = json.load(fh)
    if "lines" in data:
        return [(str(l["label"]), float(l["value"])) for l in data["lines"]]
    source = data.get("closed_form", data)
    lines = []
    for key in ("limsup", "liminf"):
        if key in source:
            lines.append((key, float(source[key])))
    if not lines:
        raise RenderError(f"{path} carries no recognizable reference values")
    return lines


def _colors(seed: int, count: int) -> list[str]:
    palette = PALETTE.copy()
    random.Random(seed).shuffle(palette)
    return [palette[i % len(palette)] for i in range(count)]


def render(job: PlotJob) -> Path:
    """Render the figure and its plotted-data sidecar; returns the image path."""
    all_series: list[Series] = []
    for path in job.inputs:
        all_series.extend(read_trace_series(path))
    ref_lines = load_reference_lines(job.ref) if job.ref else []
    colors = _colors(job.style_seed, len(all_series))

    if job.kind == "means-grid":
        panels = len(all_series)
        fig, axes = plt.subplots(
            1, panels, figsize=(4.0 * panels, 3.2), dpi=job.dpi, squeeze=False
        )
        for ax, series, color in zip(axes[0], all_series, colors):
            ax.plot(series.x, series.y, color=color, lw=1.2)
            ax.set_xscale("log")
            ax.set_title(series.label, fontsize=9)
            ax.set_xlabel("n")
        axes[0][0].set_ylabel("mean value")
    else:
        panels = 1
        fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=job.dpi)
        for series, color in zip(all_series, colors):
            marker = "o" if job.kind == "mass-vs-generation" else None
            ax.plot(series.x, series.y, color=color, lw=1.2, marker=marker, label=series.label)
        if job.kind == "average-trace":
            ax.set_xscale("log")
            ax.set_xlabel("horizon n")
            ax.set_ylabel("running average")
        else:
            ax.set_xlabel("generation")
            ax.set_ylabel("cover mass")
        for label, value in ref_lines:
            ax.axhline(value, color="#444444", ls="--", lw=1.0)
            ax.annotate(
                f"{label} = {value:.4g}",
                xy=(1.0, value),
                xycoords=("axes fraction", "data"),
                ha="right",
                va="bottom",
                fontsize=8,
                color="#444444",
            )
        ax.legend(fontsize=8, loc="best")
    if job.title:
        fig.suptitle(job.title)

    out = Path(job.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(out)
    plt.close(fig)

    sidecar = {
        "kind": job.kind,
        "style_seed": job.style_seed,
        "dpi": job.dpi,
        "panels": panels,
        "series": [
            {"label": s.label, "x": list(s.x), "y": list(s.y), "color": c}
            for s, c in zip(all_series, colors)
        ],
        "reference_lines": [{"label": l, "value": v} for l, v in ref_lines],
    }
    with open(_sidecar_path(out), "w") as fh:
        json.dump(sidecar, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return out


def _sidecar_path(output: Path) -> Path:
    return output.with_name(output.name + ".data.json")
