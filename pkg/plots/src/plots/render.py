"""Render the toolkit's CSV outputs into static images.

One plot kind per CSV contract: convergence experiments
(``method,N,R,estimate,stderr,evals,wall_seconds`` plus ``#rate`` rows),
profiles (``coord,value,oracle``), and log-log singularity zooms built from a
profile together with the matching singularity scan. Rendering is headless
and deterministic: fixed style, no timestamps, rerunning on unchanged inputs
writes identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

__all__ = ["PlotJob", "PlotKind", "SchemaError", "build_figure", "render"]

_DPI = 110


class SchemaError(ValueError):
    """An input CSV does not match the expected column contract."""


class PlotKind(Enum):
    CONVERGENCE = "convergence"
    PROFILE = "profile"
    SINGULARITY_ZOOM = "singularity-zoom"


@dataclass(frozen=True)
class PlotJob:
    """One batch rendering request: input CSVs, kind, output image path."""

    inputs: tuple[str, ...]
    kind: PlotKind
    out: str
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None

    def __post_init__(self) -> None:
        needed = 2 if self.kind is PlotKind.SINGULARITY_ZOOM else 1
        if len(self.inputs) != needed:
            raise SchemaError(
                f"{self.kind.value} takes exactly {needed} input file(s), got {len(self.inputs)}"
            )


def _read_csv(path: str) -> tuple[list[dict[str, str]], dict[str, float]]:
    """Data rows keyed by header, plus any ``#rate`` metadata.

    Other ``#`` lines (e.g. a trailing ``#error`` from an interrupted run)
    are skipped; the rows flushed before the interruption remain usable.
    """
    rates: dict[str, float] = {}
    data_lines: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if line.startswith("#rate,"):
                    _, method, value = line.split(",", 2)
                    rates[method] = float(value)
                continue
            data_lines.append(line)
    if not data_lines:
        raise SchemaError(f"{path}: empty, no header row")
    return list(csv.DictReader(data_lines)), rates


def _require_columns(path: str, rows: Sequence[dict], needed: Sequence[str]) -> None:
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    found = set(rows[0])
    missing = [c for c in needed if c not in found]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}, found {sorted(found)}")


def _floats(path: str, rows: Sequence[dict], column: str) -> list[float]:
    out = []
    for i, row in enumerate(rows, start=1):
        cell = row[column]
        try:
            out.append(float(cell))
        except (TypeError, ValueError):
            raise SchemaError(f"{path}: column {column!r}, data row {i}: not a number: {cell!r}") from None
    return out


def _draw_convergence(ax, path: str) -> None:
    rows, rates = _read_csv(path)
    _require_columns(path, rows, ("method", "N", "R", "stderr"))
    n_vals = _floats(path, rows, "N")
    r_vals = _floats(path, rows, "R")
    errs = _floats(path, rows, "stderr")

    # series keep the CSV's first-appearance order and are never dropped
    series: dict[str, list[tuple[float, float]]] = {}
    for row, n, r, e in zip(rows, n_vals, r_vals, errs):
        series.setdefault(row["method"], []).append((n * r, e))
    for method, points in series.items():
        if len(points) < 2:
            raise SchemaError(f"{path}: series {method!r} has {len(points)} row(s), need at least 2")
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.loglog(xs, ys, marker="o", markersize=4, label=method)
        if method in rates:
            ax.annotate(
                f"rate {rates[method]:.2f}",
                xy=(xs[-1], ys[-1]),
                xytext=(5, 4),
                textcoords="offset points",
                fontsize=8,
            )
    ax.set_xlabel("total points (N x R)")
    ax.set_ylabel("standard error")
    ax.grid(True, which="both", linewidth=0.3, alpha=0.6)
    ax.legend()


def _draw_profile(ax, path: str) -> None:
    rows, _ = _read_csv(path)
    _require_columns(path, rows, ("coord", "value"))
    xs = _floats(path, rows, "coord")
    ys = _floats(path, rows, "value")
    ax.plot(xs, ys, label="preintegrated")
    if "oracle" in rows[0]:
        # the oracle column may be present but empty (no closed form there)
        pairs = [
            (x, float(row["oracle"]))
            for x, row in zip(xs, rows)
            if (row["oracle"] or "").strip()
        ]
        if pairs:
            ax.plot(
                [p[0] for p in pairs],
                [p[1] for p in pairs],
                linestyle="--",
                label="closed form",
            )
    ax.set_xlabel("coordinate")
    ax.set_ylabel("value")
    ax.grid(True, linewidth=0.3, alpha=0.6)
    ax.legend()


def _draw_zoom(ax, profile_path: str, sing_path: str) -> None:
    prows, _ = _read_csv(profile_path)
    _require_columns(profile_path, prows, ("coord", "value"))
    srows, _ = _read_csv(sing_path)
    _require_columns(sing_path, srows, ("location", "exponent", "amplitude"))

    picked = next((r for r in srows if (r["location"] or "").strip()), None)
    if picked is None:
        raise SchemaError(f"{sing_path}: no row with a located singularity")
    location = float(picked["location"])
    exponent = float(picked["exponent"])
    amplitude = float(picked["amplitude"])

    coords = _floats(profile_path, prows, "coord")
    values = _floats(profile_path, prows, "value")
    xs = []
    ys = []
    for c, v in zip(coords, values):
        if c > location and v > 0.0:
            xs.append(c - location)
            ys.append(v)
    if len(xs) < 2:
        raise SchemaError(f"{profile_path}: fewer than 2 usable points right of the singularity")

    ax.loglog(xs, ys, marker=".", linestyle="none", label="profile")
    # the guide comes straight from the scan's fit, never re-fitted here
    ax.loglog(xs, [amplitude * x**exponent for x in xs], linestyle="--", label=f"slope {exponent:.3g}")
    ax.set_xlabel("coordinate - location")
    ax.set_ylabel("value")
    ax.grid(True, which="both", linewidth=0.3, alpha=0.6)
    ax.legend()


def build_figure(job: PlotJob):
    """Parse the job's inputs and return the drawn matplotlib figure."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    try:
        if job.kind is PlotKind.CONVERGENCE:
            _draw_convergence(ax, job.inputs[0])
        elif job.kind is PlotKind.PROFILE:
            _draw_profile(ax, job.inputs[0])
        else:
            _draw_zoom(ax, job.inputs[0], job.inputs[1])
        if job.title is not None:
            ax.set_title(job.title)
        if job.xlabel is not None:
            ax.set_xlabel(job.xlabel)
        if job.ylabel is not None:
            ax.set_ylabel(job.ylabel)
    except Exception:
        plt.close(fig)
        raise
    return fig


def render(job: PlotJob) -> str:
    """Render the job to ``job.out`` and return that path.

    Inputs are parsed before the output is opened, so a rejected job never
    leaves a partial image behind. The Software metadata field is suppressed
    to keep reruns byte-identical.
    """
    fig = build_figure(job)
    try:
        fig.savefig(job.out, dpi=_DPI, metadata={"Software": None})
    finally:
        plt.close(fig)
    return job.out
