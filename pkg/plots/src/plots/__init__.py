"""Batch plotter for the preintqmc CSV outputs."""

from .render import PlotJob, PlotKind, SchemaError, build_figure, render

__all__ = ["PlotJob", "PlotKind", "SchemaError", "build_figure", "render"]
