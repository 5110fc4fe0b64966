"""Post-processing figures for simulator CSV outputs."""

from .render import KINDS, ReportError, ReportRequest, build_figure, main, render

__all__ = ["KINDS", "ReportError", "ReportRequest", "build_figure", "main", "render"]
