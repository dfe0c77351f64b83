"""Figure rendering for cdquench CSV reports."""

from .plotting import PlotDataError, PlotSpec, RenderReport, render

__all__ = ["PlotDataError", "PlotSpec", "RenderReport", "render"]
