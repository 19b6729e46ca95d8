"""Figure generation for pseco experiment CSVs.

This package consumes only the CSV files the main package writes; it never
imports the main package.
"""

from .figures import FIGURE_KINDS, PlotDataError, render

__all__ = ["FIGURE_KINDS", "PlotDataError", "render"]
