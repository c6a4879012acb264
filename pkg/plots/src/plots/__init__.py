"""Trend figures rendered from aeromec summary CSV files."""

from plots.figures import FIGURES, FigureSpec, SchemaError, render

__version__ = "0.1.0"

__all__ = ["FIGURES", "FigureSpec", "SchemaError", "render", "__version__"]
