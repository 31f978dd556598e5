"""Figure generation for the QKD routing simulator's CSV outputs."""

from .data import PlotDataError, SchemaError, load_sweep
from .figures import FigureSpec, default_specs, plot

__all__ = [
    "FigureSpec",
    "PlotDataError",
    "SchemaError",
    "default_specs",
    "load_sweep",
    "plot",
]
