"""Static figure rendering for skqd benchmark CSVs."""

from .render import EmptyDataError, PlotSpec, SchemaError, render

__version__ = "0.1.0"
