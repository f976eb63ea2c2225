"""Figure rendering for persisted simulator outputs; display only."""

from .io import FigureInputError, Summary, Table, read_summary, read_table
from .render import FigureKind, FigureSpec, render

__all__ = [
    "FigureInputError",
    "FigureKind",
    "FigureSpec",
    "Summary",
    "Table",
    "read_summary",
    "read_table",
    "render",
]
