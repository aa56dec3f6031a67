"""Deterministic figure rendering for levy-dividend-opt CSV datasets."""

from .csvio import SchemaError, Table, read_table
from .figures import FIGURE_IDS, SIDES, FigureSpec, render

__all__ = ["FIGURE_IDS", "SIDES", "FigureSpec", "SchemaError", "Table", "read_table", "render"]
