"""Deterministic figure rendering for dqchain CSV outputs."""

__version__ = "0.1.0"

from .recipes import FigureRecipe, FIGURE_IDS          # noqa: F401
from .render import render                             # noqa: F401
