"""Read-only figure renderers for exsurf CSV datasets."""

__version__ = "0.1.0"

from .render import FIGURES, FigureSpec, render

__all__ = ["FIGURES", "FigureSpec", "render"]
