"""Render wilsonmg experiment CSV files and field dumps into figures.

The package reads only the documented CSV schemas and plain-text grid dumps
of the solver harness; it has no access to solver internals.
"""

from .spec import PlotSpec, load_spec
from .render import RenderReport, render

__all__ = ["PlotSpec", "RenderReport", "load_spec", "render"]
