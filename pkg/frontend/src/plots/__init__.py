"""Offline figure generation from gks-control CSV outputs."""

from .render import KINDS, PlotJob, SchemaError, render

__all__ = ["KINDS", "PlotJob", "SchemaError", "render"]
