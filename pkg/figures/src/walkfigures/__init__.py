"""Figure regeneration from walk-run CSV series."""

from .render import (
    FIGURE_KINDS,
    FigureJob,
    MissingStepError,
    RenderResult,
    SchemaError,
    render,
)

__version__ = "0.1.0"
