"""Figure regeneration for PT-spectrum scan outputs.

Consumes the scan CSV / fit JSON contract only; does not depend on the
spectral engine package.
"""

__version__ = "0.1.0"

from .render import KINDS, PlotSpec, SchemaError, load_rows, render  # noqa: F401
