"""Thin in-process bindings for training-loop callers.

Every function mirrors one core operation one-to-one. Inputs and outputs
cross the boundary as plain scalars, lists, and JSON-compatible dicts; no
core objects leak out. Core exceptions propagate unchanged, carrying their
stable ``code`` attribute.
"""

from .api import (
    PackerHandle,
    bind_build_epoch,
    bind_filter_record,
    bind_flush,
    bind_normalized_weights,
    bind_plan_layout,
    bind_push,
)

import tilepack

__version__ = tilepack.__version__

__all__ = [
    "PackerHandle",
    "bind_build_epoch",
    "bind_filter_record",
    "bind_flush",
    "bind_normalized_weights",
    "bind_plan_layout",
    "bind_push",
]
