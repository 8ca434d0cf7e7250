"""Toolkit for creating, measuring, filtering, and concentrating two-qubit
maximally entangled mixed states (MEMS)."""

__version__ = "0.1.0"

from . import analysis, apparatus, concentrate, qmat, states, tomography
from .errors import MemsimError

__all__ = [
    "__version__",
    "MemsimError",
    "analysis",
    "apparatus",
    "concentrate",
    "qmat",
    "states",
    "tomography",
]
