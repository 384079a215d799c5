"""Numerical lab for STFT time-frequency concentration operators."""
from __future__ import annotations

from ._accel import HAS_NUMBA, USE_NUMBA
from .errors import HypothesisError, TflabError
from .geometry import Dilated, Disk, Polygon, Rect, Sector
from .operator import Spectrum, assemble_galerkin, eigen_spectrum
from .windows import Window

__version__ = "0.1.0"

__all__ = [
    "HAS_NUMBA",
    "USE_NUMBA",
    "Dilated",
    "Disk",
    "HypothesisError",
    "Polygon",
    "Rect",
    "Sector",
    "Spectrum",
    "TflabError",
    "Window",
    "assemble_galerkin",
    "eigen_spectrum",
    "__version__",
]
