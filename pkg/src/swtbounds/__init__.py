"""Schrieffer-Wolff transformations and rigorous error bounds for constrained dynamics."""
from . import bounds, closed, lattice, linalg, opensys, swt
from .errors import *  # noqa: F401,F403

__version__ = "0.1.0"
