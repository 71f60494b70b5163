"""Verification lab for gain-of-analyticity in 1D Schrodinger evolution.

Exact spectral solvers (free and gauge-linearizable cubic-derivative),
Gevrey-norm diagnostics built on the Galilean vector field x + 2it d/dx,
and brute-force oracles for the underlying multi-index inequalities.
"""

__version__ = "0.1.0"

from .grid import Field, Grid1D, Spectrum
from .multiindex import LogReal, MultiIndex

__all__ = ["Field", "Grid1D", "LogReal", "MultiIndex", "Spectrum", "__version__"]
