"""Spectral minimal 3-partitions of rectangles.

Modules
-------
analytic
    Closed-form Dirichlet spectrum, Courant-sharp rules and the reference
    3-partition energy.
nodal_family
    The two-parameter eigenfunction family at the critical aspect ratio and
    its nodal sets.
discretization
    Lattice grids and sparse operators (Dirichlet, mixed, masked, magnetic).
eigensolver
    Lowest eigenpairs by shift-invert Lanczos with explicit residual checks.
aharonov_bohm
    Isospectrality between the half-flux operator and half-domain problems.
partition
    Sweeps over mixed problems producing candidate 3-partitions.
cli, reporting, svg
    Command-line front end and artifact export.
"""

from .analytic import RectGeometry, courant_sharp_cases, spectrum_sorted, three_partition_energy
from .discretization import Grid, SparseOperator
from .eigensolver import NonConvergenceError, SpectrumResult, lowest_eigenpairs

__version__ = "0.1.0"

__all__ = [
    "RectGeometry",
    "courant_sharp_cases",
    "spectrum_sorted",
    "three_partition_energy",
    "Grid",
    "SparseOperator",
    "NonConvergenceError",
    "SpectrumResult",
    "lowest_eigenpairs",
]
