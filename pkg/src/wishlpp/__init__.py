"""Simulation and statistical verification lab for the generalized Wishart
eigenvalue process, last-passage percolation, and their shared Markov kernels."""

__version__ = "0.1.0"

from .sampling import ParameterSet, RngStream
from .stats import TestReport

__all__ = ["ParameterSet", "RngStream", "TestReport", "__version__"]
