"""scumlab: simulation and certified diagnostics for chains with unbounded memory."""

__version__ = "0.1.0"

from .coupling import (
    disagreement_statistics,
    maximal_coupling_step,
    sample_coupled_paths,
)
from .families import (
    BinaryAR,
    MarkovChain,
    MarkovMixture,
    PoissonRegression,
    RenewalKernel,
    WindowVoteKernel,
    markov_approximation,
)
from .kernels import PastSpec, sample_paths
from .regularity import concentration_constants, gcb_constants, profile
from .series import GeometricTail, LagSeries, PowerTail

__all__ = [
    "__version__",
    "BinaryAR",
    "GeometricTail",
    "LagSeries",
    "MarkovChain",
    "MarkovMixture",
    "PastSpec",
    "PoissonRegression",
    "PowerTail",
    "RenewalKernel",
    "WindowVoteKernel",
    "concentration_constants",
    "disagreement_statistics",
    "gcb_constants",
    "markov_approximation",
    "maximal_coupling_step",
    "profile",
    "sample_coupled_paths",
    "sample_paths",
]
