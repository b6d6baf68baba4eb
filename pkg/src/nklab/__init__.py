"""nklab: exact and Monte Carlo tools for NK fitness landscapes on a ring.

Modules
-------
landscape      deterministic landscapes, genomes, overlaps R and Q
enumeration    exhaustive ground states, Gibbs measures, coupled maxima
combinatorics  exact genome counts by epistatic overlap
theory         closed forms: beta_c, alpha_*, gap bounds, beta_p, orthants
sampler        Metropolis, parallel tempering, thermodynamic integration
paths          bridge paths between genomes, adaptive walks
experiments    registered sweeps; ``cli`` wraps everything as ``nklab``
"""
from __future__ import annotations

__version__ = "0.1.0"

from ._backend import NAME as backend
from .landscape import (
    Genome,
    Landscape,
    LandscapeSpec,
    OverlapValue,
    interpolated_pair,
    k_from_alpha,
    make_landscape,
    overlap_Q,
    overlap_R,
)
from . import combinatorics, enumeration, paths, sampler, theory

__all__ = [
    "__version__", "backend",
    "Genome", "Landscape", "LandscapeSpec", "OverlapValue",
    "interpolated_pair", "k_from_alpha", "make_landscape", "overlap_Q", "overlap_R",
    "combinatorics", "enumeration", "paths", "sampler", "theory",
]
