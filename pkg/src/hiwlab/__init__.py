"""hiwlab: a numerical laboratory for half-integral weight cusp forms.

Truncated q-expansions with an exact integer backend, progression-sum
statistics and their moments, the dual summation identity with its
Gamma-ratio kernel, square-index Hecke action with the lift relation, and
sign-count surveys, all behind a reproducible CLI (`hiw`).
"""

__version__ = "0.1.0"

from . import hecke, modarith, progsums, qseries, signstats, voronoi, windows

__all__ = [
    "hecke",
    "modarith",
    "progsums",
    "qseries",
    "signstats",
    "voronoi",
    "windows",
    "__version__",
]
