"""Numeric kernels with switchable numba / numpy backends.

Set RODFILM_NUMBA=0 to force the pure-numpy fallbacks; default is numba
when importable. force_backend() pins the choice programmatically.
"""

from ._backend import backend_name, force_backend, numba_available, numba_enabled
from .frame import rk4_frame
from .intersect import point_segments_dist, seg_tri_hits
from .linking import gauss_pair_sum, min_gap
from .radius import min_circumradius, min_circumradius_pruned
from .tubevol import tube_crossings

__all__ = [
    "backend_name",
    "force_backend",
    "numba_available",
    "numba_enabled",
    "gauss_pair_sum",
    "min_gap",
    "min_circumradius",
    "min_circumradius_pruned",
    "rk4_frame",
    "seg_tri_hits",
    "point_segments_dist",
    "tube_crossings",
]
