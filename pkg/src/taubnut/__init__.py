"""Numerical toolkit for a family of toric scalar-flat gravitational
instantons: coordinate charts, distance functions and geodesics, curvature
and L^2 energies, volume growth, and blowdown limits.

The four metric families are selected through
:class:`taubnut.family.InstantonParams`; everything else is module-level
functions over that parameter object.
"""

__version__ = "0.1.0"

from .family import (BadParams, Chart, ChartPoint, Family, InstantonParams,
                     WrongFamily, almost_distance, moment_map)
from .geodesics import (distance, eikonal_S, point_from_polar,
                        polar_from_point, solve_eta)
from .metrics import conformal_factor, fiber_matrix, metric4, volume_density

__all__ = [
    "BadParams", "Chart", "ChartPoint", "Family", "InstantonParams",
    "WrongFamily", "almost_distance", "moment_map",
    "distance", "eikonal_S", "point_from_polar", "polar_from_point",
    "solve_eta",
    "conformal_factor", "fiber_matrix", "metric4", "volume_density",
    "__version__",
]
