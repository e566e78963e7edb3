"""Closed elastic rods spanned by anisotropic soap films.

Frame reconstruction from curvature data, link/knot admissibility checks,
elastic/gravity/film energies, alternating minimization, and thin-rod
limits. Numeric kernels run through numba when importable; set
RODFILM_NUMBA=0 to force the pure-numpy fallbacks.
"""

from .config import ExperimentConfig
from .constraints import FeasibilityReport, check_admissible, interpenetration_volume
from .energy import (
    AnisotropicIntegrand,
    ElasticModel,
    EnergyBreakdown,
    EnergyModels,
    MassModel,
    elastic_energy,
    gravitational_energy,
    limit_energy,
    surface_energy,
    total_energy,
    total_energy_eps,
)
from .errors import ConfigError, RodFilmError
from .rod import (
    CurvatureField,
    FramedCurve,
    InitialFrame,
    close_up_curve,
    closure_defects,
    integrate_frame,
)
from .sections import CrossSectionProfile, DiskSection, PolygonSection
from .solver import (
    DimredReport,
    SolveConfig,
    SolveTrace,
    alternate_minimize,
    dimred_sweep,
    film_descend,
    rod_descend,
)
from .surface import (
    SpanningSurface,
    TriangleMesh,
    default_witnesses,
    initial_spanning_surface,
    load_surface,
    save_surface,
)
from .system import Rod, RodSystem
from .topology import (
    ClosedPolyline,
    curve_separation,
    global_radius,
    linking_matrix,
    linking_number,
    tube_is_embedded,
)

__version__ = "0.1.0"

__all__ = [
    "AnisotropicIntegrand",
    "ClosedPolyline",
    "ConfigError",
    "CrossSectionProfile",
    "CurvatureField",
    "DimredReport",
    "DiskSection",
    "ElasticModel",
    "EnergyBreakdown",
    "EnergyModels",
    "ExperimentConfig",
    "FeasibilityReport",
    "FramedCurve",
    "InitialFrame",
    "MassModel",
    "PolygonSection",
    "Rod",
    "RodFilmError",
    "RodSystem",
    "SolveConfig",
    "SolveTrace",
    "SpanningSurface",
    "TriangleMesh",
    "alternate_minimize",
    "check_admissible",
    "close_up_curve",
    "closure_defects",
    "curve_separation",
    "default_witnesses",
    "dimred_sweep",
    "elastic_energy",
    "film_descend",
    "global_radius",
    "gravitational_energy",
    "initial_spanning_surface",
    "integrate_frame",
    "interpenetration_volume",
    "limit_energy",
    "linking_matrix",
    "linking_number",
    "load_surface",
    "rod_descend",
    "save_surface",
    "surface_energy",
    "total_energy",
    "total_energy_eps",
    "tube_is_embedded",
    "__version__",
]
