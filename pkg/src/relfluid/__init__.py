"""Structure-preserving solvers for relativistic perfect fluids on periodic boxes.

The package splits into a 2D stream-function solver (vorticity advected by
a coefficient-Laplacian inversion), full 3D solvers in two closures, the
conserved-quantity diagnostics, and a bracket-algebra checker that tests
the antisymmetry/kernel structure the conservation laws rest on.
"""

# Defined before the submodule imports: output.py reads it back for the
# run manifests.
__version__ = "0.1.0"

from .config import ScenarioConfig, parse_config  # noqa: E402
from .errors import (  # noqa: E402
    ConfigError,
    GammaBelowOne,
    IncompatibleFunctional,
    InverterDiverged,
    ModelError,
    NonPositiveDensity,
    NonZeroMean,
    ParseError,
    ProjectionDiverged,
    RelfluidError,
    SuperluminalVelocity,
    ValidationError,
)
from .grid import Grid2D, Grid3D  # noqa: E402
from .initial_conditions import make_initial_condition  # noqa: E402
from .relativity import (  # noqa: E402
    PhysicalConstants,
    gamma_from_u,
    gamma_from_v,
    u_to_v,
    v_to_u,
)
from .runner import execute  # noqa: E402

__all__ = [
    "ConfigError",
    "GammaBelowOne",
    "Grid2D",
    "Grid3D",
    "IncompatibleFunctional",
    "InverterDiverged",
    "ModelError",
    "NonPositiveDensity",
    "NonZeroMean",
    "ParseError",
    "PhysicalConstants",
    "ProjectionDiverged",
    "RelfluidError",
    "ScenarioConfig",
    "SuperluminalVelocity",
    "ValidationError",
    "execute",
    "gamma_from_u",
    "gamma_from_v",
    "make_initial_condition",
    "parse_config",
    "u_to_v",
    "v_to_u",
    "__version__",
]
