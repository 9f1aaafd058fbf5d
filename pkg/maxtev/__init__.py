"""
maxtev computes Maxwell transmission eigenvalues of anisotropic media.

The interior transmission problem couples two Maxwell fields `w` and `v`
through their tangential traces. It is discretized with first-family Nédélec
edge elements of order 0 (linear) or 1 (quadratic) on structured tetrahedral
meshes of the unit cube and of the thick L-shaped prism, written as a
saddle-point generalized eigenproblem and solved by shift-invert Arnoldi.

Around the solver the package provides:

- coefficient presets and bound-case classification,
- numerical checks of T-coercivity, the discrete Poincaré inequality and the
  discrete de Rham identities,
- convergence studies with extrapolated references and observed rates,
- a command line (`python -m maxtev`) configured by presets, files,
  `MAXTEV_*` environment variables and flags.

The library logs through loguru and is silent until
`logger.enable("maxtev")` is called (the CLI does it).

"""
from loguru import logger

from .config import MISSING, RunConfig, SolverSettings, configclass, load_config
from .errors import MaxtevError
from .types import Domain

logger.disable("maxtev")

__all__ = [
    "MISSING",
    "configclass",
    "load_config",
    "RunConfig",
    "SolverSettings",
    "MaxtevError",
    "Domain",
]
