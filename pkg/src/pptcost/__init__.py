"""Zero-error PPT entanglement cost via the chi and kappa SDP hierarchies."""

from .errors import (
    DimensionCapError,
    DimensionError,
    NotHermitianError,
    NumericalError,
    PPTCostError,
    SolverError,
    ValidationError,
)
from .hierarchy import (
    CostEstimate,
    chi,
    chi_dual,
    continuity_bound,
    convergence_gap,
    dmax_ppt,
    kappa,
    kappa_dual,
    log_negativity,
    ppt_cost,
    required_level,
)
from .linalg import BipartiteShape
from .sdp import SolverConfig
from .states import DensityMatrix, max_entangled, punch_card_pi0, pure_from_schmidt, random_density

__version__ = "0.1.0"
