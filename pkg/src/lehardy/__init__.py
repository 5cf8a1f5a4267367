"""Lane-Emden densities, principal eigenvalues and Hardy-type lower bounds
for Schroedinger operators on uniform grids."""

from .closed_forms import ClosedForm, compare, sample
from .constants import (
    corollary_bound,
    moser_constant,
    perturbation_margin,
    talenti_constant,
    unit_ball_volume,
)
from .grid import GridDomain, ScalarField, ShapeSpec, build_domain
from .hardy import (
    BoundCertificate,
    certify,
    check_admissible,
    check_bilat,
    check_dorin,
    check_hardy,
    check_linfty_estimate,
    ground_state_representation_check,
    hardy_weight,
    limit_potential,
    theorem_bound,
)
from .lane_emden import LaneEmdenDensity, solve_lane_emden
from .spectral import (
    Potential,
    SpectralResult,
    lambda_2gamma,
    principal_eigenvalue,
    schrodinger_ground_state,
)

__version__ = "0.1.0"
