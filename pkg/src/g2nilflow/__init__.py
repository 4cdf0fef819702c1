"""Left-invariant closed G2-structures on 7-dimensional nilpotent Lie algebras."""

from .forms import KForm, contract, frame_vector, hodge_star, pullback, wedge
from .liealg import (
    LieAlgebra,
    algebra,
    ce_differential,
    closed_forms,
    d_squared_residual,
    is_derivation,
)
from .g2 import Metric, bilinear_B, identity_metric, is_positive, laplacian_closed, metric_from_g2
from .curvature import (
    SolitonCertificate,
    levi_civita,
    nilsoliton_solve,
    ricci,
    riemann,
    scalar_curvature,
)
from .catalog import CatalogEntry, catalog, get_entry
from .flow import (
    FlowState,
    ReducedState,
    Trajectory,
    bracket_flow,
    closedness_drift,
    curvature_decay,
    flow_rhs,
    full_flow_matches_reduction,
    integrate,
    reduced_flow_n4,
    reduced_flow_n6,
    soliton_along_flow,
    t_min_quadrature,
)
from .obstruction import (
    ClosedFamily,
    SearchReport,
    closed_family,
    constraint_residual,
    infeasibility_search,
    obs1_check,
    su3_residual,
)

__version__ = "0.1.0"
