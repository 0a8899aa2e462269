"""Approximate optimal experimental design on finite candidate sets.

Weights of an approximate design are decision variables of a linear program
once the concave criterion is replaced by its exact cutting-plane
linearization; iterating cuts yields designs with certified optimality gaps
for D-, A- and eigenvalue-sum criteria, worst-case efficient (criterion
robust) designs, constrained D-by-A designs, and prior-averaged variants.
"""

from .linalg import (
    JacobiConvergenceError,
    NearSingularError,
    SpectralDecomp,
    SymMatrix,
    det_root,
    inverse,
    sym_eig,
)
from .models import (
    Design,
    DesignSpace,
    SymmetricSupport,
    compartment_model,
    compartment_response,
    custom_space,
    grid_points,
    linearized_space,
    mixture,
    point_mass,
    poly_model,
    qcube_model,
    qcube_symmetric_space,
    redistribute_uniform,
    uniform_design,
)
from .criteria import (
    AOptimality,
    AveragedCriterion,
    Cut,
    DOptimality,
    EkOptimality,
    InfoMatrix,
    MaximinEfficiency,
    OptimalityGap,
    ave_cut,
    cut,
    equivalence_gap,
    info_matrix,
    phi,
)
from .lp import CutLP, LPSolution, LPStatus, dump_lp, solve_lp
from .cutting_plane import (
    EfficiencySweep,
    EkOptimum,
    SolveConfig,
    SolveReport,
    StopReason,
    SweepPoint,
    TraceEntry,
    efficiency_sweep,
    solve,
    solve_d_given_a,
    solve_ek_sweep,
    solve_maximin,
)
from .perturbation import PerturbationTuple, extended_objective, tuple_from_design

__version__ = "0.1.0"
