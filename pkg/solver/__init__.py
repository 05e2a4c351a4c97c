from .fields import GridField, node_field, psi_gradient, stream_limit_field
from .boundary import DirichletData, boundary_data, cutoff_eta, cutoff_eta_derivatives, initial_iterate
from .linear import (
    LinearEllipticProblem,
    LinearSolution,
    ManufacturedSolution,
    Stencil,
    apply_stencil,
    flux_stencil,
    manufactured_problem,
    nondivergence_stencil,
    sine_exp_solution,
    solve_linear,
    solve_problem,
    solve_system,
)
from .fixed_point import (
    SolveReport,
    SolverConfig,
    assemble_linearized,
    assemble_picard,
    fixed_point_solve,
    nonlinear_residual,
    subsonic_state,
)
from .recovery import EulerFields, recover_euler_fields
