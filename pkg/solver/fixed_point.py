"""
Outer iteration psi_{k+1} = (1 - omega) psi_k + omega T(psi_k).

Two maps T are available:

  linearized  a_ij(psi_k) u_ij + b_i u_i + b0 u = -r0,   u = psi~ - l
              b0 = l'' ∫(a22)_psi - ∫F_psi,  b = l'' ∫(a22)_grad - ∫F_grad
              along t_s = (l + s(psi_k - l), grad l + s grad(psi_k - l))
  picard      a_ij(psi_k) u_ij = F(psi_k) - a22(psi_k) l''

r0 = a22 l'' - F at the far-field state (l, grad l); it vanishes for the
consistent streamline functions and keeps the fixed point exact otherwise.
A flux-form Picard solve of div(grad psi / rho) = B' rho - A' rho^gamma / gamma
serves as a cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from common.errors import (
    MaxIterationsExceeded,
    QuadratureStateSupersonic,
    SlowContraction,
    SubsonicViolation,
    SupersonicChi,
)
from common.log import get_logger, progress_line
from geometry.domain import TruncatedDomain
from geometry.grid import CurvilinearGrid, generate_grid
from solver.boundary import boundary_data, initial_iterate
from solver.fields import GridField, psi_gradient
from solver.linear import (
    LinearEllipticProblem,
    flux_stencil,
    mapped_coefficients,
    solve_problem,
    solve_system,
)
from thermo.coefficients import coefficients
from thermo.density import chi_from_gradient, solve_density

log = get_logger("solver")

# ---- 設定區 ----
SLOW_RATIO = 0.9
TAIL = 5


@dataclass(frozen=True)
class SolverConfig:
    nx: int = 129
    nz: int = 65
    grading: float = 1.5
    tol_outer: float | None = None  # None -> 1e-9 * m0
    tol_pde: float | None = None  # None -> 10 * tol_outer
    omega: float = 1.0
    omega_min: float = 1.0 / 64.0
    k_max: int = 60
    quad_points: int = 5
    linear_solver: str = "auto"
    scheme: str = "linearized"
    form: str = "nondivergence"
    progress: bool = True
    check_condition: bool = True

    def outer_tolerance(self, m0: float) -> float:
        return 1e-9 * m0 if self.tol_outer is None else self.tol_outer

    def pde_tolerance(self, m0: float) -> float:
        return 10.0 * self.outer_tolerance(m0) if self.tol_pde is None else self.tol_pde


@dataclass
class SolveReport:
    scheme: str
    tol_outer: float
    tol_pde: float
    iterations: int = 0
    update_norms: list = field(default_factory=list)
    linear_residuals: list = field(default_factory=list)
    condition_estimates: list = field(default_factory=list)
    min_margins: list = field(default_factory=list)
    omegas: list = field(default_factory=list)
    final_residual: float | None = None
    converged: bool = False
    warnings: list = field(default_factory=list)

    @property
    def contraction(self) -> list:
        u = self.update_norms
        return [u[i] / u[i - 1] for i in range(1, len(u)) if u[i - 1] > 0.0]

    @property
    def tail_ratio(self) -> float | None:
        r = self.contraction[-TAIL:]
        return max(r) if r else None

    @property
    def min_margin(self) -> float | None:
        return min(self.min_margins) if self.min_margins else None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["contraction"] = self.contraction
        d["tail_ratio"] = self.tail_ratio
        return d

    def rows(self):
        """(key, value, threshold, verdict) rows for the text report"""
        tail = self.tail_ratio
        return [
            ("solve.converged", int(self.converged), None, self.converged),
            ("solve.iterations", self.iterations, None, None),
            ("solve.final_update", self.update_norms[-1] if self.update_norms else None, self.tol_outer, None),
            ("solve.final_residual", self.final_residual, self.tol_pde, None if self.final_residual is None else self.final_residual <= self.tol_pde),
            ("solve.min_sonic_margin", self.min_margin, 0.0, None if self.min_margin is None else self.min_margin > 0.0),
            ("solve.tail_contraction", tail, SLOW_RATIO, None),
        ]


# ----------------------------
# 狀態與密度
# ----------------------------
def _violation(err: SupersonicChi, grid: CurvilinearGrid, mask=None):
    flat = np.flatnonzero(mask.ravel()) if mask is not None else np.arange(grid.size)
    nodes = [int(flat[i]) for i in err.indices]
    pts = np.column_stack([grid.x1.ravel()[nodes], grid.x2.ravel()[nodes]])
    return SubsonicViolation(nodes, pts)


def subsonic_state(psi: GridField, stream):
    """(p1, p2, density) at every node; SubsonicViolation if any node is not subsonic."""
    grid = psi.grid
    p1, p2 = psi_gradient(psi, stream)
    try:
        density = solve_density(chi_from_gradient(p1, p2), psi.values, stream)
    except SupersonicChi as err:
        raise _violation(err, grid) from err
    bad = ~(density.sonic_margin > 0.0)
    if np.any(bad):
        nodes = np.flatnonzero(bad.ravel())
        raise SubsonicViolation(nodes.tolist(), grid.node_points(bad))
    return p1, p2, density


def _path_coefficients(psi_s, p1, p2, stream, s: float):
    try:
        density = solve_density(chi_from_gradient(p1, p2), psi_s, stream)
    except SupersonicChi as err:
        raise QuadratureStateSupersonic(err.indices, s) from err
    return coefficients(psi_s, (p1, p2), density, stream)


# ----------------------------
# 組裝
# ----------------------------
def assemble_linearized(psi_k: GridField, stream, quad_points: int = 5) -> LinearEllipticProblem:
    grid = psi_k.grid
    x2 = grid.x2
    l, dl, d2l = stream.l(x2), stream.dl(x2), stream.d2l(x2)
    u = psi_k - l
    u1, u2 = u.gradient()
    p1, p2, density = subsonic_state(psi_k, stream)
    co = coefficients(psi_k.values, (p1, p2), density, stream)

    base = _path_coefficients(l, np.zeros_like(u1), dl, stream, 0.0)
    r0 = base.a22 * d2l - base.F

    t, w = np.polynomial.legendre.leggauss(quad_points)
    ia_psi = np.zeros(grid.shape)
    ia_1 = np.zeros(grid.shape)
    ia_2 = np.zeros(grid.shape)
    if_psi = np.zeros(grid.shape)
    if_1 = np.zeros(grid.shape)
    if_2 = np.zeros(grid.shape)
    for s, ws in zip(0.5 * (t + 1.0), 0.5 * w):
        c = _path_coefficients(l + s * u.values, s * u1, dl + s * u2, stream, float(s))
        ia_psi += ws * c.da22_dpsi
        ia_1 += ws * c.da22_dgrad[0]
        ia_2 += ws * c.da22_dgrad[1]
        if_psi += ws * c.dF_dpsi
        if_1 += ws * c.dF_dgrad[0]
        if_2 += ws * c.dF_dgrad[1]

    return LinearEllipticProblem(
        grid=grid,
        a11=co.a11,
        a12=co.a12,
        a22=co.a22,
        b1=d2l * ia_1 - if_1,
        b2=d2l * ia_2 - if_2,
        b0=d2l * ia_psi - if_psi,
        rhs=-r0,
        boundary=u.values,
        min_margin=density.min_margin,
        extras={"density": density, "coefficients": co},
    )


def assemble_picard(psi_k: GridField, stream) -> LinearEllipticProblem:
    grid = psi_k.grid
    x2 = grid.x2
    u = psi_k - stream.l(x2)
    p1, p2, density = subsonic_state(psi_k, stream)
    co = coefficients(psi_k.values, (p1, p2), density, stream)
    zero = np.zeros(grid.shape)
    return LinearEllipticProblem(
        grid=grid,
        a11=co.a11,
        a12=co.a12,
        a22=co.a22,
        b1=zero,
        b2=zero,
        b0=zero,
        rhs=co.F - co.a22 * stream.d2l(x2),
        boundary=u.values,
        min_margin=density.min_margin,
        extras={"density": density, "coefficients": co},
    )


def nonlinear_residual(psi: GridField, stream) -> GridField:
    """
    a_ij(psi) psi_ij - F(psi) on interior nodes, divided by the stencil
    diagonal so that it reads in psi units. Boundary nodes hold 0.
    """
    grid = psi.grid
    x2 = grid.x2
    u = psi - stream.l(x2)
    p1, p2, density = subsonic_state(psi, stream)
    co = coefficients(psi.values, (p1, p2), density, stream)
    u11, u12, u22 = u.hessian()
    res = co.a11 * u11 + 2.0 * co.a12 * u12 + co.a22 * u22 + co.a22 * stream.d2l(x2) - co.F

    zero = np.zeros(grid.shape)
    frozen = LinearEllipticProblem(grid, co.a11, co.a12, co.a22, zero, zero, zero, zero, zero)
    c_xx, _, c_zz, _, _, _ = mapped_coefficients(frozen)
    diag = 2.0 * c_xx / grid.hxi**2 + 2.0 * c_zz / grid.hzeta**2
    out = np.zeros(grid.shape)
    out[1:-1, 1:-1] = res[1:-1, 1:-1] / diag
    return GridField(grid, out)


# ----------------------------
# 外層迭代
# ----------------------------
def _iterate(psi: GridField, step, stream, cfg: SolverConfig, scheme: str):
    grid = psi.grid
    m0 = stream.far.m0
    report = SolveReport(scheme=scheme, tol_outer=cfg.outer_tolerance(m0), tol_pde=cfg.pde_tolerance(m0))
    omega = cfg.omega
    prev_raw = math.inf
    for k in range(1, cfg.k_max + 1):
        target, margin, residual, cond = step(psi)
        delta = target - psi.values
        raw = float(np.max(np.abs(delta)))
        if raw > prev_raw and omega > cfg.omega_min:
            omega = max(0.5 * omega, cfg.omega_min)
            log.info("🔻 update grew (%.3e > %.3e), omega -> %.4g", raw, prev_raw, omega)
        prev_raw = raw
        psi = GridField(grid, psi.values + omega * delta)
        upd = omega * raw

        report.iterations = k
        report.update_norms.append(upd)
        report.linear_residuals.append(residual)
        report.condition_estimates.append(cond)
        report.min_margins.append(margin)
        report.omegas.append(omega)
        if cfg.progress:
            progress_line(k, upd, margin)
        if raw < report.tol_outer:
            report.converged = True
            break
    else:
        raise MaxIterationsExceeded(cfg.k_max, report.update_norms[-1], report)

    # 最終狀態仍需次音速
    _, _, density = subsonic_state(psi, stream)
    report.min_margins.append(density.min_margin)

    tail = report.tail_ratio
    if tail is not None and tail > SLOW_RATIO:
        msg = f"slow contraction: tail ratio {tail:.3f}"
        warnings.warn(msg, SlowContraction, stacklevel=3)
        report.warnings.append(msg)
    log.info("✅ %s converged in %d iteration(s), update %.3e", scheme, report.iterations, report.update_norms[-1])
    return psi, report


def fixed_point_solve(
    domain: TruncatedDomain,
    stream,
    config: SolverConfig | None = None,
    grid: CurvilinearGrid | None = None,
):
    """Returns (psi, SolveReport)."""
    cfg = config or SolverConfig()
    if grid is None:
        grid = generate_grid(domain, cfg.nx, cfg.nz, cfg.grading)
    data = boundary_data(domain, stream)
    psi0 = initial_iterate(grid, data, stream)

    if cfg.form == "divergence":
        psi, report = _iterate(psi0, _divergence_step(stream, cfg), stream, cfg, "divergence")
        report.final_residual = nonlinear_residual(psi, stream).max_abs()
        return psi, report
    if cfg.form != "nondivergence":
        raise ValueError(f"unknown form {cfg.form!r}")

    l = stream.l(grid.x2)

    def step(psi):
        if cfg.scheme == "linearized":
            problem = assemble_linearized(psi, stream, cfg.quad_points)
        elif cfg.scheme == "picard":
            problem = assemble_picard(psi, stream)
        else:
            raise ValueError(f"unknown scheme {cfg.scheme!r}")
        sol = solve_problem(problem, cfg.linear_solver, cfg.check_condition)
        return sol.field.values + l, problem.min_margin, sol.residual, sol.condition

    psi, report = _iterate(psi0, step, stream, cfg, cfg.scheme)
    report.final_residual = nonlinear_residual(psi, stream).max_abs()
    if report.final_residual > report.tol_pde:
        msg = f"final PDE residual {report.final_residual:.3e} above tol_pde {report.tol_pde:.3e}"
        log.warning("⚠️ %s", msg)
        report.warnings.append(msg)
    return psi, report


def _divergence_step(stream, cfg: SolverConfig):
    def step(psi: GridField):
        grid = psi.grid
        _, _, density = subsonic_state(psi, stream)
        rho = density.rho
        A, A1, _, B, B1, _ = density.streamline
        source = B1 * rho - A1 * rho**stream.gamma / stream.gamma
        sol = solve_system(
            grid,
            flux_stencil(grid, 1.0 / rho),
            grid.metrics.jacobian * source,
            psi.values,
            method=cfg.linear_solver,
            check_condition=cfg.check_condition,
        )
        return sol.field.values, density.min_margin, sol.residual, sol.condition

    return step
