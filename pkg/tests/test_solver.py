import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from common.errors import MaxIterationsExceeded, SubsonicViolation
from common.functions import Constant, Poly
from farfield.state import build_farfield
from farfield.stream_limit import build_stream_limit
from geometry.domain import truncate
from geometry.grid import generate_grid, grid_over
from geometry.profile import build_profile
from solver.boundary import boundary_data, cutoff_eta, cutoff_eta_derivatives, initial_iterate
from solver.fields import GridField, stream_limit_field
from solver.fixed_point import SolverConfig, fixed_point_solve, nonlinear_residual, subsonic_state
from solver.linear import (
    LinearEllipticProblem,
    ManufacturedSolution,
    apply_stencil,
    flux_stencil,
    manufactured_problem,
    nondivergence_stencil,
    sine_exp_solution,
    solve_problem,
)
from solver.recovery import recover_euler_fields
from tests.conftest import GAS, bump_pieces

QUIET = dict(progress=False)


# ----------------------------
# 截斷函數與邊界資料
# ----------------------------
def test_cutoff_values():
    s = np.array([-5.0, -3.0, -2.0, 0.0, 1.5, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(cutoff_eta(s), [0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0])
    mid = cutoff_eta(np.linspace(-3.5, 3.5, 301))
    assert np.all((mid >= 0.0) & (mid <= 1.0))
    assert float(cutoff_eta(2.5)) == pytest.approx(0.5)


@given(st.floats(-10.0, 10.0), st.floats(-10.0, 10.0))
@settings(max_examples=100, deadline=None)
def test_cutoff_range_and_monotone(a, b):
    ea, eb = float(cutoff_eta(a)), float(cutoff_eta(b))
    assert 0.0 <= ea <= 1.0 + 1e-15
    assert float(cutoff_eta(-a)) == ea
    if abs(a) <= abs(b):
        assert ea >= eb - 1e-15


def test_cutoff_derivatives_match_differences():
    s = np.concatenate([np.linspace(2.05, 2.95, 10), -np.linspace(2.05, 2.95, 10)])
    d1, d2 = cutoff_eta_derivatives(s)
    h = 1e-5
    np.testing.assert_allclose((cutoff_eta(s + h) - cutoff_eta(s - h)) / (2 * h), d1, atol=1e-8)
    np.testing.assert_allclose((cutoff_eta(s + h) - 2 * cutoff_eta(s) + cutoff_eta(s - h)) / h**2, d2, atol=1e-4)


def test_cutoff_c2_norm_bounded():
    s = np.linspace(-4.0, 4.0, 8001)
    d1, d2 = cutoff_eta_derivatives(s)
    total = np.max(np.abs(cutoff_eta(s))) + np.max(np.abs(d1)) + np.max(np.abs(d2))
    assert total <= 10.0


def test_boundary_data_on_wall(bump_domain, stream):
    data = boundary_data(bump_domain, stream)
    assert float(data.g(0.0, 0.1)) == pytest.approx(-0.01, rel=1e-12)
    x1 = np.linspace(-8.0, 8.0, 81)
    np.testing.assert_allclose(data.psi_trace(x1, bump_domain.profile(x1)), 0.0, atol=1e-15)
    # D0 + 1 以上 g = 0
    assert np.all(data.g(np.linspace(-8.0, 8.0, 17), np.full(17, 3.5)) == 0.0)


def test_initial_iterate_matches_trace(coarse_grid, bump_domain, stream):
    data = boundary_data(bump_domain, stream)
    psi0 = initial_iterate(coarse_grid, data, stream)
    b = coarse_grid.boundary
    np.testing.assert_allclose(psi0.values[b], data.psi_trace(coarse_grid.x1[b], coarse_grid.x2[b]))
    np.testing.assert_allclose(psi0.values[:, 0], 0.0, atol=1e-15)


# ----------------------------
# 線性模板
# ----------------------------
def _flat_grid(n=9):
    return grid_over(Constant(0.0), 0.0, 1.0, 1.0, n, n)


def _problem(grid, a11=1.0, a12=0.0, a22=1.0):
    full = lambda c: np.full(grid.shape, float(c))  # noqa: E731
    zero = np.zeros(grid.shape)
    return LinearEllipticProblem(grid, full(a11), full(a12), full(a22), zero, zero, zero, zero, zero)


def test_nondivergence_stencil_exact_on_quadratics():
    grid = _flat_grid()
    u = grid.x1**2 + grid.x1 * grid.x2 - 0.5 * grid.x2**2 + 3.0
    out = apply_stencil(nondivergence_stencil(_problem(grid, 1.0, 0.25, 2.0)), u)
    # 1*2 + 2*0.25*1 + 2*(-1)
    np.testing.assert_allclose(out, 0.5, atol=1e-10)


def test_flux_stencil_exact_on_quadratics():
    grid = _flat_grid()
    u = grid.x1**2 + 3.0 * grid.x2**2
    np.testing.assert_allclose(apply_stencil(flux_stencil(grid, 1.0), u), 8.0, atol=1e-10)


def _harmonic_defect(n: int):
    grid = grid_over(Poly((0.1, 0.05, -0.05)), 0.0, 1.0, 1.0, n, n, grading=1.5)
    u = np.sin(grid.x1) * np.exp(-grid.x2)
    nd = np.max(np.abs(apply_stencil(nondivergence_stencil(_problem(grid)), u)))
    jac = grid.metrics.jacobian[1:-1, 1:-1]
    fl = np.max(np.abs(apply_stencil(flux_stencil(grid, 1.0), u) / jac))
    return nd, fl


def test_stencils_second_order_on_curved_grid():
    nd1, fl1 = _harmonic_defect(33)
    nd2, fl2 = _harmonic_defect(65)
    assert nd2 < nd1 / 3.0
    assert fl2 < fl1 / 3.0


def _kink_gradient_error(profile, n: int) -> float:
    grid = grid_over(profile, -4.0, 4.0, 3.0, n, n, kinks=profile.kinks)
    u1, u2 = GridField(grid, np.sin(grid.x1) + grid.x1 * grid.x2).gradient()
    cols = [i for i, _, _ in grid.kink_columns()]
    assert len(cols) == 2
    e1 = np.abs(u1 - (np.cos(grid.x1) + grid.x2))[cols, 1:-1]
    e2 = np.abs(u2 - grid.x1)[cols, 1:-1]
    return float(max(np.max(e1), np.max(e2)))


def test_gradient_second_order_on_kink_columns(bump_profile):
    e1 = _kink_gradient_error(bump_profile, 33)
    e2 = _kink_gradient_error(bump_profile, 65)
    assert e2 < e1
    assert math.log(e1 / e2) / math.log(2.0) >= 1.7


# ----------------------------
# 製造解
# ----------------------------
def _mms_errors(bottom, levels, grading=1.0):
    hs, errors = [], []
    for n in levels:
        grid = grid_over(bottom, 0.0, 1.0, 1.0, n, n, grading=grading)
        problem, exact = manufactured_problem(grid, sine_exp_solution(), 1.39, 0.1, 1.2, 0.1, 0.0, -0.5)
        sol = solve_problem(problem)
        hs.append(grid.hxi)
        errors.append((sol.field - exact).max_abs())
    return hs, errors


def _orders(hs, errors):
    return [math.log(errors[k] / errors[k + 1]) / math.log(hs[k] / hs[k + 1]) for k in range(len(errors) - 1)]


def test_mms_second_order_flat():
    hs, errors = _mms_errors(Constant(0.0), (33, 65, 129))
    for order in _orders(hs, errors):
        assert 1.8 <= order <= 2.2


def test_mms_converges_on_curved_graded_grid():
    hs, errors = _mms_errors(Poly((0.1, 0.05, -0.05)), (33, 65), grading=1.5)
    assert _orders(hs, errors)[0] >= 1.8


def test_zero_data_gives_zero_solution():
    grid = grid_over(Poly((0.1, 0.05, -0.05)), 0.0, 1.0, 1.0, 17, 17, grading=1.5)
    zero = ManufacturedSolution(
        value=lambda x1, x2: 0.0 * x1,
        gradient=lambda x1, x2: (0.0 * x1, 0.0 * x1),
        hessian=lambda x1, x2: (0.0 * x1, 0.0 * x1, 0.0 * x1),
    )
    problem, _ = manufactured_problem(grid, zero, 1.39, 0.1, 1.2, 0.1, 0.0, -0.5)
    sol = solve_problem(problem)
    assert sol.field.max_abs() == 0.0
    assert sol.condition is not None and sol.condition > 1.0


# ----------------------------
# 外層迭代
# ----------------------------
def test_flat_wall_converges_to_stream_limit(flat_domain, stream):
    psi, report = fixed_point_solve(flat_domain, stream, SolverConfig(nx=33, nz=17, **QUIET))
    assert report.converged
    assert report.iterations == 1
    np.testing.assert_array_equal(psi.values, stream.l(psi.grid.x2))
    assert report.final_residual == 0.0
    d = report.to_dict()
    assert d["contraction"] == [] and d["tail_ratio"] is None


def test_recovery_at_background(flat_domain, stream):
    grid = generate_grid(flat_domain, 33, 17)
    fields = recover_euler_fields(stream_limit_field(grid, stream), stream)
    np.testing.assert_allclose(fields.rho, 1.0, atol=1e-12)
    np.testing.assert_allclose(fields.m1, 0.1, rtol=1e-12)
    np.testing.assert_allclose(fields.m2, 0.0, atol=1e-15)
    np.testing.assert_allclose(fields.p, 1.0, rtol=1e-11)
    np.testing.assert_allclose(fields.mach, 0.1 / math.sqrt(1.4), rtol=1e-11)
    assert set(fields.named()) == {"psi", "m1", "m2", "rho", "p", "E", "mach"}


def test_bump_solve_linearized_and_picard_agree(bump_domain, stream):
    cfg = SolverConfig(nx=33, nz=17, **QUIET)
    psi_lin, rep_lin = fixed_point_solve(bump_domain, stream, cfg)
    psi_pic, rep_pic = fixed_point_solve(bump_domain, stream, SolverConfig(nx=33, nz=17, scheme="picard", **QUIET))
    assert rep_lin.converged and rep_pic.converged
    assert rep_lin.min_margin > 0.0
    np.testing.assert_allclose(psi_lin.values, psi_pic.values, atol=1e-8)
    # 壁面為流線 psi = 0
    np.testing.assert_allclose(psi_lin.values[:, 0], 0.0, atol=1e-15)
    assert nonlinear_residual(psi_lin, stream).max_abs() < 1e-6


def test_divergence_form_close_to_nondivergence(bump_domain, stream):
    psi_nd, _ = fixed_point_solve(bump_domain, stream, SolverConfig(nx=33, nz=17, **QUIET))
    psi_dv, rep = fixed_point_solve(bump_domain, stream, SolverConfig(nx=33, nz=17, form="divergence", **QUIET))
    assert rep.converged
    l = stream.l(psi_nd.grid.x2)
    scale = np.max(np.abs(psi_nd.values - l))
    assert np.max(np.abs(psi_dv.values - psi_nd.values)) < 0.25 * scale


def test_iteration_budget_exhausted(bump_domain, stream):
    with pytest.raises(MaxIterationsExceeded) as err:
        fixed_point_solve(bump_domain, stream, SolverConfig(nx=33, nz=17, k_max=1, **QUIET))
    assert err.value.iterations == 1
    assert err.value.report.iterations == 1


def test_steep_bump_initial_iterate_is_supersonic():
    far = build_farfield(**dict(GAS, m_star=0.9, m0=0.6))
    stream = build_stream_limit(far)
    profile = build_profile(bump_pieces(0.9), delta=0.1, D0=2.0)
    domain = truncate(profile, 8.0, 8.0)
    grid = generate_grid(domain, 65, 33)
    psi0 = initial_iterate(grid, boundary_data(domain, stream), stream)
    with pytest.raises(SubsonicViolation) as err:
        subsonic_state(psi0, stream)
    assert err.value.nodes
    assert all(abs(x1) <= 1.0 for x1, _ in err.value.points)
    with pytest.raises(SubsonicViolation):
        fixed_point_solve(domain, stream, SolverConfig(nx=65, nz=33, **QUIET))


def test_grid_field_arithmetic(coarse_grid):
    a = GridField(coarse_grid, np.ones(coarse_grid.size))
    assert a.values.shape == coarse_grid.shape
    assert (a + 1.0).max_abs() == 2.0
    assert (a - a).max_abs() == 0.0
    with pytest.raises(ValueError):
        GridField(coarse_grid, np.ones(3))


@pytest.mark.slow
def test_canonical_bump_solve(bump_domain, stream):
    psi, report = fixed_point_solve(bump_domain, stream, SolverConfig(nx=129, nz=65, **QUIET))
    assert report.converged
    assert report.min_margin > 0.0
    fields = recover_euler_fields(psi, stream)
    assert np.max(fields.mach) < 1.0
