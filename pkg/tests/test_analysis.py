import math

import numpy as np
import pytest

from analysis.barriers import BarrierSpec, barrier_check, barrier_values, corner_barrier_spec, laplacian_problem
from analysis.decay import decay_fit
from analysis.norms import WeightedNormSpec, neighbour_pairs, weighted_norm_terms
from analysis.report import DiagnosticsReport
from analysis.residuals import corner_mask, euler_residuals, observed_order, stencil_mask, vorticity_check
from analysis.streamlines import default_seeds, max_variation, streamline_conservation
from analysis.truncation import columns_for, truncation_study
from common.errors import InsufficientRadii, LeftDomain, StagnationEncountered
from common.functions import Constant
from geometry.domain import truncate
from geometry.grid import generate_grid, grid_over
from solver.fields import GridField, stream_limit_field
from solver.fixed_point import SolverConfig
from solver.recovery import EulerFields, recover_euler_fields


@pytest.fixture(scope="module")
def flat_grid(flat_domain):
    return generate_grid(flat_domain, 33, 17)


@pytest.fixture(scope="module")
def background(flat_grid, stream):
    return recover_euler_fields(stream_limit_field(flat_grid, stream), stream)


# ----------------------------
# 比較函數
# ----------------------------
def test_global_barrier_laplacian_at_origin():
    _, _, (v11, _, v22) = barrier_values(BarrierSpec(0.8, 0.4), 0.0, 0.0)
    assert float(v11 + v22) == pytest.approx(-0.64, rel=1e-12)


def _fd_derivatives(spec, x1, x2, h=1e-5):
    v = lambda a, b: barrier_values(spec, a, b)  # noqa: E731
    _, (g1, g2), (h11, h12, h22) = v(x1, x2)
    fd1 = (v(x1 + h, x2)[0] - v(x1 - h, x2)[0]) / (2 * h)
    fd2 = (v(x1, x2 + h)[0] - v(x1, x2 - h)[0]) / (2 * h)
    fd11 = (v(x1 + h, x2)[1][0] - v(x1 - h, x2)[1][0]) / (2 * h)
    fd12 = (v(x1, x2 + h)[1][0] - v(x1, x2 - h)[1][0]) / (2 * h)
    fd22 = (v(x1, x2 + h)[1][1] - v(x1, x2 - h)[1][1]) / (2 * h)
    return (g1, g2, h11, h12, h22), (fd1, fd2, fd11, fd12, fd22)


def _corner_points(corner, n=12):
    t = np.linspace(0.5, 2.5, n)
    r = np.linspace(0.2, 0.4, n)
    return corner[0] + r * np.cos(t), corner[1] + r * np.sin(t)


@pytest.mark.parametrize("variant", ["global", "uniqueness", "corner"])
def test_barrier_derivatives_match_differences(variant, bump_profile, bump_domain):
    if variant == "corner":
        spec = corner_barrier_spec(bump_profile, "A-", 0.8, 0.4)
        x1, x2 = _corner_points(bump_profile.corner_minus)
    else:
        spec = BarrierSpec(0.8, 0.4, variant, corners=bump_domain.corner_set, radius=1.0)
        rng = np.random.default_rng(3)
        x1 = rng.uniform(-6.0, 6.0, 40)
        x2 = rng.uniform(1.5, 6.0, 40)
    exact, fd = _fd_derivatives(spec, x1, x2)
    for e, d in zip(exact, fd):
        np.testing.assert_allclose(d, e, rtol=1e-6, atol=1e-8)


def test_corner_barrier_is_subharmonic(bump_profile):
    spec = corner_barrier_spec(bump_profile, "A+", 0.8, 0.4)
    x1, x2 = _corner_points(bump_profile.corner_plus)
    v, _, (v11, _, v22) = barrier_values(spec, x1, x2)
    r = np.hypot(x1 - 1.0, x2)
    p = 1.8
    # Δ(r^p sin phi) = (p^2 - 1) r^(p-2) sin phi
    np.testing.assert_allclose(v11 + v22, (p * p - 1.0) * v / r**2, rtol=1e-9)
    assert np.all(v > 0.0)


def test_flat_corner_has_no_barrier(flat_profile):
    assert corner_barrier_spec(flat_profile, "A-", 0.8, 0.4) is None


def test_barrier_checks_under_laplacian(coarse_grid, bump_domain, bump_profile):
    lap = laplacian_problem(coarse_grid, 1.39)
    glob = barrier_check(lap, BarrierSpec(0.8, 0.4))
    assert glob.ok and glob.max_value < 0.0
    assert glob.checked == 31 * 15
    uniq = barrier_check(lap, BarrierSpec(0.8, 0.4, "uniqueness", corners=bump_domain.corner_set, radius=1.0))
    assert uniq.ok
    assert uniq.checked < glob.checked
    corner = barrier_check(lap, corner_barrier_spec(bump_profile, "A-", 0.8, 0.4))
    assert corner.checked > 0
    assert not corner.ok


def test_barrier_spec_validation():
    with pytest.raises(ValueError):
        BarrierSpec(0.4, 0.8)
    with pytest.raises(ValueError):
        BarrierSpec(0.8, 0.4, "corner")
    with pytest.raises(ValueError):
        BarrierSpec(0.8, 0.4, "uniqueness")
    with pytest.raises(ValueError):
        BarrierSpec(0.8, 0.4, "sideways")


# ----------------------------
# 殘差與渦度
# ----------------------------
def test_background_residuals_vanish(background):
    res = euler_residuals(background)
    for norms in res.values():
        assert norms.linf == 0.0 and norms.l2 == 0.0
    assert vorticity_check(background).max_abs == 0.0


def test_rigid_rotation_vorticity():
    g = grid_over(Constant(0.0), -2.0, 2.0, 2.0, 17, 17)
    ones = np.ones(g.shape)
    fields = EulerFields(g, ones, -g.x2, g.x1, ones, ones, ones, 0.0 * ones, 1.4)
    vort = vorticity_check(fields)
    assert vort.max_abs == pytest.approx(2.0, rel=1e-12)
    # 質量方程式：div(-x2, x1) = 0
    assert euler_residuals(fields)["mass"].linf < 1e-12


def test_corner_mask_excludes_disc(flat_grid):
    full = corner_mask(flat_grid)
    cut = corner_mask(flat_grid, ((-1.0, 0.0), (1.0, 0.0)), 1.5)
    assert np.array_equal(full, stencil_mask(flat_grid))
    assert np.count_nonzero(cut) < np.count_nonzero(full)
    assert not np.any(cut & (np.hypot(flat_grid.x1 - 1.0, flat_grid.x2) <= 1.5))


def test_stencil_mask_skips_two_layers(flat_grid):
    mask = stencil_mask(flat_grid)
    assert np.count_nonzero(mask) == 29 * 13
    assert not np.any(mask[:2]) and not np.any(mask[-2:])
    assert not np.any(mask[:, :2]) and not np.any(mask[:, -2:])
    assert np.all(mask[2:-2, 2:-2])


def test_observed_order():
    orders = observed_order([0.1, 0.05, 0.025], [4e-3, 1e-3, 2.5e-4])
    assert orders == pytest.approx([2.0, 2.0])
    assert math.isnan(observed_order([0.1, 0.05], [1e-3, 0.0])[0])


# ----------------------------
# 流線
# ----------------------------
def test_streamlines_conserve_background(flat_grid, background):
    psi = GridField(flat_grid, background.psi)
    traces = streamline_conservation(psi, background, default_seeds(flat_grid, count=3))
    assert len(traces) == 3
    for t in traces:
        assert t.steps > 0
        assert t.psi_drift < 1e-12
    entropy, bernoulli = max_variation(traces)
    assert entropy < 1e-12 and bernoulli < 1e-12


def test_streamline_seed_errors(flat_grid, background):
    psi = GridField(flat_grid, background.psi)
    with pytest.raises(StagnationEncountered):
        streamline_conservation(psi, background, [(-1.0, 0.0)])
    with pytest.raises(LeftDomain):
        streamline_conservation(psi, background, [(0.0, 9.0)])


def test_default_seeds_above_wall(flat_grid):
    seeds = default_seeds(flat_grid, count=4)
    assert len(seeds) == 4
    assert seeds[0] == (-7.0, 0.5)
    assert seeds[-1][1] == pytest.approx(4.0)


# ----------------------------
# 衰減
# ----------------------------
def test_decay_fit_recovers_power(flat_profile, stream):
    grid = generate_grid(truncate(flat_profile, 32.0, 32.0), 65, 33)
    r = np.hypot(grid.x1, grid.x2)
    psi = GridField(grid, stream.l(grid.x2) + 0.01 * np.maximum(r, 1.0) ** -0.5)
    fit = decay_fit(psi, stream, beta=0.4)
    assert fit.radii == (4.0, 8.0, 16.0)
    for slope in fit.exponents.values():
        assert slope == pytest.approx(-0.5, abs=1e-9)
    assert fit.nonincreasing
    assert fit.sup_statistic <= 0.01 * 4.0**-0.1 + 1e-12


def test_decay_fit_needs_radii(flat_profile, stream):
    grid = generate_grid(truncate(flat_profile, 4.0, 4.0), 9, 9)
    with pytest.raises(InsufficientRadii):
        decay_fit(stream_limit_field(grid, stream), stream)


# ----------------------------
# 加權範數
# ----------------------------
def test_weighted_norm_of_constant(coarse_grid):
    u = GridField(coarse_grid, np.ones(coarse_grid.size))
    terms = weighted_norm_terms(u, WeightedNormSpec(k=0, alpha=0.8, beta=0.4))
    assert terms.sup_terms[0] == pytest.approx(128.0**0.2, rel=1e-12)
    assert terms.holder == 0.0
    assert terms.total == pytest.approx(128.0**0.2, rel=1e-12)


def test_weighted_norm_first_derivative(coarse_grid):
    u = GridField(coarse_grid, coarse_grid.x1)
    terms = weighted_norm_terms(u, WeightedNormSpec(k=1, alpha=0.8, beta=0.4, n_random=256))
    assert terms.sup_terms[1] == pytest.approx(128.0**0.7, rel=1e-10)
    assert terms.holder == pytest.approx(0.0, abs=1e-9)


def test_weighted_norm_seeded(coarse_grid, bump_domain):
    vals = np.sin(coarse_grid.x1) * np.exp(-coarse_grid.x2)
    u = GridField(coarse_grid, vals)
    spec = WeightedNormSpec(k=2, alpha=0.8, beta=0.4, sigma=-1.8, P=bump_domain.profile_corners, n_random=512, seed=7)
    assert weighted_norm_terms(u, spec) == weighted_norm_terms(u, spec)


def test_weighted_norm_spec_validation():
    with pytest.raises(ValueError):
        WeightedNormSpec(k=0, alpha=0.4, beta=0.8)
    with pytest.raises(ValueError):
        WeightedNormSpec(k=1, alpha=0.8, beta=0.4, sigma=-1.0)
    with pytest.raises(ValueError):
        WeightedNormSpec(k=3, alpha=0.8, beta=0.4)


def test_neighbour_pairs_count(coarse_grid):
    first, second = neighbour_pairs(coarse_grid)
    nx, nz = coarse_grid.shape
    assert first.size == second.size == (nx - 1) * nz + nx * (nz - 1) + 2 * (nx - 1) * (nz - 1)


# ----------------------------
# 截斷研究
# ----------------------------
def test_columns_for():
    assert columns_for(16.0, 8.0, 33) == 65
    assert columns_for(12.0, 8.0, 33) == 49
    with pytest.raises(ValueError):
        columns_for(8.3, 8.0, 33)


def test_flat_truncation_study(flat_profile, stream):
    cfg = SolverConfig(nx=9, nz=9, progress=False)
    study = truncation_study(flat_profile, stream, (4.0, 8.0), 4.0, cfg)
    assert study.differences == (0.0,)
    assert study.decreasing
    assert math.isnan(study.exponent)
    assert study.iterations == (1, 1)


def test_truncation_study_rejects_unsorted(flat_profile, stream):
    with pytest.raises(ValueError):
        truncation_study(flat_profile, stream, (8.0, 4.0), 4.0, SolverConfig(nx=9, nz=9, progress=False))


# ----------------------------
# 報告
# ----------------------------
def test_report_rows_and_verdict():
    report = DiagnosticsReport()
    report.add("b.check", 0.5, 1.0, True)
    report.add("a.info", 3)
    assert report.passed
    report.add("c.bad", 2.0, 1.0, False)
    assert not report.passed
    assert report.failures == ["c.bad"]
    assert [r[0] for r in report.rows()] == ["a.info", "b.check", "c.bad"]
    text = report.to_text().splitlines()
    assert text[0] == "key\tvalue\tthreshold\tverdict"
    assert text[1] == "a.info\t3\t-\tinfo"
    assert text[3].endswith("\tfail")
    d = report.to_dict()
    assert d["passed"] is False
    assert d["checks"]["b.check"] == {"value": 0.5, "threshold": 1.0, "verdict": True}


def test_report_rejects_duplicate_key():
    report = DiagnosticsReport()
    report.extend([("x", 1.0, None, None)])
    with pytest.raises(ValueError):
        report.add("x", 2.0)
