"""
Run orchestration: builds the problem from a RunConfig, dispatches the mode
and writes every artifact plus manifest.json into the output directory.

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 solver failure,
3 configuration failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from analysis.barriers import BarrierSpec, barrier_check, corner_barrier_spec
from analysis.decay import decay_fit
from analysis.norms import WeightedNormSpec, weighted_norm_terms
from analysis.report import DiagnosticsReport
from analysis.residuals import EQUATIONS, euler_residuals, observed_order, vorticity_check
from analysis.streamlines import default_seeds, max_variation, streamline_conservation
from analysis.truncation import truncation_study
from cli.config import RunConfig
from common.errors import (
    AnalysisError,
    ConfigError,
    ConstraintViolation,
    FarFieldError,
    GeometryError,
    MaxIterationsExceeded,
    SubsonicFlowError,
    SubsonicViolation,
)
from common.functions import family_from_spec
from common.log import get_logger
from common.report_io import write_field_table, write_json, write_report
from farfield.state import build_farfield, check_farfield_norm
from farfield.stream_limit import build_stream_limit, check_l_bounds, stream_limit_norms
from geometry.domain import TruncatedDomain, truncate
from geometry.grid import grid_over
from geometry.profile import BoundaryProfile, build_profile
from solver.boundary import boundary_data
from solver.fixed_point import SolveReport, assemble_linearized, fixed_point_solve
from solver.linear import manufactured_problem, sine_exp_solution, solve_problem
from solver.recovery import recover_euler_fields
from thermo.coefficients import background_ellipticity

log = get_logger("cli")

# ---- 設定區 ----
EXIT_PASS = 0
EXIT_VERDICT = 1
EXIT_SOLVER = 2
EXIT_CONFIG = 3
IDENTITY_SAMPLES = 1000
IDENTITY_TOL = 1e-12
REFINE_ORDER_MIN = 1.0
REFINE_RATIO_MIN = 1.7
SHEAR_VORTICITY_KEEP = 0.1
ROUNDOFF_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class Problem:
    profile: BoundaryProfile
    far: object
    stream: object
    domain: TruncatedDomain


def build_problem(cfg: RunConfig) -> Problem:
    g, w = cfg.gas, cfg.weights
    profile = build_profile(
        cfg.profile.pieces(),
        delta=w.delta,
        D0=w.D0,
        alpha=w.alpha,
        beta=w.beta,
        allow_flat_corners=cfg.profile.allow_flat_corners,
        on_norm_violation=cfg.profile.on_norm_violation,
    )
    far = build_farfield(
        g.gamma,
        g.p0,
        g.rho0,
        g.m_star,
        g.m0,
        g.eps,
        m_spec=cfg.farfield.m_inf,
        rho_spec=cfg.farfield.rho_inf,
        alpha=w.alpha,
        beta=w.beta,
    )
    stream = build_stream_limit(far, strict_paper=cfg.farfield.strict_paper)
    domain = truncate(profile, cfg.truncation.R, cfg.truncation.H)
    return Problem(profile=profile, far=far, stream=stream, domain=domain)


# ----------------------------
# 產出檔案
# ----------------------------
class Artifacts:
    def __init__(self, out):
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.names: list[str] = []

    def _path(self, name: str) -> Path:
        if name not in self.names:
            self.names.append(name)
        return self.out / name

    def json(self, name: str, obj: dict):
        write_json(self._path(name), obj)

    def report(self, name: str, rows):
        write_report(self._path(name), rows)

    def field(self, name: str, grid, values):
        write_field_table(self._path(f"{name}.csv"), grid.x1, grid.x2, values, name)

    def table(self, name: str, header: str, rows):
        np.savetxt(self._path(name), np.asarray(rows, dtype=float), delimiter=",", header=header, comments="", fmt="%.17g")

    def manifest(self, mode: str, exit_code: int):
        entries = [{"name": n, "bytes": (self.out / n).stat().st_size} for n in self.names]
        write_json(self.out / "manifest.json", {"mode": mode, "exit_code": exit_code, "artifacts": entries})


# ----------------------------
# 各模式
# ----------------------------
def _solve(cfg: RunConfig, problem: Problem, art: Artifacts):
    psi, report = fixed_point_solve(problem.domain, problem.stream, cfg.solver_config())
    fields = recover_euler_fields(psi, problem.stream)
    for name, values in fields.named().items():
        art.field(name, psi.grid, values)
    art.json("solve_report.json", report.to_dict())
    return psi, report, fields


def _solve_rows(report: SolveReport, fields) -> list:
    max_mach = float(np.max(fields.mach))
    return report.rows() + [("solve.max_mach", max_mach, 1.0, max_mach < 1.0)]


def run_solve(cfg: RunConfig, problem: Problem, art: Artifacts) -> bool:
    _, report, fields = _solve(cfg, problem, art)
    rows = _solve_rows(report, fields)
    art.report("report.txt", rows)
    return all(v is not False for *_, v in rows)


def boundary_identity(problem: Problem, n: int = IDENTITY_SAMPLES) -> tuple[float, float]:
    """(max |l + g| on the lower boundary, max |g| above x2 = D0 + 1)"""
    data = boundary_data(problem.domain, problem.stream)
    R, H = problem.domain.R, problem.domain.H
    x1 = np.linspace(-R, R, n)
    wall = float(np.max(np.abs(data.psi_trace(x1, problem.profile(x1)))))
    high = np.linspace(problem.profile.D0 + 1.0, H, 50)[1:]
    X1, X2 = np.meshgrid(np.linspace(-R, R, 20), high, indexing="ij")
    far = float(np.max(np.abs(data.g(X1, X2))))
    return wall, far


def diagnose(cfg: RunConfig, problem: Problem, psi, report: SolveReport, fields) -> DiagnosticsReport:
    w, v = cfg.weights, cfg.verify
    stream, profile, domain = problem.stream, problem.profile, problem.domain
    m0 = problem.far.m0
    diag = DiagnosticsReport()
    diag.extend(_solve_rows(report, fields))

    # 邊界資料
    wall, far = boundary_identity(problem)
    diag.add("boundary.trace_on_wall", wall, IDENTITY_TOL, wall <= IDENTITY_TOL)
    diag.add("boundary.g_above_D0", far, 0.0, far == 0.0)

    # 遠場與幾何假設
    ff = check_farfield_norm(problem.far)
    diag.add("farfield.norm", ff.value, ff.threshold, ff.ok)
    for name, ratio in sorted(stream_limit_norms(stream).items()):
        diag.add(f"farfield.{name}_norm_ratio", ratio)
    l_ok = check_l_bounds(stream)
    diag.add("farfield.l_bounds", int(l_ok), None, l_ok)
    diag.add("farfield.background_e", background_ellipticity(stream))
    diag.add("profile.norm_minus", profile.norm_minus, 1.0)
    diag.add("profile.norm_plus", profile.norm_plus, 1.0)
    diag.add("profile.theta_minus", profile.theta_minus)
    diag.add("profile.theta_plus", profile.theta_plus)

    # 比較函數
    coeffs = assemble_linearized(psi, stream, cfg.solver.quad_points)
    glob = barrier_check(coeffs, BarrierSpec(w.alpha, w.beta))
    diag.add("barrier.global.max_Lv", glob.max_value, 0.0, glob.ok)
    uniq = barrier_check(
        coeffs,
        BarrierSpec(w.alpha, w.beta, variant="uniqueness", corners=domain.corner_set, radius=v.uniqueness_radius),
    )
    diag.add("barrier.uniqueness.max_Lv", uniq.max_value, 0.0, uniq.ok)
    for which in ("A-", "A+"):
        spec = corner_barrier_spec(profile, which, w.alpha, w.beta, radius=v.corner_radius, amplitude=m0)
        if spec is None:
            diag.add(f"barrier.corner.{which}.max_Lv", "flat")
            continue
        # 只報告，不判定
        verdict = barrier_check(coeffs, spec)
        diag.add(f"barrier.corner.{which}.max_Lv", verdict.max_value, 0.0)

    # 殘差與渦度
    corners = domain.profile_corners
    residuals = euler_residuals(fields, corners=corners, exclusion=v.corner_exclusion)
    for name in EQUATIONS:
        diag.add(f"residual.{name}.linf", residuals[name].linf)
        diag.add(f"residual.{name}.l2", residuals[name].l2)
    diag.tables["residuals"] = {n: {"linf": r.linf, "l2": r.l2} for n, r in residuals.items()}
    vort = vorticity_check(fields, corners=corners, exclusion=v.corner_exclusion)
    diag.add("vorticity.max", vort.max_abs)

    # 流線
    try:
        traces = streamline_conservation(psi, fields, default_seeds(psi.grid, v.seeds))
        entropy, bernoulli = max_variation(traces)
        diag.add("streamline.entropy_variation", entropy)
        diag.add("streamline.bernoulli_variation", bernoulli)
        diag.add("streamline.psi_drift", max(t.psi_drift for t in traces))
    except AnalysisError as e:
        diag.add("streamline.error", type(e).__name__, None, False)

    # 衰減
    try:
        fit = decay_fit(psi, stream, beta=w.beta)
        for theta, slope in sorted(fit.exponents.items()):
            key = f"{math.degrees(theta):.0f}"
            diag.add(f"decay.exponent.{key}", slope)
            diag.exponents[key] = slope
        diag.add("decay.sup_weighted", fit.sup_statistic)
        diag.add("decay.band_maxima_nonincreasing", int(fit.nonincreasing), None, fit.nonincreasing)
        diag.tables["decay_band_maxima"] = dict(zip((f"{r:g}" for r in fit.radii), fit.band_maxima))
    except AnalysisError as e:
        diag.add("decay.error", type(e).__name__, None, False)

    # 加權範數
    spec = WeightedNormSpec(
        k=2,
        alpha=w.alpha,
        beta=w.beta,
        sigma=-1.0 - w.alpha,
        P=corners,
        n_random=v.n_random,
        seed=cfg.seed,
    )
    terms = weighted_norm_terms(psi - stream.l(psi.grid.x2), spec)
    diag.add("norm.psi_minus_l", terms.total)
    diag.add("norm.psi_minus_l_over_m0", terms.total / m0)
    return diag


def _refinement_rows(cfg: RunConfig, problem: Problem, psi, fields, diag: DiagnosticsReport):
    """
    Coarse solve at half resolution compared with the fine one.

    Residual orders must reach REFINE_ORDER_MIN and the streamline variations
    must shrink by REFINE_RATIO_MIN; values already below ROUNDOFF_FLOOR pass.
    With a constant far field the vorticity must shrink the same way.
    With a sheared far field it is physical: the fine value must keep
    SHEAR_VORTICITY_KEEP of the coarse one.
    """
    coarse_cfg = replace(cfg.solver_config(progress=False), nx=(cfg.grid.nx + 1) // 2, nz=(cfg.grid.nz + 1) // 2)
    psi_c, _ = fixed_point_solve(problem.domain, problem.stream, coarse_cfg)
    fields_c = recover_euler_fields(psi_c, problem.stream)
    corners = problem.domain.profile_corners
    exclusion = cfg.verify.corner_exclusion

    # 殘差階數
    fine = euler_residuals(fields, corners=corners, exclusion=exclusion)
    coarse = euler_residuals(fields_c, corners=corners, exclusion=exclusion)
    h = (psi_c.grid.hxi, fields.grid.hxi)
    for name in EQUATIONS:
        order = observed_order(h, (coarse[name].linf, fine[name].linf))[0]
        ok = order >= REFINE_ORDER_MIN or fine[name].linf <= ROUNDOFF_FLOOR
        diag.add(f"refine.residual.{name}.order", order, REFINE_ORDER_MIN, ok)

    # 渦度
    vc = vorticity_check(fields_c, corners=corners, exclusion=exclusion).max_abs
    vf = vorticity_check(fields, corners=corners, exclusion=exclusion).max_abs
    if problem.far.is_constant:
        ratio = vc / vf if vf > 0.0 else math.inf
        ok = ratio >= REFINE_RATIO_MIN or vf <= ROUNDOFF_FLOOR
        diag.add("refine.vorticity.ratio", ratio, REFINE_RATIO_MIN, ok)
    else:
        keep = vf / vc if vc > 0.0 else math.nan
        diag.add("refine.vorticity.kept", keep, SHEAR_VORTICITY_KEEP, keep >= SHEAR_VORTICITY_KEEP)

    # 流線守恆
    seeds = cfg.verify.seeds
    try:
        var_c = max_variation(streamline_conservation(psi_c, fields_c, default_seeds(psi_c.grid, seeds)))
        var_f = max_variation(streamline_conservation(psi, fields, default_seeds(psi.grid, seeds)))
    except AnalysisError as e:
        diag.add("refine.streamline.error", type(e).__name__, None, False)
        return
    for name, c, f in zip(("entropy", "bernoulli"), var_c, var_f):
        ratio = c / f if f > 0.0 else math.inf
        ok = ratio >= REFINE_RATIO_MIN or f <= ROUNDOFF_FLOOR
        diag.add(f"refine.streamline.{name}.ratio", ratio, REFINE_RATIO_MIN, ok)


def run_verify(cfg: RunConfig, problem: Problem, art: Artifacts) -> bool:
    psi, report, fields = _solve(cfg, problem, art)
    diag = diagnose(cfg, problem, psi, report, fields)
    if cfg.verify.refine:
        _refinement_rows(cfg, problem, psi, fields, diag)
    art.report("report.txt", diag.rows())
    art.json("diagnostics.json", diag.to_dict())
    if not diag.passed:
        log.warning("❌ failed checks: %s", ", ".join(diag.failures))
    return diag.passed


def run_truncation(cfg: RunConfig, problem: Problem, art: Artifacts) -> bool:
    study = truncation_study(problem.profile, problem.stream, cfg.study.R_list, cfg.truncation.H, cfg.solver_config(progress=False))
    R = study.R_list
    art.table(
        "truncation.csv",
        "R_a,R_b,difference",
        [(a, b, d) for a, b, d in zip(R, R[1:], study.differences)],
    )
    rows = [(f"truncation.diff.R{a:g}_R{b:g}", d, None, None) for a, b, d in zip(R, R[1:], study.differences)]
    rows.append(("truncation.decreasing", int(study.decreasing), None, study.decreasing))
    rows.append(("truncation.exponent", study.exponent, None, None))
    rows += [(f"truncation.iterations.R{r:g}", n, None, None) for r, n in zip(R, study.iterations)]
    art.report("report.txt", rows)
    return study.decreasing


def mms_study(cfg: RunConfig) -> tuple[list, list, list]:
    """(h, L-infinity errors, observed orders) over the configured levels"""
    m = cfg.mms
    bottom = family_from_spec(m.bottom)
    solution = sine_exp_solution()
    hs, errors = [], []
    for n in m.levels:
        grid = grid_over(bottom, 0.0, 1.0, 1.0, int(n), int(n), grading=m.grading)
        problem, exact = manufactured_problem(grid, solution, m.a11, m.a12, m.a22, m.b1, m.b2, m.b0)
        sol = solve_problem(problem, cfg.solver.linear_solver)
        hs.append(grid.hxi)
        errors.append((sol.field - exact).max_abs())
        log.info("📐 mms n=%d: error %.3e", int(n), errors[-1])
    return hs, errors, observed_order(hs, errors)


def run_mms(cfg: RunConfig, problem, art: Artifacts) -> bool:
    m = cfg.mms
    hs, errors, orders = mms_study(cfg)
    table = [(int(n), h, e, o) for n, h, e, o in zip(m.levels, hs, errors, [math.nan] + orders)]
    art.table("mms.csv", "n,h,error,order", table)
    rows = [(f"mms.error.n{int(n)}", e, None, None) for n, e in zip(m.levels, errors)]
    ok = True
    for n, order in zip(m.levels[1:], orders):
        passed = m.order_low <= order <= m.order_high
        ok = ok and passed
        rows.append((f"mms.order.n{int(n)}", order, f"[{m.order_low:g}, {m.order_high:g}]", passed))
    art.report("report.txt", rows)
    return ok


MODE_HANDLERS = {
    "solve": run_solve,
    "verify": run_verify,
    "truncation-study": run_truncation,
    "mms": run_mms,
}


def _error_detail(e: Exception) -> dict:
    detail = {"ok": False, "error": str(e), "kind": type(e).__name__}
    if isinstance(e, SubsonicViolation):
        detail["nodes"] = len(e.nodes)
        detail["points"] = [list(p) for p in e.points[:20]]
    elif isinstance(e, MaxIterationsExceeded):
        detail["iterations"] = e.iterations
        detail["update_norm"] = e.update_norm
    elif isinstance(e, ConstraintViolation):
        detail["violations"] = e.violations
    return detail


def run(cfg: RunConfig, out=None) -> dict:
    """
    Execute one run. Returns {"ok", "exit_code", "mode", "error"} and always
    leaves manifest.json in the output directory.
    """
    out_dir = out if out is not None else (cfg.out or "out")
    art = Artifacts(out_dir)
    handler = MODE_HANDLERS[cfg.mode]
    log.info("🚀 %s -> %s", cfg.mode, art.out)
    try:
        problem = None if cfg.mode == "mms" else build_problem(cfg)
        passed = handler(cfg, problem, art)
        code = EXIT_PASS if passed else EXIT_VERDICT
        result = {"ok": passed, "exit_code": code, "mode": cfg.mode, "error": None if passed else "verdict failure"}
    except (ConfigError, GeometryError, FarFieldError) as e:
        log.error("❌ configuration failure: %s", e)
        art.json("error.json", _error_detail(e))
        result = {"ok": False, "exit_code": EXIT_CONFIG, "mode": cfg.mode, "error": str(e)}
    except SubsonicFlowError as e:
        log.error("❌ solver failure: %s", e)
        art.json("error.json", _error_detail(e))
        result = {"ok": False, "exit_code": EXIT_SOLVER, "mode": cfg.mode, "error": str(e)}
    art.manifest(cfg.mode, result["exit_code"])
    if result["ok"]:
        log.info("✅ %s passed", cfg.mode)
    return result
