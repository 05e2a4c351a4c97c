"""
Comparison functions and the pointwise check L v < 0.

    global      v   = r^(-alpha-beta) (x2+1)^alpha,   r = |x - (0, -1)|
    uniqueness  v_I = r_I^(-3 beta/4) (x2+1)^(beta/2), summed over the corner set
    corner      v_1 = C m0 r^(1+alpha) sin(tau + theta - theta0) near A_-/A_+,
                checked with the operator without its b0 term
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from solver.linear import LinearEllipticProblem

VARIANTS = ("global", "corner", "uniqueness")


@dataclass(frozen=True)
class BarrierSpec:
    alpha: float
    beta: float
    variant: str = "global"
    corner: tuple | None = None  # corner 變體的角點
    theta0: float = 0.0  # 流體扇形起始邊的方向
    opening: float = math.pi  # 扇形張角
    tau: float | None = None
    corners: tuple = ()  # uniqueness 變體的 P~
    radius: float = 0.5  # corner: 檢查半徑；uniqueness: 排除半徑
    amplitude: float = 1.0  # C m0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown barrier variant {self.variant!r}")
        if not 0.0 < self.beta < self.alpha < 1.0:
            raise ValueError(f"need 0 < beta < alpha < 1 (alpha={self.alpha}, beta={self.beta})")
        if self.variant == "corner" and self.corner is None:
            raise ValueError("corner barrier needs a corner point")
        if self.variant == "uniqueness" and len(self.corners) == 0:
            raise ValueError("uniqueness barrier needs the corner set")
        if self.tau is not None and not self.tau > 0.0:
            raise ValueError("tau must be positive")


@dataclass(frozen=True)
class BarrierVerdict:
    ok: bool
    max_value: float
    worst_point: tuple
    checked: int


def default_tau(opening: float, delta: float) -> float:
    return min(delta, (math.pi - opening) / 4.0)


def corner_sector(profile, which: str) -> tuple[tuple, float, float]:
    """(corner, theta0, opening) with the fluid sweeping counterclockwise from theta0."""
    if which == "A-":
        corner = profile.corner_minus
        start = math.atan2(float(profile.f_arc.d1(-1.0)), 1.0)
        end = math.atan2(-float(profile.f_minus.d1(-1.0)), -1.0)
    elif which == "A+":
        corner = profile.corner_plus
        start = math.atan2(float(profile.f_plus.d1(1.0)), 1.0)
        end = math.atan2(-float(profile.f_arc.d1(1.0)), -1.0)
    else:
        raise ValueError(f"unknown corner {which!r}")
    return corner, start, (end - start) % (2.0 * math.pi)


# ----------------------------
# r^(-a) y^b 型：對數導數
# ----------------------------
def _power_barrier(x1, x2, center, a, b):
    d1 = x1 - center[0]
    d2 = x2 - center[1]
    r2 = d1**2 + d2**2
    y = x2 + 1.0
    v = r2 ** (-0.5 * a) * y**b
    L1 = -a * d1 / r2
    L2 = -a * d2 / r2 + b / y
    L11 = -a * (r2 - 2.0 * d1**2) / r2**2
    L22 = -a * (r2 - 2.0 * d2**2) / r2**2 - b / y**2
    L12 = 2.0 * a * d1 * d2 / r2**2
    return v, (v * L1, v * L2), (v * (L11 + L1**2), v * (L12 + L1 * L2), v * (L22 + L2**2))


def _corner_barrier(x1, x2, spec: BarrierSpec):
    p = 1.0 + spec.alpha
    tau = spec.tau if spec.tau is not None else default_tau(spec.opening, 0.1)
    d1 = x1 - spec.corner[0]
    d2 = x2 - spec.corner[1]
    r = np.hypot(d1, d2)
    theta = spec.theta0 + np.mod(np.arctan2(d2, d1) - spec.theta0, 2.0 * math.pi)
    phi = tau + theta - spec.theta0
    C = spec.amplitude
    # v = C r^p sin(phi)，極座標微分換成直角座標
    v = C * r**p * np.sin(phi)
    v_r = C * p * r ** (p - 1.0) * np.sin(phi)
    v_t = C * r**p * np.cos(phi)
    v_rr = C * p * (p - 1.0) * r ** (p - 2.0) * np.sin(phi)
    v_rt = C * p * r ** (p - 1.0) * np.cos(phi)
    v_tt = -v
    c, s = d1 / r, d2 / r
    vx1 = c * v_r - s * v_t / r
    vx2 = s * v_r + c * v_t / r
    v11 = c * c * v_rr - 2.0 * s * c * v_rt / r + s * s * v_tt / r**2 + s * s * v_r / r + 2.0 * s * c * v_t / r**2
    v22 = s * s * v_rr + 2.0 * s * c * v_rt / r + c * c * v_tt / r**2 + c * c * v_r / r - 2.0 * s * c * v_t / r**2
    v12 = s * c * v_rr + (c * c - s * s) * v_rt / r - s * c * v_tt / r**2 - s * c * v_r / r - (c * c - s * s) * v_t / r**2
    return v, (vx1, vx2), (v11, v12, v22)


def barrier_values(spec: BarrierSpec, x1, x2):
    """(v, (v_x1, v_x2), (v_x1x1, v_x1x2, v_x2x2)) with analytic derivatives"""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if spec.variant == "global":
        return _power_barrier(x1, x2, (0.0, -1.0), spec.alpha + spec.beta, spec.alpha)
    if spec.variant == "corner":
        return _corner_barrier(x1, x2, spec)
    total = None
    for c in spec.corners:
        part = _power_barrier(x1, x2, c, 0.75 * spec.beta, 0.5 * spec.beta)
        if total is None:
            total = part
        else:
            total = (
                total[0] + part[0],
                tuple(t + q for t, q in zip(total[1], part[1])),
                tuple(t + q for t, q in zip(total[2], part[2])),
            )
    return total


def apply_operator(problem: LinearEllipticProblem, spec: BarrierSpec, x1, x2, with_b0: bool = True):
    v, (v1, v2), (v11, v12, v22) = barrier_values(spec, x1, x2)
    out = problem.a11 * v11 + 2.0 * problem.a12 * v12 + problem.a22 * v22
    out = out + problem.b1 * v1 + problem.b2 * v2
    if with_b0:
        out = out + problem.b0 * v
    return out


def barrier_check(coeffs: LinearEllipticProblem, spec: BarrierSpec) -> BarrierVerdict:
    """Scan L v over interior nodes (restricted per variant) and report the worst node."""
    grid = coeffs.grid
    x1, x2 = grid.x1, grid.x2
    mask = grid.interior.copy()
    if spec.variant == "corner":
        mask &= np.hypot(x1 - spec.corner[0], x2 - spec.corner[1]) < spec.radius
        mask &= np.hypot(x1 - spec.corner[0], x2 - spec.corner[1]) > 0.0
    elif spec.variant == "uniqueness":
        for c in spec.corners:
            mask &= np.hypot(x1 - c[0], x2 - c[1]) > spec.radius
    with np.errstate(divide="ignore", invalid="ignore"):
        Lv = apply_operator(coeffs, spec, x1, x2, with_b0=spec.variant != "corner")
    vals = np.where(mask, Lv, -np.inf)
    if not np.any(mask):
        return BarrierVerdict(ok=True, max_value=float("nan"), worst_point=(float("nan"), float("nan")), checked=0)
    k = int(np.argmax(vals))
    i, j = np.unravel_index(k, grid.shape)
    worst = float(vals[i, j])
    return BarrierVerdict(
        ok=bool(worst < 0.0),
        max_value=worst,
        worst_point=(float(x1[i, j]), float(x2[i, j])),
        checked=int(np.count_nonzero(mask)),
    )


def laplacian_problem(grid, e: float = 1.0) -> LinearEllipticProblem:
    """e * Laplacian, b = 0 (reference operator for barrier spot checks)"""
    one = np.full(grid.shape, e)
    zero = np.zeros(grid.shape)
    return LinearEllipticProblem(grid, one, zero, one, zero, zero, zero, zero, zero)


def corner_barrier_spec(profile, which: str, alpha: float, beta: float, radius: float = 0.5, amplitude: float = 1.0):
    """Corner comparison function at A-/A+; None when the corner is flat (no sector to fit)."""
    corner, theta0, opening = corner_sector(profile, which)
    tau = default_tau(opening, profile.delta)
    if not tau > 0.0:
        return None
    return BarrierSpec(
        alpha=alpha,
        beta=beta,
        variant="corner",
        corner=corner,
        theta0=theta0,
        opening=opening,
        tau=tau,
        radius=radius,
        amplitude=amplitude,
    )
