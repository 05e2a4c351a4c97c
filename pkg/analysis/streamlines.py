"""
Streamline tracing: RK4 on the unit direction field m / |m| = (psi_x2, -psi_x1) / |grad psi|
interpolated (cubic, mapped coordinates) from the recovered fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from common.errors import LeftDomain, StagnationEncountered
from common.log import get_logger
from solver.recovery import EulerFields

log = get_logger("analysis")

STAGNATION_TOL = 1e-3  # |m| / m_ref 低於此值視為停滯


@dataclass(frozen=True)
class StreamlineTrace:
    seed: tuple
    steps: int
    length: float
    psi_drift: float
    entropy_variation: float
    bernoulli_variation: float


def default_seeds(grid, count: int = 10, low: float = 0.5, high: float = 4.0) -> list:
    """Seeds just inside the inflow side at heights low..high above the wall."""
    i = 2
    x1 = float(grid.x1[i, 0])
    f = float(grid.x2[i, 0])
    return [(x1, f + h) for h in np.linspace(low, high, count)]


class _Sampler:
    def __init__(self, fields: EulerFields):
        g = fields.grid
        self.grid = g
        axes = (g.xi, g.zeta)
        entropy = fields.p / fields.rho**fields.gamma
        bern = (fields.m1**2 + fields.m2**2) / (2.0 * fields.rho**2) + fields.gamma * fields.p / ((fields.gamma - 1.0) * fields.rho)
        self.interp = {
            name: RegularGridInterpolator(axes, arr, method="cubic")
            for name, arr in (("m1", fields.m1), ("m2", fields.m2), ("psi", fields.psi), ("entropy", entropy), ("bernoulli", bern))
        }

    def __call__(self, name, pts):
        xi, zeta = self.grid.to_mapped(pts[:, 0], pts[:, 1])
        xi = np.clip(xi, self.grid.x_lo, self.grid.x_hi)
        return self.interp[name](np.column_stack([xi, zeta]))


def streamline_conservation(
    psi,
    fields: EulerFields,
    seeds,
    step: float | None = None,
    max_steps: int = 20000,
    stagnation_points=None,
) -> list:
    """
    Trace every seed to the outflow side and report the relative variation
    (max - min) / |mean| of p / rho^gamma and of the Bernoulli function.
    """
    grid = fields.grid
    sample = _Sampler(fields)
    h = step if step is not None else 0.5 * grid.hxi
    m_ref = float(np.max(np.hypot(fields.m1, fields.m2)))
    if stagnation_points is None:
        bottom = grid.bottom
        stagnation_points = (bottom.corner_minus, bottom.corner_plus) if hasattr(bottom, "corner_minus") else ()

    pts = np.asarray(seeds, dtype=float).reshape(-1, 2)
    for p in pts:
        for c in stagnation_points:
            if np.hypot(p[0] - c[0], p[1] - c[1]) <= 1e-9 * max(1.0, abs(c[0])):
                raise StagnationEncountered(p)
        if not bool(grid.contains(p[0], p[1])):
            raise LeftDomain(p)

    def direction(x):
        m1 = sample("m1", x)
        m2 = sample("m2", x)
        speed = np.hypot(m1, m2)
        low = speed < STAGNATION_TOL * m_ref
        if np.any(low):
            raise StagnationEncountered(x[int(np.argmax(low))])
        return np.column_stack([m1 / speed, m2 / speed])

    def inside(x):
        return grid.contains(x[:, 0], x[:, 1])

    n = len(pts)
    x = pts.copy()
    active = np.ones(n, dtype=bool)
    history = {name: [sample(name, x)] for name in ("psi", "entropy", "bernoulli")}
    steps = np.zeros(n, dtype=int)
    for _ in range(max_steps):
        if not np.any(active):
            break
        xa = x[active]
        k1 = direction(xa)
        k2 = direction(_clamp(grid, xa + 0.5 * h * k1))
        k3 = direction(_clamp(grid, xa + 0.5 * h * k2))
        k4 = direction(_clamp(grid, xa + h * k3))
        new = xa + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0

        # 出口側結束；其他方向離開則為錯誤
        done = new[:, 0] >= grid.x_hi - grid.hxi
        escaped = ~done & ~inside(new)
        if np.any(escaped):
            raise LeftDomain(new[int(np.argmax(escaped))])
        idx = np.flatnonzero(active)
        x[idx] = new
        steps[idx] += 1
        keep = ~done
        if np.any(keep):
            for name in history:
                vals = np.full(n, np.nan)
                vals[idx[keep]] = sample(name, new[keep])
                history[name].append(vals)
        active[idx[done]] = False
    else:
        log.warning("⚠️ %d trace(s) hit max_steps", int(np.count_nonzero(active)))

    traces = []
    table = {name: np.vstack(v) for name, v in history.items()}
    for s in range(n):
        ps = table["psi"][:, s]
        en = table["entropy"][:, s]
        be = table["bernoulli"][:, s]
        ps, en, be = ps[np.isfinite(ps)], en[np.isfinite(en)], be[np.isfinite(be)]
        traces.append(
            StreamlineTrace(
                seed=tuple(map(float, pts[s])),
                steps=int(steps[s]),
                length=float(steps[s] * h),
                psi_drift=float(np.max(np.abs(ps - ps[0]))),
                entropy_variation=_variation(en),
                bernoulli_variation=_variation(be),
            )
        )
    return traces


def _clamp(grid, pts):
    out = pts.copy()
    out[:, 0] = np.clip(out[:, 0], grid.x_lo, grid.x_hi)
    return out


def _variation(values) -> float:
    if values.size == 0:
        return 0.0
    mean = float(np.mean(values))
    return float((np.max(values) - np.min(values)) / abs(mean)) if mean != 0.0 else float(np.ptp(values))


def max_variation(traces) -> tuple[float, float]:
    return (
        max((t.entropy_variation for t in traces), default=0.0),
        max((t.bernoulli_variation for t in traces), default=0.0),
    )
