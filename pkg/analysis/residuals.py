"""Discrete Euler residuals, vorticity and refinement orders."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from solver.fields import GridField
from solver.recovery import EulerFields

EQUATIONS = ("mass", "momentum_x1", "momentum_x2", "energy")


@dataclass(frozen=True)
class ResidualNorms:
    linf: float
    l2: float


@dataclass(frozen=True)
class VorticityResult:
    max_abs: float
    location: tuple


STENCIL_LAYERS = 2


def stencil_mask(grid, layers: int = STENCIL_LAYERS) -> np.ndarray:
    """Nodes at least `layers` index steps away from every boundary side."""
    mask = np.zeros(grid.shape, dtype=bool)
    mask[layers : grid.nx - layers, layers : grid.nz - layers] = True
    return mask


def corner_mask(grid, corners=(), radius: float = 0.0) -> np.ndarray:
    """
    Nodes farther than `radius` from every corner whose divergence stencil
    uses only interior differences (see stencil_mask).
    """
    mask = grid.interior & stencil_mask(grid)
    for c in corners:
        mask &= np.hypot(grid.x1 - c[0], grid.x2 - c[1]) > radius
    return mask


def _divergence(grid, f1, f2) -> np.ndarray:
    d1, _ = GridField(grid, f1).gradient()
    _, d2 = GridField(grid, f2).gradient()
    return d1 + d2


def euler_residuals(fields: EulerFields, grid=None, corners=(), exclusion: float = 0.0) -> dict:
    """
    Conservative residuals
        div m,  div(m1 m / rho + p e1),  div(m2 m / rho + p e2),  div(m (E + p/rho))
    as L-infinity and root-mean-square over corner_mask nodes.
    """
    grid = grid or fields.grid
    m1, m2, rho, p, E = fields.m1, fields.m2, fields.rho, fields.p, fields.E
    u1, u2 = m1 / rho, m2 / rho
    H = E + p / rho
    res = {
        "mass": _divergence(grid, m1, m2),
        "momentum_x1": _divergence(grid, m1 * u1 + p, m1 * u2),
        "momentum_x2": _divergence(grid, m2 * u1, m2 * u2 + p),
        "energy": _divergence(grid, m1 * H, m2 * H),
    }
    mask = corner_mask(grid, corners, exclusion)
    out = {}
    for name in EQUATIONS:
        v = res[name][mask]
        out[name] = ResidualNorms(
            linf=float(np.max(np.abs(v))) if v.size else 0.0,
            l2=float(np.sqrt(np.mean(v**2))) if v.size else 0.0,
        )
    return out


def vorticity_check(fields: EulerFields, corners=(), exclusion: float = 0.0) -> VorticityResult:
    """max |curl(m / rho)| over interior nodes"""
    grid = fields.grid
    _, du1_dx2 = GridField(grid, fields.m1 / fields.rho).gradient()
    du2_dx1, _ = GridField(grid, fields.m2 / fields.rho).gradient()
    curl = np.abs(du2_dx1 - du1_dx2)
    mask = corner_mask(grid, corners, exclusion)
    if not np.any(mask):
        return VorticityResult(0.0, (math.nan, math.nan))
    vals = np.where(mask, curl, -1.0)
    i, j = np.unravel_index(int(np.argmax(vals)), grid.shape)
    return VorticityResult(float(curl[i, j]), (float(grid.x1[i, j]), float(grid.x2[i, j])))


def observed_order(h, errors) -> list:
    """log(e_k / e_{k+1}) / log(h_k / h_{k+1}) for consecutive levels"""
    h = [float(x) for x in h]
    e = [float(x) for x in errors]
    orders = []
    for k in range(len(e) - 1):
        if e[k] <= 0.0 or e[k + 1] <= 0.0:
            orders.append(math.nan)
        else:
            orders.append(math.log(e[k] / e[k + 1]) / math.log(h[k] / h[k + 1]))
    return orders
