"""Decay of psi - l toward infinity, measured on dyadic radii R/8, R/4, R/2."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from common.errors import InsufficientRadii
from solver.fields import GridField

DEFAULT_RAYS = (math.pi / 4.0, math.pi / 2.0, 3.0 * math.pi / 4.0)
SECTOR_HALF = math.pi / 12.0
SLACK = 0.05


@dataclass(frozen=True)
class DecayFit:
    radii: tuple
    exponents: dict  # ray angle -> fitted slope (nan when nothing to fit)
    band_maxima: tuple  # max |x|^beta |psi - l| per dyadic band
    sup_statistic: float
    nonincreasing: bool
    samples: dict = field(default_factory=dict, repr=False)


def decay_fit(psi: GridField, stream, rays=None, beta: float = 0.4, R: float | None = None) -> DecayFit:
    """
    Least-squares slope of log|psi - l| against log|x| over the nodes of each
    ray sector (half width SECTOR_HALF) inside the bands [r/sqrt2, r sqrt2].
    """
    grid = psi.grid
    if R is None:
        R = min(abs(grid.x_lo), abs(grid.x_hi))
    radii = (R / 8.0, R / 4.0, R / 2.0)
    rays = DEFAULT_RAYS if rays is None else tuple(rays)

    dev = np.abs(psi.values - stream.l(grid.x2))
    r = np.hypot(grid.x1, grid.x2)
    angle = np.arctan2(grid.x2, grid.x1)

    def band(rr):
        return (r >= rr / math.sqrt(2.0)) & (r <= rr * math.sqrt(2.0))

    exponents = {}
    samples = {}
    for theta in rays:
        sector = np.abs(angle - theta) <= SECTOR_HALF
        picked = np.zeros(grid.shape, dtype=bool)
        for rr in radii:
            sel = band(rr) & sector
            if not np.any(sel):
                raise InsufficientRadii(f"ray {theta:.3f}: no nodes near radius {rr:.3g}")
            picked |= sel
        use = picked & (dev > 0.0)
        samples[theta] = int(np.count_nonzero(use))
        if np.count_nonzero(use) < 2:
            exponents[theta] = math.nan
        else:
            slope, _ = np.polyfit(np.log(r[use]), np.log(dev[use]), 1)
            exponents[theta] = float(slope)

    weighted = r**beta * dev
    maxima = []
    for rr in radii:
        sel = band(rr)
        maxima.append(float(np.max(weighted[sel])) if np.any(sel) else 0.0)
    annulus = (r >= R / 8.0) & (r <= R / 2.0)
    sup = float(np.max(weighted[annulus])) if np.any(annulus) else 0.0
    nonincreasing = all(maxima[k + 1] <= (1.0 + SLACK) * maxima[k] for k in range(len(maxima) - 1))
    return DecayFit(
        radii=radii,
        exponents=exponents,
        band_maxima=tuple(maxima),
        sup_statistic=sup,
        nonincreasing=nonincreasing,
        samples=samples,
    )
