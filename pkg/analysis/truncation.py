"""
Truncation study: solve on R_1 < R_2 < ... with the same grid spacing and
the same top H, then compare consecutive solutions on |x1| <= R_1 / 2.
"""

from __future__ import annotations

import asyncio
import math
from dataclasses import dataclass, replace

import numpy as np

from common.log import get_logger
from geometry.domain import truncate
from solver.fixed_point import SolverConfig, fixed_point_solve

log = get_logger("analysis")

ZERO_DIFF = 1e-14


@dataclass(frozen=True)
class TruncationStudy:
    R_list: tuple
    differences: tuple  # sup |psi_{R_{i+1}} - psi_{R_i}| on the overlap
    decreasing: bool
    exponent: float  # slope of log difference against log R (nan if not fittable)
    iterations: tuple


def columns_for(R: float, R_ref: float, nx_ref: int) -> int:
    """nx on [-R, R] with the spacing of an nx_ref grid on [-R_ref, R_ref]"""
    n = (nx_ref - 1) * R / R_ref
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"R = {R:g} is not commensurate with the reference spacing")
    return int(round(n)) + 1


def _solve_at(profile, stream, R: float, H: float, cfg: SolverConfig):
    domain = truncate(profile, R, H)
    psi, report = fixed_point_solve(domain, stream, cfg)
    return psi, report


async def _solve_all(profile, stream, R_list, H, configs):
    jobs = [asyncio.to_thread(_solve_at, profile, stream, R, H, cfg) for R, cfg in zip(R_list, configs)]
    return await asyncio.gather(*jobs)


def truncation_study(profile, stream, R_list, H: float, config: SolverConfig) -> TruncationStudy:
    """`config.nx` is the column count at R_list[0]; larger R keep its spacing."""
    R_list = tuple(float(r) for r in R_list)
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError(f"R_list must be increasing: {R_list}")
    configs = [replace(config, nx=columns_for(R, R_list[0], config.nx), progress=False) for R in R_list]
    log.info("🚀 truncation study over R = %s", ", ".join(f"{r:g}" for r in R_list))
    results = asyncio.run(_solve_all(profile, stream, R_list, H, configs))

    half = 0.5 * R_list[0]
    diffs = []
    for (psi_a, _), (psi_b, _) in zip(results, results[1:]):
        xa = psi_a.grid.xi
        xb = psi_b.grid.xi
        ca = np.flatnonzero(np.abs(xa) <= half + 1e-12)
        # 同一間距：以 x1 對齊欄位
        cb = np.searchsorted(xb, xa[ca] - 1e-9)
        if not np.allclose(xb[cb], xa[ca], atol=1e-9):
            raise ValueError("grid columns do not line up between truncations")
        diffs.append(float(np.max(np.abs(psi_b.values[cb, :] - psi_a.values[ca, :]))))

    all_zero = all(d <= ZERO_DIFF for d in diffs)
    decreasing = all_zero or all(b < a for a, b in zip(diffs, diffs[1:]))
    exponent = math.nan
    if len(diffs) >= 2 and min(diffs) > 0.0:
        exponent = float(np.polyfit(np.log(R_list[:-1]), np.log(diffs), 1)[0])
    log.info("📏 overlap differences: %s", ", ".join(f"{d:.3e}" for d in diffs))
    return TruncationStudy(
        R_list=R_list,
        differences=tuple(diffs),
        decreasing=decreasing,
        exponent=exponent,
        iterations=tuple(rep.iterations for _, rep in results),
    )
