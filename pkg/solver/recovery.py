"""Euler fields U = (m, p, rho) and E from a converged stream function."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from geometry.grid import CurvilinearGrid
from solver.fields import GridField
from solver.fixed_point import subsonic_state
from thermo.coefficients import energy, mach, pressure


@dataclass(frozen=True, eq=False)
class EulerFields:
    grid: CurvilinearGrid
    psi: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    E: np.ndarray
    mach: np.ndarray
    gamma: float

    def named(self) -> dict:
        """欄位名稱 -> 陣列（輸出表格用）"""
        return {
            "psi": self.psi,
            "m1": self.m1,
            "m2": self.m2,
            "rho": self.rho,
            "p": self.p,
            "E": self.E,
            "mach": self.mach,
        }


def recover_euler_fields(psi: GridField, stream) -> EulerFields:
    """m = (psi_x2, -psi_x1), rho from Bernoulli, p from the gamma law."""
    p1, p2, density = subsonic_state(psi, stream)
    m1, m2 = p2, -p1
    rho = density.rho
    g = stream.gamma
    p = pressure(rho, psi.values, stream)
    return EulerFields(
        grid=psi.grid,
        psi=psi.values,
        m1=m1,
        m2=m2,
        rho=rho,
        p=p,
        E=energy(m1, m2, rho, p, g),
        mach=mach(m1, m2, rho, p, g),
        gamma=g,
    )
