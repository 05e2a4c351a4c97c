"""
Coefficients of the stream-function equation a_ij psi_{x_i x_j} = F and their
partials, evaluated pointwise from a solved DensityState.

    K   = (gamma-1) A rho^(gamma+1)         (= c^2 rho^2)
    a11 = K - psi_x2^2,  a12 = psi_x1 psi_x2,  a22 = K - psi_x1^2
    F   = ((gamma-1)/gamma) rho^(gamma+3) (gamma A B' - 2 A' B + A A' rho^(gamma-1))

Partials in (psi, psi_x1, psi_x2) go through rho(chi, psi) with
chi = |grad psi|^2 / 2, so d rho / d psi_xi = rho_chi * psi_xi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from common.log import get_logger
from thermo.density import DensityState

log = get_logger("thermo")


@dataclass(frozen=True, eq=False)
class CoefficientBundle:
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    F: np.ndarray
    da22_dpsi: np.ndarray
    dF_dpsi: np.ndarray
    da22_dgrad: tuple
    dF_dgrad: tuple

    @property
    def a21(self) -> np.ndarray:
        return self.a12

    @property
    def determinant(self) -> np.ndarray:
        return self.a11 * self.a22 - self.a12**2


def coefficients(psi, grad_psi, density: DensityState, stream) -> CoefficientBundle:
    p1 = np.asarray(grad_psi[0], dtype=float)
    p2 = np.asarray(grad_psi[1], dtype=float)
    lines = density.streamline
    if lines is None:
        lines = stream.streamline_functions(np.asarray(psi, dtype=float))
    A, A1, A2, B, B1, B2 = lines
    g = stream.gamma
    rho = density.rho
    r_chi = density.rho_chi
    r_psi = density.rho_psi

    K = (g - 1.0) * A * rho ** (g + 1.0)
    a11 = K - p2**2
    a12 = p1 * p2
    a22 = K - p1**2

    c = (g - 1.0) / g
    G = g * A * B1 - 2.0 * A1 * B + A * A1 * rho ** (g - 1.0)
    F = c * rho ** (g + 3.0) * G

    # ∂K
    K_rho = (g - 1.0) * (g + 1.0) * A * rho**g
    K_psi = (g - 1.0) * A1 * rho ** (g + 1.0) + K_rho * r_psi
    K_p1 = K_rho * r_chi * p1
    K_p2 = K_rho * r_chi * p2

    # ∂F
    G_rho = A * A1 * (g - 1.0) * rho ** (g - 2.0)
    G_psi = (
        g * (A1 * B1 + A * B2)
        - 2.0 * (A2 * B + A1 * B1)
        + (A1**2 + A * A2) * rho ** (g - 1.0)
        + G_rho * r_psi
    )
    F_rho = c * ((g + 3.0) * rho ** (g + 2.0) * G + rho ** (g + 3.0) * G_rho)
    F_psi = c * ((g + 3.0) * rho ** (g + 2.0) * r_psi * G + rho ** (g + 3.0) * G_psi)
    F_p1 = F_rho * r_chi * p1
    F_p2 = F_rho * r_chi * p2

    return CoefficientBundle(
        a11=a11,
        a12=a12,
        a22=a22,
        F=F,
        da22_dpsi=K_psi,
        dF_dpsi=F_psi,
        da22_dgrad=(K_p1 - 2.0 * p1, K_p2),
        dF_dgrad=(F_p1, F_p2),
    )


# ----------------------------
# 物理量
# ----------------------------
def pressure(rho, psi, stream):
    """p = ((gamma-1)/gamma) A(psi) rho^gamma"""
    g = stream.gamma
    return (g - 1.0) / g * stream.A(np.asarray(psi, dtype=float)) * np.asarray(rho, dtype=float) ** g


def energy(m1, m2, rho, p, gamma):
    """E = |m|^2/(2 rho^2) + p/((gamma-1) rho)"""
    return (m1**2 + m2**2) / (2.0 * rho**2) + p / ((gamma - 1.0) * rho)


def sound_speed(rho, p, gamma):
    return np.sqrt(gamma * p / rho)


def mach(m1, m2, rho, p, gamma):
    return np.hypot(m1, m2) / (rho * sound_speed(rho, p, gamma))


def background_ellipticity(stream) -> float:
    """
    e = a11 at the background state (psi_x1, psi_x2) = (0, m0), rho = rho0.

    The closed form gamma p0 rho0 drops the -m0^2 term; the exact value is
    returned and the gap is logged.
    """
    far = stream.far
    g = far.gamma
    e = (g - 1.0) * stream.A0 * far.rho0 ** (g + 1.0) - far.m0**2
    closed = g * far.p0 * far.rho0
    if abs(e - closed) > 1e-12 * closed:
        log.info("ℹ️ background ellipticity e = %.6g (gamma p0 rho0 = %.6g)", e, closed)
    return float(e)
