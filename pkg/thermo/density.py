"""
Subsonic density from Bernoulli's law.

    chi = h(rho, psi) = B(psi) rho^2 - A(psi) rho^(gamma+1),   chi = |grad psi|^2 / 2

h increases up to rho_sonic and decreases afterwards; the subsonic root is the
one on [rho_sonic, rho_max] where h runs from chi_max down to 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from common.errors import NegativeChi, SonicProximity, SupersonicChi
from common.log import get_logger

log = get_logger("thermo")

# ---- 設定區 ----
REL_TOL = 1e-12
SONIC_BAND = 1e-12
MAX_STEPS = 200


def h(rho, A, B, gamma):
    return B * rho**2 - A * rho ** (gamma + 1.0)


def sonic_density(A, B, gamma):
    return (2.0 * B / ((gamma + 1.0) * A)) ** (1.0 / (gamma - 1.0))


def max_density(A, B, gamma):
    return (B / A) ** (1.0 / (gamma - 1.0))


def chi_max_of(A, B, gamma):
    """h(rho_sonic) = B rho_sonic^2 (gamma-1)/(gamma+1)"""
    rs = sonic_density(A, B, gamma)
    return B * rs**2 * (gamma - 1.0) / (gamma + 1.0)


def chi_max(psi, stream):
    A, _, _, B, _, _ = stream.streamline_functions(psi)
    return chi_max_of(A, B, stream.gamma)


def chi_from_gradient(p1, p2):
    return 0.5 * (np.asarray(p1, dtype=float) ** 2 + np.asarray(p2, dtype=float) ** 2)


@dataclass(frozen=True, eq=False)
class DensityState:
    rho: np.ndarray
    rho_chi: np.ndarray
    rho_psi: np.ndarray
    sonic_margin: np.ndarray
    # (A, A', A'', B, B', B'') at psi, reused by coefficients()
    streamline: tuple = field(default=None, repr=False)

    @property
    def min_margin(self) -> float:
        return float(np.min(self.sonic_margin))


def _newton(chi, A, B, gamma):
    """Bracketed Newton on h(rho) - chi, bisection when a step leaves the bracket."""
    lo = sonic_density(A, B, gamma)
    hi = max_density(A, B, gamma)
    cmax = chi_max_of(A, B, gamma)
    rho = np.clip(hi * (1.0 - chi / (2.0 * cmax)), lo, hi)
    for _ in range(MAX_STEPS):
        phi = h(rho, A, B, gamma) - chi
        dphi = 2.0 * B * rho - (gamma + 1.0) * A * rho**gamma
        # h 在分支上遞減：phi > 0 表示根在右邊
        lo = np.where(phi > 0.0, rho, lo)
        hi = np.where(phi > 0.0, hi, rho)
        with np.errstate(divide="ignore", invalid="ignore"):
            trial = rho - phi / dphi
        bad = ~np.isfinite(trial) | (trial <= lo) | (trial >= hi) | (dphi >= 0.0)
        new = np.where(bad, 0.5 * (lo + hi), trial)
        done = (np.abs(new - rho) <= REL_TOL * 1e-2 * rho) | (phi == 0.0) | (hi - lo <= REL_TOL * 1e-3 * rho)
        rho = np.where(phi == 0.0, rho, new)
        if np.all(done):
            break
    return rho


def solve_density(chi, psi, stream) -> DensityState:
    """
    Vectorized subsonic density at states (chi, psi).

    chi slightly above chi_max (relative SONIC_BAND) is clipped with a
    SonicProximity warning; further above raises SupersonicChi.
    """
    chi = np.asarray(chi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    chi, psi = np.broadcast_arrays(chi, psi)
    if np.any(chi < 0.0):
        bad = np.flatnonzero(chi.ravel() < 0.0)
        raise NegativeChi(f"chi < 0 at {bad.size} state(s), first {bad[:5].tolist()}")

    lines = stream.streamline_functions(psi)
    A, dA, _, B, dB, _ = lines
    if np.any(A <= 0.0) or np.any(B <= 0.0):
        raise NegativeChi("streamline functions A, B must stay positive")
    g = stream.gamma
    cmax = chi_max_of(A, B, g)

    over = chi > cmax * (1.0 + SONIC_BAND)
    if np.any(over):
        raise SupersonicChi(np.flatnonzero(over.ravel()).tolist(), float(np.min(cmax[over])))
    near = chi > cmax
    if np.any(near):
        warnings.warn(f"{int(np.count_nonzero(near))} state(s) within the sonic band", SonicProximity, stacklevel=2)
        log.warning("⚠️ %d state(s) graze the sonic limit", int(np.count_nonzero(near)))
        chi = np.where(near, cmax, chi)

    rho = _newton(chi, A, B, g)
    with np.errstate(divide="ignore"):
        rho_chi = -1.0 / ((g + 1.0) * A * rho**g - 2.0 * B * rho)
        rho_psi = (dB * rho - dA * rho**g) / ((g + 1.0) * A * rho ** (g - 1.0) - 2.0 * B)
    margin = (g - 1.0) * A * rho ** (g + 1.0) - 2.0 * chi
    return DensityState(rho=rho, rho_chi=rho_chi, rho_psi=rho_psi, sonic_margin=margin, streamline=lines)
