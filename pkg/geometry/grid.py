"""
Boundary-fitted grid.

Mapped coordinates (xi, zeta) in [x_lo, x_hi] x [0, 1] go to the physical
plane by

    x1 = xi,   x2 = f(xi) + (H - f(xi)) * s(zeta)

so grid lines xi = const are vertical and the row zeta = 0 lies on the lower
boundary graph. Arrays are shaped (nx, nz): index i runs along x1, j along
zeta. Flattened node numbers are k = i * nz + j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from common.errors import JacobianNonPositive
from geometry.domain import TruncatedDomain

TAG_INTERIOR = 0
TAG_BOTTOM = 1
TAG_LEFT = 2
TAG_RIGHT = 3
TAG_TOP = 4
TAG_NAMES = {
    TAG_INTERIOR: "interior",
    TAG_BOTTOM: "bottom",
    TAG_LEFT: "left",
    TAG_RIGHT: "right",
    TAG_TOP: "top",
}

KINK_TOL = 1e-9


@dataclass(frozen=True)
class Grading:
    """s(z) = ((1+z)^g - 1) / (2^g - 1)，g = 1 時為均勻"""

    gamma: float = 1.5

    @property
    def _c(self) -> float:
        return 2.0**self.gamma - 1.0

    def s(self, z):
        z = np.asarray(z, dtype=float)
        if self.gamma == 1.0:
            return z.copy()
        return ((1.0 + z) ** self.gamma - 1.0) / self._c

    def ds(self, z):
        z = np.asarray(z, dtype=float)
        if self.gamma == 1.0:
            return np.ones_like(z)
        return self.gamma * (1.0 + z) ** (self.gamma - 1.0) / self._c

    def d2s(self, z):
        z = np.asarray(z, dtype=float)
        if self.gamma == 1.0:
            return np.zeros_like(z)
        g = self.gamma
        return g * (g - 1.0) * (1.0 + z) ** (g - 2.0) / self._c

    def inverse(self, s):
        s = np.asarray(s, dtype=float)
        if self.gamma == 1.0:
            return s.copy()
        return (1.0 + s * self._c) ** (1.0 / self.gamma) - 1.0


class Metrics(NamedTuple):
    """Derivatives of x2(xi, zeta) and of the inverse coordinate zeta(x1, x2)."""

    X_xi: np.ndarray
    X_zeta: np.ndarray
    X_xixi: np.ndarray
    X_xizeta: np.ndarray
    X_zetazeta: np.ndarray
    zeta_x1: np.ndarray
    zeta_x2: np.ndarray
    zeta_x1x1: np.ndarray
    zeta_x1x2: np.ndarray
    zeta_x2x2: np.ndarray

    @property
    def jacobian(self) -> np.ndarray:
        return self.X_zeta


def _metrics(f, f1, f2, top, s, s1, s2) -> Metrics:
    X_xi = f1 * (1.0 - s)
    X_zeta = (top - f) * s1
    X_xixi = f2 * (1.0 - s)
    X_xizeta = -f1 * s1
    X_zetazeta = (top - f) * s2
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / X_zeta
        zeta_x1 = -X_xi * inv
        zeta_x2 = inv
        zeta_x2x2 = -X_zetazeta * inv**3
        zeta_x1x2 = (-X_xizeta * X_zeta + X_xi * X_zetazeta) * inv**3
        zeta_x1x1 = -X_xixi * inv + 2.0 * X_xi * X_xizeta * inv**2 - X_xi**2 * X_zetazeta * inv**3
    return Metrics(X_xi, X_zeta, X_xixi, X_xizeta, X_zetazeta, zeta_x1, zeta_x2, zeta_x1x1, zeta_x1x2, zeta_x2x2)


@dataclass(frozen=True, eq=False)
class CurvilinearGrid:
    bottom: object
    x_lo: float
    x_hi: float
    top: float
    nx: int
    nz: int
    grading: Grading
    kinks: tuple
    x1: np.ndarray
    x2: np.ndarray
    metrics: Metrics
    tags: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.nz)

    @property
    def size(self) -> int:
        return self.nx * self.nz

    @property
    def hxi(self) -> float:
        return (self.x_hi - self.x_lo) / (self.nx - 1)

    @property
    def hzeta(self) -> float:
        return 1.0 / (self.nz - 1)

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    @property
    def zeta(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nz)

    @property
    def interior(self) -> np.ndarray:
        return self.tags == TAG_INTERIOR

    @property
    def boundary(self) -> np.ndarray:
        return self.tags != TAG_INTERIOR

    def metrics_at(self, xi, zeta) -> Metrics:
        """Analytic metrics at arbitrary mapped points (no kink correction)."""
        xi = np.asarray(xi, dtype=float)
        zeta = np.asarray(zeta, dtype=float)
        f = np.asarray(self.bottom(xi), dtype=float)
        f1 = np.asarray(self.bottom.d1(xi), dtype=float)
        f2 = np.asarray(self.bottom.d2(xi), dtype=float)
        g = self.grading
        return _metrics(f, f1, f2, self.top, g.s(zeta), g.ds(zeta), g.d2s(zeta))

    def to_mapped(self, x1, x2):
        """(x1, x2) -> (xi, zeta)"""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        f = np.asarray(self.bottom(x1), dtype=float)
        s = (x2 - f) / (self.top - f)
        return x1.copy(), self.grading.inverse(np.clip(s, 0.0, 1.0))

    def contains(self, x1, x2) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        f = np.asarray(self.bottom(x1), dtype=float)
        return (x1 >= self.x_lo) & (x1 <= self.x_hi) & (x2 >= f) & (x2 <= self.top)

    def kink_columns(self) -> list:
        """
        [(i, f1_left, f1_right)] for node columns sitting on a kink of the
        bottom graph, with the one-sided slopes of the graph there.
        """
        out = []
        xi = self.xi
        for kink in self.kinks:
            hit = np.flatnonzero(np.abs(xi - kink) < KINK_TOL * max(1.0, abs(kink)))
            for i in hit:
                if 2 <= i <= self.nx - 3:
                    eps = KINK_TOL * max(1.0, abs(kink)) * 1e-3
                    left = float(self.bottom.d1(kink - eps))
                    right = float(self.bottom.d1(kink + eps))
                    out.append((int(i), left, right))
        return out

    def flat_index(self, i, j):
        return np.asarray(i) * self.nz + np.asarray(j)

    def node_points(self, mask) -> np.ndarray:
        """mask 為 True 的節點座標 (n, 2)"""
        return np.column_stack([self.x1[mask], self.x2[mask]])


def grid_over(
    bottom,
    x_lo: float,
    x_hi: float,
    top: float,
    nx: int,
    nz: int,
    grading: float = 1.0,
    kinks: tuple = (),
) -> CurvilinearGrid:
    """
    Sheared grid between the graph `bottom` and the line x2 = top.

    `bottom` must be callable with d1 and d2 methods. At node columns that sit
    on a kink of `bottom` the xi-metrics come from central differences of the
    graph so that they agree with the node positions.
    """
    if nx < 9 or nz < 9 or nx % 2 == 0 or nz % 2 == 0:
        raise ValueError(f"nx, nz must be odd and >= 9 (got {nx}, {nz})")
    if grading < 1.0:
        raise ValueError(f"grading exponent must be >= 1 (got {grading})")

    g = Grading(float(grading))
    xi = np.linspace(x_lo, x_hi, nx)
    zeta = np.linspace(0.0, 1.0, nz)
    hxi = (x_hi - x_lo) / (nx - 1)

    f = np.asarray(bottom(xi), dtype=float)
    f1 = np.asarray(bottom.d1(xi), dtype=float).copy()
    f2 = np.asarray(bottom.d2(xi), dtype=float).copy()
    for kink in kinks:
        hit = np.abs(xi - kink) < KINK_TOL * max(1.0, abs(kink))
        if np.any(hit):
            fp = np.asarray(bottom(xi[hit] + hxi), dtype=float)
            fm = np.asarray(bottom(xi[hit] - hxi), dtype=float)
            f1[hit] = (fp - fm) / (2.0 * hxi)
            f2[hit] = (fp - 2.0 * f[hit] + fm) / hxi**2

    F = f[:, None]
    S = g.s(zeta)[None, :]
    x1 = np.repeat(xi[:, None], nz, axis=1)
    x2 = F + (top - F) * S
    metrics = _metrics(
        F,
        f1[:, None],
        f2[:, None],
        top,
        S,
        g.ds(zeta)[None, :],
        g.d2s(zeta)[None, :],
    )
    metrics = Metrics(*(np.broadcast_to(m, (nx, nz)).copy() for m in metrics))

    jac = metrics.jacobian
    bad = ~(jac > 0.0)
    if np.any(bad):
        raise JacobianNonPositive(int(np.count_nonzero(bad)), float(np.nanmin(jac)))

    tags = np.full((nx, nz), TAG_INTERIOR, dtype=np.int8)
    tags[0, :] = TAG_LEFT
    tags[-1, :] = TAG_RIGHT
    tags[:, 0] = TAG_BOTTOM
    tags[:, -1] = TAG_TOP

    return CurvilinearGrid(
        bottom=bottom,
        x_lo=float(x_lo),
        x_hi=float(x_hi),
        top=float(top),
        nx=int(nx),
        nz=int(nz),
        grading=g,
        kinks=tuple(kinks),
        x1=x1,
        x2=x2,
        metrics=metrics,
        tags=tags,
    )


def generate_grid(domain: TruncatedDomain, nx: int, nz: int, grading: float = 1.5) -> CurvilinearGrid:
    return grid_over(
        domain.profile,
        -domain.R,
        domain.R,
        domain.H,
        nx,
        nz,
        grading=grading,
        kinks=domain.profile.kinks,
    )
