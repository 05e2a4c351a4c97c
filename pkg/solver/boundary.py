"""
Dirichlet data for psi - l and the initial iterate.

    g(x) = -eta(x2) ((1 - eta(x1)) l(f(x1)) + eta(x1) l(x2))

eta is 1 on |s| <= D0 and 0 on |s| >= D0 + 1, joined by the quintic
smoothstep 6t^5 - 15t^4 + 10t^3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from geometry.domain import TruncatedDomain
from solver.fields import GridField


def _smoothstep(t):
    return t**3 * (10.0 + t * (-15.0 + 6.0 * t))


def cutoff_eta(s, D0: float = 2.0):
    s = np.abs(np.asarray(s, dtype=float))
    t = np.clip(D0 + 1.0 - s, 0.0, 1.0)
    return _smoothstep(t)


def cutoff_eta_derivatives(s, D0: float = 2.0):
    """(eta', eta'') for the C^2 check"""
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    t = np.clip(D0 + 1.0 - a, 0.0, 1.0)
    inside = (a > D0) & (a < D0 + 1.0)
    d1 = np.where(inside, 30.0 * t**2 * (1.0 - t) ** 2, 0.0)
    d2 = np.where(inside, 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t), 0.0)
    # dt/ds = -sign(s)
    return -np.sign(s) * d1, d2


@dataclass(frozen=True)
class DirichletData:
    D0: float
    profile: object
    stream: object

    def eta(self, s):
        return cutoff_eta(s, self.D0)

    def g(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        ex1 = self.eta(x1)
        l = self.stream.l
        return -self.eta(x2) * ((1.0 - ex1) * l(self.profile(x1)) + ex1 * l(x2))

    def psi_trace(self, x1, x2):
        """psi = l + g"""
        return self.stream.l(np.asarray(x2, dtype=float)) + self.g(x1, x2)


def boundary_data(domain: TruncatedDomain, stream) -> DirichletData:
    return DirichletData(D0=domain.profile.D0, profile=domain.profile, stream=stream)


def initial_iterate(grid, data: DirichletData, stream) -> GridField:
    """
    psi_0 = l(x2) - eta(x2 - f(x1)) l(f(x1)), boundary nodes set to l + g.

    The blend removes l(f) near the wall and fades out one unit above D0.
    """
    f = np.asarray(data.profile(grid.x1), dtype=float)
    l = stream.l
    psi = l(grid.x2) - data.eta(grid.x2 - f) * l(f)
    b = grid.boundary
    psi[b] = data.psi_trace(grid.x1[b], grid.x2[b])
    return GridField(grid, psi)
