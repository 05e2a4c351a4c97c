"""
Stream limit l(x2) = ∫_0^{x2} m_inf, its inverse, and the streamline
functions A(s), B(s) with two derivatives.

l is tabulated once on knots of width KNOT_H by adaptive Gauss–Kronrod
(scipy.integrate.quad); between knots an 8-point Gauss–Legendre rule closes
the gap, which keeps evaluation vectorized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from common.errors import InvalidFarField
from common.functions import Sampled
from common.log import get_logger
from farfield.state import FarFieldState
from geometry.profile import discrete_weighted_fnorm, tail_samples

log = get_logger("farfield")

KNOT_H = 0.05
TABLE_LOW = -0.75
TABLE_HIGH = 64.0
QUAD_TOL = 1e-12
NEWTON_STEPS = 30
_GL_T, _GL_W = np.polynomial.legendre.leggauss(8)


def entropy_bar(gamma, p0, rho, strict_paper=False):
    """A-bar as a function of the far-field density"""
    c = gamma * p0 / (gamma - 1.0)
    if strict_paper:
        return c / rho
    return c / rho**gamma


def bernoulli_bar(gamma, p0, m, rho, strict_paper=False):
    """B-bar = m^2/(2 rho^2) + gamma p0/((gamma-1) rho)"""
    d = gamma * p0 if strict_paper else gamma * p0 / (gamma - 1.0)
    return m * m / (2.0 * rho * rho) + d / rho


@dataclass(frozen=True, eq=False)
class StreamLimitData:
    far: FarFieldState
    A0: float
    B0: float
    strict_paper: bool
    knots: np.ndarray = field(repr=False)
    table: np.ndarray = field(repr=False)

    @property
    def gamma(self) -> float:
        return self.far.gamma

    @property
    def is_constant(self) -> bool:
        return self.far.is_constant and not self.strict_paper

    # ----------------------------
    # l 與其反函數
    # ----------------------------
    def l(self, y):
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y).ravel()
        out = np.empty_like(flat)
        inside = flat <= self.knots[-1]
        if np.any(inside):
            out[inside] = self._l_table(flat[inside])
        for i in np.flatnonzero(~inside):
            top = self.knots[-1]
            extra, _ = integrate.quad(lambda t: float(self.far.m_inf(t)), top, flat[i], epsabs=0.0, epsrel=QUAD_TOL, limit=200)
            out[i] = self.table[-1] + extra
        return out.reshape(y.shape)

    def _l_table(self, y):
        k = np.clip(np.searchsorted(self.knots, y, side="right") - 1, 0, self.knots.size - 1)
        a = self.knots[k]
        half = 0.5 * (y - a)
        pts = a[:, None] + half[:, None] * (_GL_T[None, :] + 1.0)
        vals = np.asarray(self.far.m_inf(pts), dtype=float)
        return self.table[k] + half * (vals @ _GL_W)

    def dl(self, y):
        return np.asarray(self.far.m_inf(y), dtype=float)

    def d2l(self, y):
        return np.asarray(self.far.m_inf.d1(y), dtype=float)

    def l_inv(self, s):
        """Safeguarded Newton: each step is clipped into the table bracket."""
        s = np.asarray(s, dtype=float)
        flat = np.atleast_1d(s).ravel()
        k = np.clip(np.searchsorted(self.table, flat, side="right") - 1, 0, self.knots.size - 1)
        lo = self.knots[k]
        hi = np.where(k + 1 < self.knots.size, self.knots[np.minimum(k + 1, self.knots.size - 1)], np.inf)
        lo = np.where(flat < self.table[0], -np.inf, lo)
        m_lo = np.asarray(self.far.m_inf(self.knots[k]), dtype=float)
        y = self.knots[k] + (flat - self.table[k]) / m_lo
        for _ in range(NEWTON_STEPS):
            step = (self.l(y) - flat) / self.dl(y)
            y = np.clip(y - step, lo, hi)
            if np.all(np.abs(step) <= 1e-14 * (1.0 + np.abs(y))):
                break
        return y.reshape(s.shape)

    # ----------------------------
    # A(s), B(s) 與導數
    # ----------------------------
    def _profiles(self, y):
        f = self.far
        return (
            np.asarray(f.m_inf(y), dtype=float),
            np.asarray(f.m_inf.d1(y), dtype=float),
            np.asarray(f.m_inf.d2(y), dtype=float),
            np.asarray(f.rho_inf(y), dtype=float),
            np.asarray(f.rho_inf.d1(y), dtype=float),
            np.asarray(f.rho_inf.d2(y), dtype=float),
        )

    def A_bar(self, y):
        return entropy_bar(self.gamma, self.far.p0, np.asarray(self.far.rho_inf(y), dtype=float), self.strict_paper)

    def B_bar(self, y):
        m = np.asarray(self.far.m_inf(y), dtype=float)
        rho = np.asarray(self.far.rho_inf(y), dtype=float)
        return bernoulli_bar(self.gamma, self.far.p0, m, rho, self.strict_paper)

    def _A_bar_derivs(self, rho, r1, r2):
        g = self.gamma
        c = g * self.far.p0 / (g - 1.0)
        if self.strict_paper:
            return -c * r1 / rho**2, c * (2.0 * r1**2 / rho**3 - r2 / rho**2)
        d1 = -g * c * rho ** (-g - 1.0) * r1
        d2 = c * (g * (g + 1.0) * rho ** (-g - 2.0) * r1**2 - g * rho ** (-g - 1.0) * r2)
        return d1, d2

    def _B_bar_derivs(self, m, m1, m2, rho, r1, r2):
        g = self.gamma
        d = g * self.far.p0 if self.strict_paper else g * self.far.p0 / (g - 1.0)
        b1 = m * m1 / rho**2 - m**2 * r1 / rho**3 - d * r1 / rho**2
        b2 = (
            (m1**2 + m * m2) / rho**2
            - 2.0 * m * m1 * r1 / rho**3
            - (2.0 * m * m1 * r1 + m**2 * r2) / rho**3
            + 3.0 * m**2 * r1**2 / rho**4
            - d * (r2 / rho**2 - 2.0 * r1**2 / rho**3)
        )
        return b1, b2

    def A(self, s):
        return self.A_bar(self.l_inv(s))

    def B(self, s):
        return self.B_bar(self.l_inv(s))

    def streamline_functions(self, s):
        """(A, A', A'', B, B', B'') at stream values s, sharing one inversion."""
        y = self.l_inv(s)
        m, m1, m2, rho, r1, r2 = self._profiles(y)
        A = entropy_bar(self.gamma, self.far.p0, rho, self.strict_paper)
        B = bernoulli_bar(self.gamma, self.far.p0, m, rho, self.strict_paper)
        a1, a2 = self._A_bar_derivs(rho, r1, r2)
        b1, b2 = self._B_bar_derivs(m, m1, m2, rho, r1, r2)
        # d/ds = (1/m) d/dy
        dA = a1 / m
        dB = b1 / m
        d2A = (a2 - a1 * m1 / m) / m**2
        d2B = (b2 - b1 * m1 / m) / m**2
        return A, dA, d2A, B, dB, d2B

    def dA(self, s):
        return self.streamline_functions(s)[1]

    def dB(self, s):
        return self.streamline_functions(s)[4]

    def d2A(self, s):
        return self.streamline_functions(s)[2]

    def d2B(self, s):
        return self.streamline_functions(s)[5]


def build_stream_limit(far: FarFieldState, strict_paper: bool = False, table_high: float = TABLE_HIGH) -> StreamLimitData:
    below = np.arange(0.0, TABLE_LOW - KNOT_H / 2, -KNOT_H)[::-1]
    above = np.arange(0.0, table_high + KNOT_H / 2, KNOT_H)
    knots = np.concatenate([below[:-1], above])

    def m(t):
        return float(far.m_inf(t))

    pieces = np.empty(knots.size - 1)
    for i in range(knots.size - 1):
        val, err = integrate.quad(m, knots[i], knots[i + 1], epsabs=0.0, epsrel=QUAD_TOL)
        if err > 1e-10 * (knots[i + 1] - knots[i]) * max(1.0, abs(val)):
            raise InvalidFarField(f"quadrature of m_inf failed on [{knots[i]:.3f}, {knots[i + 1]:.3f}]")
        pieces[i] = val
    cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
    zero = int(np.flatnonzero(knots == 0.0)[0])
    table = cumulative - cumulative[zero]
    if np.any(np.diff(table) <= 0.0):
        raise InvalidFarField("l is not strictly increasing")

    A0 = float(entropy_bar(far.gamma, far.p0, far.rho0))
    B0 = float(bernoulli_bar(far.gamma, far.p0, far.m0, far.rho0))
    if strict_paper:
        log.warning(
            "⚠️ strict-paper mode: A-bar uses rho_inf^1 and B-bar drops (gamma-1); "
            "these are inconsistent with A0, B0 and the background state"
        )
    return StreamLimitData(far=far, A0=A0, B0=B0, strict_paper=strict_paper, knots=knots, table=table)


def check_l_bounds(stream: StreamLimitData, samples=None) -> bool:
    """(m0/2) x2 < l(x2) < 2 m0 x2 on sampled x2 > 0"""
    y = np.geomspace(1e-3, 1e3, 400) if samples is None else np.asarray(samples, dtype=float)
    l = stream.l(y)
    m0 = stream.far.m0
    return bool(np.all((0.5 * m0 * y < l) & (l < 2.0 * m0 * y)))


def stream_limit_norms(stream: StreamLimitData) -> dict:
    """||A - A0||' / (eps m0) 與 ||B - B0||' / (eps m0)，s 於 (0, inf)"""
    far = stream.far
    samples = stream.l(tail_samples(0.0, far=float(stream.knots[-1])))
    ratios = {}
    for name, idx, base in (("A", 0, stream.A0), ("B", 3, stream.B0)):
        func = Sampled(
            value=lambda s, i=idx, b=base: stream.streamline_functions(s)[i] - b,
            first=lambda s, i=idx: stream.streamline_functions(s)[i + 1],
            second=lambda s, i=idx: stream.streamline_functions(s)[i + 2],
        )
        norm = discrete_weighted_fnorm(func, 2, far.alpha, 0.0, samples=samples, offset=far.m0)
        ratios[name] = norm / (far.eps * far.m0)
    return ratios
