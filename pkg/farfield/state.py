"""遠場狀態 U_inf = (m_inf, 0, p0, rho_inf) 與背景 U0"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from common.errors import InvalidFarField, NonMonotoneL
from common.functions import (
    AlgebraicDecay,
    AnalyticFunction,
    Constant,
    ExpDecay,
    Offset,
)
from geometry.profile import discrete_weighted_fnorm, tail_samples

# m_inf, rho_inf 的取樣範圍（下邊界不低於 -1/2）
SAMPLE_LOW = -0.5
SAMPLE_HIGH = 1.0e3


@dataclass(frozen=True)
class FarFieldState:
    gamma: float
    p0: float
    rho0: float
    m_star: float
    m0: float
    eps: float
    m_inf: AnalyticFunction
    rho_inf: AnalyticFunction
    alpha: float = 0.8
    beta: float = 0.4

    @property
    def is_constant(self) -> bool:
        return isinstance(self.m_inf, Constant) and isinstance(self.rho_inf, Constant)

    @property
    def sound_speed0(self) -> float:
        return math.sqrt(self.gamma * self.p0 / self.rho0)


@dataclass(frozen=True)
class FarFieldNormCheck:
    value: float
    threshold: float
    ok: bool


def perturbation(kind_spec: dict | None, base: float, eps: float) -> AnalyticFunction:
    """
    Far-field family around `base`.

    constant        -> value (default base)
    exp-decay       -> base * (1 + amplitude * eps * exp(-rate * x2))
    algebraic-decay -> base * (1 + amplitude * eps * (1 + x2)^(-power))
    """
    spec = kind_spec or {"family": "constant"}
    kind = spec.get("family", "constant")
    if kind == "constant":
        return Constant(float(spec.get("value", base)))
    if kind == "exp-decay":
        shape = ExpDecay(float(spec.get("amplitude", 1.0)), float(spec.get("rate", 1.0)))
        return Offset(base, base * eps, shape)
    if kind == "algebraic-decay":
        shape = AlgebraicDecay(float(spec.get("amplitude", 1.0)), float(spec.get("power", 1.0)), 1.0)
        return Offset(base, base * eps, shape)
    raise InvalidFarField(f"unknown far-field family: {kind!r}")


def build_farfield(
    gamma: float,
    p0: float,
    rho0: float,
    m_star: float,
    m0: float,
    eps: float,
    m_spec: dict | None = None,
    rho_spec: dict | None = None,
    alpha: float = 0.8,
    beta: float = 0.4,
) -> FarFieldState:
    problems = []
    if not gamma > 1.0:
        problems.append(f"gamma = {gamma} must exceed 1")
    if not (p0 > 0.0 and rho0 > 0.0):
        problems.append("p0 and rho0 must be positive")
    if not 0.0 < m0 <= m_star:
        problems.append(f"need 0 < m0 <= m_star (m0 = {m0}, m_star = {m_star})")
    if p0 > 0.0 and rho0 > 0.0 and not m_star / rho0 < math.sqrt(p0 / rho0):
        problems.append(f"m_star/rho0 = {m_star / rho0:.6g} must be below sqrt(p0/rho0) = {math.sqrt(p0 / rho0):.6g}")
    if not 0.0 < eps < 0.5:
        problems.append(f"eps = {eps} must lie in (0, 1/2)")
    if not 0.0 < beta < alpha < 1.0:
        problems.append(f"need 0 < beta < alpha < 1 (alpha = {alpha}, beta = {beta})")
    if problems:
        raise InvalidFarField("; ".join(problems))

    m_inf = perturbation(m_spec, m0, eps)
    rho_inf = perturbation(rho_spec, rho0, eps)

    ys = np.concatenate([np.linspace(SAMPLE_LOW, 8.0, 2001), np.geomspace(8.0, SAMPLE_HIGH, 500)])
    if np.any(np.asarray(m_inf(ys)) <= 0.0):
        raise NonMonotoneL("m_inf must stay positive: l would not be strictly increasing")
    if np.any(np.asarray(rho_inf(ys)) <= 0.0):
        raise InvalidFarField("rho_inf must stay positive")

    return FarFieldState(
        gamma=float(gamma),
        p0=float(p0),
        rho0=float(rho0),
        m_star=float(m_star),
        m0=float(m0),
        eps=float(eps),
        m_inf=m_inf,
        rho_inf=rho_inf,
        alpha=float(alpha),
        beta=float(beta),
    )


def check_farfield_norm(far: FarFieldState, alpha: float | None = None) -> FarFieldNormCheck:
    """sampled ||U_inf - U0||_{2,alpha;(0);(0,inf)} against eps * m0"""
    a = far.alpha if alpha is None else alpha
    samples = tail_samples(0.0)
    value = 0.0
    for func, base in ((far.m_inf, far.m0), (far.rho_inf, far.rho0)):
        deviation = Offset(-base, 1.0, func)
        value += discrete_weighted_fnorm(deviation, 2, a, 0.0, samples=samples)
    threshold = far.eps * far.m0
    return FarFieldNormCheck(value=value, threshold=threshold, ok=value <= threshold)
