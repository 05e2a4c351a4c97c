"""
Analytic one-dimensional families used for boundary pieces and far fields.

Every family is a small frozen dataclass that evaluates itself and its first
two derivatives on scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial


class AnalyticFunction:
    def __call__(self, x):
        raise NotImplementedError

    def d1(self, x):
        raise NotImplementedError

    def d2(self, x):
        raise NotImplementedError

    def derivative(self, k: int, x):
        if k == 0:
            return self(x)
        if k == 1:
            return self.d1(x)
        if k == 2:
            return self.d2(x)
        raise ValueError(f"derivative order {k} not available")


@dataclass(frozen=True)
class Constant(AnalyticFunction):
    value: float

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.value)

    def d1(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def d2(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class Poly(AnalyticFunction):
    """係數由低次到高次"""

    coefficients: tuple
    _p: Polynomial = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_p", Polynomial(np.asarray(self.coefficients, dtype=float)))

    def __call__(self, x):
        return self._p(np.asarray(x, dtype=float))

    def d1(self, x):
        return self._p.deriv(1)(np.asarray(x, dtype=float))

    def d2(self, x):
        return self._p.deriv(2)(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class PowerDecay(AnalyticFunction):
    """a * (|x| + shift)^(-power)"""

    amplitude: float
    power: float
    shift: float = 0.0

    def _base(self, x):
        x = np.asarray(x, dtype=float)
        return np.abs(x) + self.shift, np.sign(x)

    def __call__(self, x):
        t, _ = self._base(x)
        return self.amplitude * t ** (-self.power)

    def d1(self, x):
        t, sgn = self._base(x)
        return -self.power * self.amplitude * t ** (-self.power - 1.0) * sgn

    def d2(self, x):
        t, _ = self._base(x)
        k = self.power
        return k * (k + 1.0) * self.amplitude * t ** (-k - 2.0)


@dataclass(frozen=True)
class ExpDecay(AnalyticFunction):
    """a * exp(-rate * x)"""

    amplitude: float
    rate: float = 1.0

    def __call__(self, x):
        return self.amplitude * np.exp(-self.rate * np.asarray(x, dtype=float))

    def d1(self, x):
        return -self.rate * self(x)

    def d2(self, x):
        return self.rate**2 * self(x)


@dataclass(frozen=True)
class Offset(AnalyticFunction):
    """base + scale * shape(x)"""

    base: float
    scale: float
    shape: AnalyticFunction

    def __call__(self, x):
        return self.base + self.scale * self.shape(x)

    def d1(self, x):
        return self.scale * self.shape.d1(x)

    def d2(self, x):
        return self.scale * self.shape.d2(x)


@dataclass(frozen=True)
class AlgebraicDecay(AnalyticFunction):
    """a * (x + shift)^(-power)，x > -shift"""

    amplitude: float
    power: float
    shift: float = 1.0

    def __call__(self, x):
        return self.amplitude * (np.asarray(x, dtype=float) + self.shift) ** (-self.power)

    def d1(self, x):
        t = np.asarray(x, dtype=float) + self.shift
        return -self.power * self.amplitude * t ** (-self.power - 1.0)

    def d2(self, x):
        t = np.asarray(x, dtype=float) + self.shift
        k = self.power
        return k * (k + 1.0) * self.amplitude * t ** (-k - 2.0)


@dataclass(frozen=True)
class Sampled(AnalyticFunction):
    """由三個 callable 組成（值、一階、二階導數）"""

    value: object
    first: object
    second: object

    def __call__(self, x):
        return self.value(x)

    def d1(self, x):
        return self.first(x)

    def d2(self, x):
        return self.second(x)


def family_from_spec(spec: dict) -> AnalyticFunction:
    """依設定檔的 family 名稱建立函數"""
    kind = spec.get("family")
    if kind in ("flat", "constant"):
        return Constant(float(spec.get("value", 0.0)))
    if kind in ("poly", "poly-bump"):
        coeffs: Sequence[float] = spec["coefficients"]
        return Poly(tuple(float(c) for c in coeffs))
    if kind in ("rational-decay", "power-decay"):
        return PowerDecay(
            float(spec.get("amplitude", 1.0)),
            float(spec.get("power", 2.0)),
            float(spec.get("shift", 0.0)),
        )
    if kind == "exp-decay":
        return ExpDecay(float(spec.get("amplitude", 1.0)), float(spec.get("rate", 1.0)))
    if kind == "algebraic-decay":
        return AlgebraicDecay(
            float(spec.get("amplitude", 1.0)),
            float(spec.get("power", 1.0)),
            float(spec.get("shift", 1.0)),
        )
    raise ValueError(f"unknown function family: {kind!r}")
