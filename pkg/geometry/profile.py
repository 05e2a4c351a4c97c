"""
下邊界：Γ_- ∪ arc ∪ Γ_+ 的分段描述與檢查。

The lower boundary is three graphs over x1: f_minus on (-inf, -1], f_arc on
[-1, 1] and f_plus on [1, inf). build_profile checks continuity, corner
angles, heights and the sampled weighted norms of the two tails.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from common.errors import (
    AngleViolation,
    DiscontinuousBoundary,
    HeightViolation,
    NormViolation,
    NormWarning,
)
from common.functions import AnalyticFunction, family_from_spec
from common.log import get_logger

log = get_logger("geometry")

# -------------------------------
# 取樣設定
# -------------------------------
SAMPLES_PER_PIECE = 1000
TAIL_FAR = 1.0e4
PAIR_BLOCK = 256  # 每批列數，避免 n x n 暫存
HOLDER_REACH = 0.5
CONTINUITY_TOL = 1e-12
FLAT_ANGLE_TOL = 1e-12


def tail_samples(start: float, n: int = SAMPLES_PER_PIECE, far: float = TAIL_FAR) -> np.ndarray:
    """Deterministic samples on a half line beginning at `start` (sign gives the side)."""
    a = abs(start)
    near = np.linspace(a, a + 4.0, n // 2)
    distant = np.geomspace(max(a, 1e-3), max(a, 1.0) * far, n - n // 2)
    t = np.unique(np.concatenate([near, distant]))
    return np.sign(start) * t if start < 0 else t


def pair_quotient_max(x, values, alpha: float, power: float, offset: float = 1.0) -> float:
    """
    Hölder term: max of (max(|x|,|x'|) + offset)^power |v - v'| / |x - x'|^alpha.

    Only local pairs count: |x - x'| <= HOLDER_REACH * (max(|x|,|x'|) + offset).
    Every local pair of the sample set is visited, PAIR_BLOCK rows at a time.
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    n = x.size
    best = 0.0
    for lo in range(0, n - 1, PAIR_BLOCK):
        rows = np.arange(lo, min(lo + PAIR_BLOCK, n - 1))
        cols = np.arange(lo + 1, n)
        i, j = np.meshgrid(rows, cols, indexing="ij")
        upper = j > i
        i, j = i[upper], j[upper]
        gap = np.abs(x[i] - x[j])
        reach = np.maximum(ax[i], ax[j]) + offset
        keep = (gap > 0) & (gap <= HOLDER_REACH * reach)
        if np.any(keep):
            i, j, gap, reach = i[keep], j[keep], gap[keep], reach[keep]
            q = reach**power * np.abs(values[i] - values[j]) / gap**alpha
            best = max(best, float(np.max(q)))
    return best


def fnorm_terms(f: AnalyticFunction, k: int, alpha: float, beta: float, samples, offset: float = 1.0):
    """
    Sampled pieces of the one-dimensional weighted norm.

    Returns ([f]_{0,0}, ..., [f]_{k,0}) and the Hölder term [f]_{k,alpha}.
    `offset` is 1 for the plain norm and m0 for the primed norm.
    """
    x = np.asarray(samples, dtype=float)
    ax = np.abs(x)
    sup_terms = []
    for i in range(k + 1):
        d = np.asarray(f.derivative(i, x), dtype=float)
        w = (ax + offset) ** (i + beta)
        sup_terms.append(float(np.max(w * np.abs(d))) if x.size else 0.0)

    dk = np.asarray(f.derivative(k, x), dtype=float)
    holder = pair_quotient_max(x, dk, alpha, k + alpha + beta, offset=offset)
    return sup_terms, holder


def discrete_weighted_fnorm(
    f: AnalyticFunction,
    k: int,
    alpha: float,
    beta: float,
    samples=None,
    start: float = 1.0,
    offset: float = 1.0,
) -> float:
    """
    Lower bound of ||f||_{k,alpha;(beta)} from a deterministic sample set.

    Without explicit samples the half line beginning at `start` is sampled.
    """
    if samples is None:
        samples = tail_samples(start)
    sup_terms, holder = fnorm_terms(f, k, alpha, beta, samples, offset=offset)
    return float(sum(sup_terms) + holder)


@dataclass(frozen=True)
class BoundaryProfile:
    f_minus: AnalyticFunction
    f_arc: AnalyticFunction
    f_plus: AnalyticFunction
    delta: float
    D0: float
    theta_minus: float
    theta_plus: float
    norm_minus: float
    norm_plus: float

    kinks = (-1.0, 1.0)

    @property
    def corner_minus(self) -> tuple[float, float]:
        return (-1.0, float(self.f_minus(-1.0)))

    @property
    def corner_plus(self) -> tuple[float, float]:
        return (1.0, float(self.f_plus(1.0)))

    def _piecewise(self, x, order: int):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        out = np.empty_like(flat)
        left = flat < -1.0
        right = flat > 1.0
        mid = ~(left | right)
        for mask, piece in ((left, self.f_minus), (mid, self.f_arc), (right, self.f_plus)):
            if np.any(mask):
                out[mask] = piece.derivative(order, flat[mask])
        return out.reshape(x.shape)

    def __call__(self, x):
        return self._piecewise(x, 0)

    def d1(self, x):
        return self._piecewise(x, 1)

    def d2(self, x):
        return self._piecewise(x, 2)


def corner_angles(f_minus, f_arc, f_plus) -> tuple[float, float]:
    """兩個角點的夾角（由單側切線計算）"""

    def angle(u, v):
        c = (u[0] * v[0] + u[1] * v[1]) / (math.hypot(*u) * math.hypot(*v))
        return math.acos(max(-1.0, min(1.0, c)))

    t_minus = (-1.0, -float(f_minus.d1(-1.0)))
    t_arc_left = (1.0, float(f_arc.d1(-1.0)))
    t_arc_right = (-1.0, -float(f_arc.d1(1.0)))
    t_plus = (1.0, float(f_plus.d1(1.0)))
    return angle(t_minus, t_arc_left), angle(t_arc_right, t_plus)


def build_profile(
    spec,
    delta: float,
    D0: float,
    alpha: float = 0.8,
    beta: float = 0.4,
    allow_flat_corners: bool = False,
    on_norm_violation: str = "raise",
) -> BoundaryProfile:
    """
    Build and validate the lower boundary.

    `spec` maps "minus", "arc", "plus" to family descriptors (dicts) or to
    AnalyticFunction objects.
    """
    pieces = {}
    for key in ("minus", "arc", "plus"):
        item = spec[key]
        pieces[key] = family_from_spec(item) if isinstance(item, dict) else item
    f_minus, f_arc, f_plus = pieces["minus"], pieces["arc"], pieces["plus"]

    # 1️⃣ 角點連續
    for name, a, b in (
        ("A-", float(f_minus(-1.0)), float(f_arc(-1.0))),
        ("A+", float(f_arc(1.0)), float(f_plus(1.0))),
    ):
        if abs(a - b) > CONTINUITY_TOL * (1.0 + abs(a)):
            raise DiscontinuousBoundary(name, a, b)

    # 2️⃣ 高度與球半徑
    xs_arc = np.linspace(-1.0, 1.0, SAMPLES_PER_PIECE)
    checks = (
        ("f_minus", f_minus, tail_samples(-1.0)),
        ("f_arc", f_arc, xs_arc),
        ("f_plus", f_plus, tail_samples(1.0)),
    )
    for name, f, xs in checks:
        ys = np.asarray(f(xs), dtype=float)
        low = int(np.argmin(ys))
        if ys[low] <= -0.5:
            raise HeightViolation(name, xs[low], ys[low], "f > -1/2")
        high = int(np.argmax(ys))
        if ys[high] > D0:
            raise HeightViolation(name, xs[high], ys[high], f"f <= D0 = {D0:g}")
    radius = np.hypot(xs_arc, np.asarray(f_arc(xs_arc), dtype=float))
    if np.max(radius) > D0:
        i = int(np.argmax(radius))
        raise HeightViolation("f_arc", xs_arc[i], float(f_arc(xs_arc[i])), f"arc inside ball of radius {D0:g}")

    # 3️⃣ 角度
    theta_minus, theta_plus = corner_angles(f_minus, f_arc, f_plus)
    for name, theta in (("A-", theta_minus), ("A+", theta_plus)):
        if allow_flat_corners and abs(theta - math.pi) <= FLAT_ANGLE_TOL:
            continue
        if not (delta < theta < math.pi - delta):
            raise AngleViolation(name, theta, delta)

    # 4️⃣ 尾端加權範數 ||f_±||_{2,alpha;(alpha+beta)} <= 1
    norm_minus = discrete_weighted_fnorm(f_minus, 2, alpha, alpha + beta, start=-1.0)
    norm_plus = discrete_weighted_fnorm(f_plus, 2, alpha, alpha + beta, start=1.0)
    for name, value in (("f_minus", norm_minus), ("f_plus", norm_plus)):
        if value > 1.0:
            if on_norm_violation == "raise":
                raise NormViolation(name, value)
            warnings.warn(f"{name}: sampled weighted norm {value:.4g} > 1", NormWarning, stacklevel=2)
            log.warning("⚠️ %s weighted norm %.4g exceeds 1", name, value)

    log.debug("profile ok: angles (%.6f, %.6f), tail norms (%.3g, %.3g)", theta_minus, theta_plus, norm_minus, norm_plus)
    return BoundaryProfile(
        f_minus=f_minus,
        f_arc=f_arc,
        f_plus=f_plus,
        delta=float(delta),
        D0=float(D0),
        theta_minus=theta_minus,
        theta_plus=theta_plus,
        norm_minus=norm_minus,
        norm_plus=norm_plus,
    )
