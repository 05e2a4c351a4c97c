"""
Sampled two-dimensional weighted Hölder norm with corner index sigma toward a
point set P and decay index beta at infinity.

    delta_x = min(dist(x, P), 1),   Delta_x = max(|x|, 1)
    [u]_{k,0}     = sup delta^{max(k+sigma,0)} Delta^{beta+k} |D^k u|
    [u]_{k,alpha} = sup over pairs of the same with the pair weights and the
                    difference quotient |D^k u(x) - D^k u(x')| / |x - x'|^alpha

Values are lower bounds of the continuum norm: sups over grid nodes and over
a pair sample (stencil neighbours plus seeded random long-range pairs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from solver.fields import GridField


@dataclass(frozen=True)
class WeightedNormSpec:
    k: int
    alpha: float
    beta: float
    sigma: float = 0.0
    P: tuple = ()
    n_random: int = 4096
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.beta < self.alpha < 1.0:
            raise ValueError(f"need 0 < beta < alpha < 1 (alpha={self.alpha}, beta={self.beta})")
        if self.sigma != 0.0 and len(self.P) == 0:
            raise ValueError("corner index sigma != 0 needs a nonempty point set P")
        if self.k not in (0, 1, 2):
            raise ValueError(f"k = {self.k} not supported (0, 1, 2)")


@dataclass(frozen=True)
class NormTerms:
    sup_terms: tuple
    holder: float

    @property
    def total(self) -> float:
        return float(sum(self.sup_terms) + self.holder)


def _derivatives(u: GridField, order: int) -> list:
    if order == 0:
        return [u.values]
    if order == 1:
        return list(u.gradient())
    return list(u.hessian())


def _delta(points, P):
    if len(P) == 0:
        return np.ones(len(points))
    P = np.asarray(P, dtype=float)
    d = np.min(np.linalg.norm(points[:, None, :] - P[None, :, :], axis=2), axis=1)
    return np.minimum(d, 1.0)


def neighbour_pairs(grid) -> tuple[np.ndarray, np.ndarray]:
    """Flat index pairs (E, N, NE, NW neighbours) covering every stencil link once."""
    nx, nz = grid.shape
    idx = np.arange(grid.size).reshape(nx, nz)
    firsts, seconds = [], []
    for a, b in (
        (idx[:-1, :], idx[1:, :]),
        (idx[:, :-1], idx[:, 1:]),
        (idx[:-1, :-1], idx[1:, 1:]),
        (idx[1:, :-1], idx[:-1, 1:]),
    ):
        firsts.append(a.ravel())
        seconds.append(b.ravel())
    return np.concatenate(firsts), np.concatenate(seconds)


def sample_pairs(grid, spec: WeightedNormSpec, extra=None) -> tuple[np.ndarray, np.ndarray]:
    first, second = neighbour_pairs(grid)
    rng = np.random.default_rng(spec.seed)
    r1 = rng.integers(0, grid.size, spec.n_random)
    r2 = rng.integers(0, grid.size, spec.n_random)
    first, second = np.concatenate([first, r1]), np.concatenate([second, r2])
    if extra is not None:
        first = np.concatenate([first, np.asarray(extra[0], dtype=int)])
        second = np.concatenate([second, np.asarray(extra[1], dtype=int)])
    keep = first != second
    return first[keep], second[keep]


def weighted_norm_terms(u: GridField, spec: WeightedNormSpec, pairs=None, mask=None) -> NormTerms:
    """
    `pairs` overrides the pair sample; `mask` restricts the node set (for
    example to the outer half of the domain).
    """
    grid = u.grid
    pts = np.column_stack([grid.x1.ravel(), grid.x2.ravel()])
    use = np.ones(grid.size, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).ravel()
    delta = _delta(pts, spec.P)
    Delta = np.maximum(np.hypot(pts[:, 0], pts[:, 1]), 1.0)

    sup_terms = []
    for i in range(spec.k + 1):
        w = delta ** max(i + spec.sigma, 0.0) * Delta ** (spec.beta + i)
        best = 0.0
        for d in _derivatives(u, i):
            val = w * np.abs(np.ravel(d))
            val = val[use & np.isfinite(val)]
            if val.size:
                best = max(best, float(np.max(val)))
        sup_terms.append(best)

    first, second = sample_pairs(grid, spec) if pairs is None else (np.asarray(pairs[0]), np.asarray(pairs[1]))
    ok = use[first] & use[second]
    first, second = first[ok], second[ok]
    holder = 0.0
    if first.size:
        gap = np.linalg.norm(pts[first] - pts[second], axis=1)
        k, a = spec.k, spec.alpha
        w = np.minimum(delta[first], delta[second]) ** max(k + a + spec.sigma, 0.0)
        w = w * np.maximum(Delta[first], Delta[second]) ** (spec.beta + k + a)
        for d in _derivatives(u, k):
            d = np.ravel(d)
            with np.errstate(divide="ignore", invalid="ignore"):
                q = w * np.abs(d[first] - d[second]) / gap**a
            q = q[np.isfinite(q)]
            if q.size:
                holder = max(holder, float(np.max(q)))
    return NormTerms(tuple(sup_terms), holder)


def discrete_weighted_norm(u: GridField, spec: WeightedNormSpec, pairs=None, mask=None) -> float:
    return weighted_norm_terms(u, spec, pairs=pairs, mask=mask).total
