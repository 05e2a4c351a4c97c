"""
Linear elliptic problems on the boundary-fitted grid.

Nondivergence operators a_ij u_{x_i x_j} + b_i u_{x_i} + b0 u are rewritten in
(xi, zeta) and discretized by second-order central differences with a
9-point stencil; flux-form operators div(kappa grad u) use half-point fluxes.
Both end up as the same Stencil, Dirichlet nodes are eliminated and the
interior system is solved by sparse LU (or GMRES + ILU when large).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from common.errors import IllConditioned, LinearSolveDiverged
from common.log import get_logger
from geometry.grid import CurvilinearGrid
from solver.fields import GridField

log = get_logger("solver.linear")

# ---- 設定區 ----
DIRECT_LIMIT = 300_000
RESIDUAL_TOL = 1e-10
CONDITION_LIMIT = 1e14
GMRES_RESTART = 60

# (di, dj) of each stencil entry
OFFSETS = {
    "C": (0, 0),
    "E": (1, 0),
    "W": (-1, 0),
    "N": (0, 1),
    "S": (0, -1),
    "NE": (1, 1),
    "NW": (-1, 1),
    "SE": (1, -1),
    "SW": (-1, -1),
}


@dataclass(frozen=True, eq=False)
class LinearEllipticProblem:
    """a11 u11 + 2 a12 u12 + a22 u22 + b1 u1 + b2 u2 + b0 u = rhs, u = boundary on the edges"""

    grid: CurvilinearGrid
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    b0: np.ndarray
    rhs: np.ndarray
    boundary: np.ndarray
    min_margin: float | None = None
    extras: dict = field(default_factory=dict, repr=False)

    @property
    def ellipticity(self) -> np.ndarray:
        return self.a11 * self.a22 - self.a12**2


class Stencil(NamedTuple):
    """Coefficients on interior nodes, each shaped (nx-2, nz-2)."""

    C: np.ndarray
    E: np.ndarray
    W: np.ndarray
    N: np.ndarray
    S: np.ndarray
    NE: np.ndarray
    NW: np.ndarray
    SE: np.ndarray
    SW: np.ndarray


@dataclass
class LinearSolution:
    field: GridField
    residual: float
    condition: float | None
    method: str
    iterations: int = 0


def _inner(a, grid):
    return np.broadcast_to(np.asarray(a, dtype=float), grid.shape)[1:-1, 1:-1]


def mapped_coefficients(problem: LinearEllipticProblem):
    """(c_xixi, c_xizeta, c_zetazeta, c_zeta, c_xi, c_0) on interior nodes"""
    g = problem.grid
    m = g.metrics
    zx1, zx2 = _inner(m.zeta_x1, g), _inner(m.zeta_x2, g)
    zx1x1, zx1x2, zx2x2 = _inner(m.zeta_x1x1, g), _inner(m.zeta_x1x2, g), _inner(m.zeta_x2x2, g)
    a11, a12, a22 = _inner(problem.a11, g), _inner(problem.a12, g), _inner(problem.a22, g)
    b1, b2, b0 = _inner(problem.b1, g), _inner(problem.b2, g), _inner(problem.b0, g)
    c_xx = a11
    c_xz = 2.0 * a11 * zx1 + 2.0 * a12 * zx2
    c_zz = a11 * zx1**2 + 2.0 * a12 * zx1 * zx2 + a22 * zx2**2
    c_z = a11 * zx1x1 + 2.0 * a12 * zx1x2 + a22 * zx2x2 + b1 * zx1 + b2 * zx2
    c_x = b1
    return c_xx, c_xz, c_zz, c_z, c_x, b0


def nondivergence_stencil(problem: LinearEllipticProblem) -> Stencil:
    g = problem.grid
    hx, hz = g.hxi, g.hzeta
    c_xx, c_xz, c_zz, c_z, c_x, c_0 = mapped_coefficients(problem)
    mixed = c_xz / (4.0 * hx * hz)
    return Stencil(
        C=-2.0 * c_xx / hx**2 - 2.0 * c_zz / hz**2 + c_0,
        E=c_xx / hx**2 + c_x / (2.0 * hx),
        W=c_xx / hx**2 - c_x / (2.0 * hx),
        N=c_zz / hz**2 + c_z / (2.0 * hz),
        S=c_zz / hz**2 - c_z / (2.0 * hz),
        NE=mixed,
        NW=-mixed,
        SE=-mixed,
        SW=mixed,
    )


def flux_stencil(grid: CurvilinearGrid, kappa) -> Stencil:
    """
    J * div(kappa grad u) with J = x2_zeta, contravariant metric
    g^{xixi} = 1, g^{xizeta} = zeta_x1, g^{zetazeta} = zeta_x1^2 + zeta_x2^2.
    """
    hx, hz = grid.hxi, grid.hzeta
    xi, zeta = grid.xi, grid.zeta
    kappa = np.broadcast_to(np.asarray(kappa, dtype=float), grid.shape)

    # xi 方向半點 (i +- 1/2, j)
    k_x = 0.5 * (kappa[1:, :] + kappa[:-1, :])
    mx = grid.metrics_at(0.5 * (xi[1:] + xi[:-1])[:, None], zeta[None, :])
    P = mx.jacobian * k_x
    Q = mx.jacobian * mx.zeta_x1 * k_x
    # zeta 方向半點 (i, j +- 1/2)，f' 取節點欄位的值（角點欄已修正）
    k_z = 0.5 * (kappa[:, 1:] + kappa[:, :-1])
    zh = 0.5 * (zeta[1:] + zeta[:-1])
    f = grid.x2[:, 0][:, None]
    f1 = grid.metrics.X_xi[:, 0][:, None]
    s = grid.grading.s(zh)[None, :]
    jac = (grid.top - f) * grid.grading.ds(zh)[None, :]
    zx1 = -f1 * (1.0 - s) / jac
    R = jac * (zx1**2 + jac**-2) * k_z
    Sz = jac * zx1 * k_z

    Pp, Pm = P[1:, 1:-1], P[:-1, 1:-1]
    Qp, Qm = Q[1:, 1:-1], Q[:-1, 1:-1]
    Rp, Rm = R[1:-1, 1:], R[1:-1, :-1]
    Sp, Sm = Sz[1:-1, 1:], Sz[1:-1, :-1]
    q = 4.0 * hx * hz
    return Stencil(
        C=-(Pp + Pm) / hx**2 - (Rp + Rm) / hz**2,
        E=Pp / hx**2 + (Sp - Sm) / q,
        W=Pm / hx**2 - (Sp - Sm) / q,
        N=Rp / hz**2 + (Qp - Qm) / q,
        S=Rm / hz**2 - (Qp - Qm) / q,
        NE=(Qp + Sp) / q,
        NW=-(Qm + Sp) / q,
        SE=-(Qp + Sm) / q,
        SW=(Qm + Sm) / q,
    )


def apply_stencil(stencil: Stencil, values) -> np.ndarray:
    """Stencil applied to a full node array; result on interior nodes."""
    U = np.asarray(values, dtype=float)
    nx, nz = U.shape
    out = np.zeros((nx - 2, nz - 2))
    for name, (di, dj) in OFFSETS.items():
        out += getattr(stencil, name) * U[1 + di : nx - 1 + di, 1 + dj : nz - 1 + dj]
    return out


def assemble_system(grid: CurvilinearGrid, stencil: Stencil, rhs, boundary):
    """Sparse matrix on interior unknowns; Dirichlet neighbours moved to the right-hand side."""
    nx, nz = grid.shape
    ni, nj = nx - 2, nz - 2
    n = ni * nj
    I, J = np.meshgrid(np.arange(1, nx - 1), np.arange(1, nz - 1), indexing="ij")
    row = ((I - 1) * nj + (J - 1)).ravel()
    b = np.array(_inner(rhs, grid), dtype=float).ravel()
    bnd = np.broadcast_to(np.asarray(boundary, dtype=float), grid.shape)

    rows, cols, vals = [], [], []
    for name, (di, dj) in OFFSETS.items():
        coef = np.asarray(getattr(stencil, name), dtype=float).ravel()
        ii = (I + di).ravel()
        jj = (J + dj).ravel()
        on_edge = (ii == 0) | (ii == nx - 1) | (jj == 0) | (jj == nz - 1)
        b[on_edge] -= coef[on_edge] * bnd[ii[on_edge], jj[on_edge]]
        keep = ~on_edge
        rows.append(row[keep])
        cols.append(((ii[keep] - 1) * nj + (jj[keep] - 1)))
        vals.append(coef[keep])
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return A, b


def condition_estimate(A, lu) -> float:
    """1-norm condition estimate; the inverse is applied through the LU factors."""
    inv = spla.LinearOperator(
        A.shape,
        matvec=lu.solve,
        rmatvec=lambda x: lu.solve(x, trans="T"),
        dtype=float,
    )
    # t=1 keeps the estimate deterministic
    return float(spla.onenormest(A, t=1) * spla.onenormest(inv, t=1))


def solve_system(
    grid: CurvilinearGrid,
    stencil: Stencil,
    rhs,
    boundary,
    method: str = "auto",
    check_condition: bool = True,
) -> LinearSolution:
    A, b = assemble_system(grid, stencil, rhs, boundary)
    n = A.shape[0]
    if method == "auto":
        method = "direct" if n <= DIRECT_LIMIT else "gmres"

    cond = None
    iterations = 0
    if method == "direct":
        lu = spla.splu(A.tocsc())
        x = lu.solve(b)
        r = b - A @ x
        # 一次迭代修正
        x = x + lu.solve(r)
        if check_condition:
            cond = condition_estimate(A, lu)
    elif method == "gmres":
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-6, fill_factor=20)
        M = spla.LinearOperator(A.shape, ilu.solve)
        counter = {"n": 0}

        def _count(_):
            counter["n"] += 1

        x, info = spla.gmres(A, b, M=M, rtol=1e-12, atol=0.0, restart=GMRES_RESTART, maxiter=200, callback=_count)
        iterations = counter["n"]
        if info != 0:
            res = _relative_residual(A, x, b)
            raise LinearSolveDiverged(res, info)
    else:
        raise ValueError(f"unknown linear solver {method!r}")

    res = _relative_residual(A, x, b)
    if not res <= RESIDUAL_TOL:
        raise LinearSolveDiverged(res)
    if cond is not None and cond > CONDITION_LIMIT:
        raise IllConditioned(cond)

    U = np.array(np.broadcast_to(np.asarray(boundary, dtype=float), grid.shape))
    U[1:-1, 1:-1] = x.reshape(grid.nx - 2, grid.nz - 2)
    log.debug("linear solve (%s): n=%d residual=%.2e cond=%s", method, n, res, cond)
    return LinearSolution(GridField(grid, U), res, cond, method, iterations)


def _relative_residual(A, x, b) -> float:
    nb = float(np.linalg.norm(b))
    nr = float(np.linalg.norm(b - A @ x))
    if nb == 0.0:
        return nr
    return nr / nb


def solve_linear(problem: LinearEllipticProblem, method: str = "auto", check_condition: bool = True) -> GridField:
    return solve_problem(problem, method, check_condition).field


def solve_problem(problem: LinearEllipticProblem, method: str = "auto", check_condition: bool = True) -> LinearSolution:
    det = _inner(problem.ellipticity, problem.grid)
    if np.any(~(det > 0.0)):
        log.warning("⚠️ ellipticity fails at %d interior node(s)", int(np.count_nonzero(~(det > 0.0))))
    return solve_system(
        problem.grid,
        nondivergence_stencil(problem),
        problem.rhs,
        problem.boundary,
        method=method,
        check_condition=check_condition,
    )


# ----------------------------
# 製造解 (MMS)
# ----------------------------
@dataclass(frozen=True)
class ManufacturedSolution:
    """u*(x1, x2) with analytic first and second derivatives"""

    value: object
    gradient: object
    hessian: object


def sine_exp_solution() -> ManufacturedSolution:
    """u* = sin(x1) exp(-x2)"""
    return ManufacturedSolution(
        value=lambda x1, x2: np.sin(x1) * np.exp(-x2),
        gradient=lambda x1, x2: (np.cos(x1) * np.exp(-x2), -np.sin(x1) * np.exp(-x2)),
        hessian=lambda x1, x2: (
            -np.sin(x1) * np.exp(-x2),
            -np.cos(x1) * np.exp(-x2),
            np.sin(x1) * np.exp(-x2),
        ),
    )


def manufactured_problem(
    grid: CurvilinearGrid,
    solution: ManufacturedSolution,
    a11=1.0,
    a12=0.0,
    a22=1.0,
    b1=0.0,
    b2=0.0,
    b0=0.0,
) -> tuple[LinearEllipticProblem, GridField]:
    """Source term and boundary trace that make `solution` exact; coefficients may be callables of (x1, x2)."""
    x1, x2 = grid.x1, grid.x2

    def node(c):
        return np.broadcast_to(np.asarray(c(x1, x2) if callable(c) else c, dtype=float), grid.shape).copy()

    A11, A12, A22, B1, B2, B0 = (node(c) for c in (a11, a12, a22, b1, b2, b0))
    u = np.asarray(solution.value(x1, x2), dtype=float)
    u1, u2 = solution.gradient(x1, x2)
    u11, u12, u22 = solution.hessian(x1, x2)
    rhs = A11 * u11 + 2.0 * A12 * u12 + A22 * u22 + B1 * u1 + B2 * u2 + B0 * u
    problem = LinearEllipticProblem(
        grid=grid,
        a11=A11,
        a12=A12,
        a22=A22,
        b1=B1,
        b2=B2,
        b0=B0,
        rhs=rhs,
        boundary=u,
    )
    return problem, GridField(grid, u)
