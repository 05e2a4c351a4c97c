"""專案共用的例外與警告類別"""

from __future__ import annotations


class SubsonicFlowError(Exception):
    """所有錯誤的根類別"""


# ----------------------------
# geometry
# ----------------------------
class GeometryError(SubsonicFlowError):
    pass


class AngleViolation(GeometryError):
    def __init__(self, corner: str, angle: float, delta: float):
        self.corner = corner
        self.angle = angle
        self.delta = delta
        super().__init__(
            f"corner {corner}: angle {angle:.6f} outside ({delta:.6f}, pi - {delta:.6f})"
        )


class HeightViolation(GeometryError):
    def __init__(self, piece: str, x1: float, value: float, bound: str):
        self.piece = piece
        self.x1 = x1
        self.value = value
        super().__init__(f"{piece}: f({x1:.6g}) = {value:.6g} violates {bound}")


class NormViolation(GeometryError):
    def __init__(self, piece: str, value: float, limit: float = 1.0):
        self.piece = piece
        self.value = value
        self.limit = limit
        super().__init__(f"{piece}: sampled weighted norm {value:.6g} > {limit:g}")


class DiscontinuousBoundary(GeometryError):
    def __init__(self, corner: str, left: float, right: float):
        self.corner = corner
        super().__init__(f"boundary jumps at {corner}: {left:.12g} != {right:.12g}")


class TruncationTooSmall(GeometryError):
    pass


class JacobianNonPositive(GeometryError):
    def __init__(self, count: int, minimum: float):
        self.count = count
        self.minimum = minimum
        super().__init__(f"{count} nodes with non-positive Jacobian (min {minimum:.3g})")


# ----------------------------
# farfield
# ----------------------------
class FarFieldError(SubsonicFlowError):
    pass


class NonMonotoneL(FarFieldError):
    pass


class InvalidFarField(FarFieldError):
    pass


# ----------------------------
# thermo
# ----------------------------
class ThermoError(SubsonicFlowError):
    pass


class SupersonicChi(ThermoError):
    def __init__(self, indices, chi_max):
        self.indices = indices
        self.chi_max = chi_max
        super().__init__(f"no subsonic density at {len(indices)} state(s): chi above chi_max")


class NegativeChi(ThermoError):
    pass


# ----------------------------
# solver
# ----------------------------
class SolverError(SubsonicFlowError):
    pass


class SubsonicViolation(SolverError):
    def __init__(self, nodes, points=None):
        self.nodes = list(nodes)
        self.points = [] if points is None else [tuple(map(float, p)) for p in points]
        head = ", ".join(f"({x:.3f}, {y:.3f})" for x, y in self.points[:5])
        super().__init__(f"{len(self.nodes)} node(s) left the subsonic branch: {head}")


class QuadratureStateSupersonic(SolverError):
    def __init__(self, nodes, s):
        self.nodes = list(nodes)
        self.s = s
        super().__init__(f"quadrature state at s={s:.4f} supersonic at {len(self.nodes)} node(s)")


class LinearSolveDiverged(SolverError):
    def __init__(self, residual: float, info: int = 0):
        self.residual = residual
        self.info = info
        super().__init__(f"linear solve failed: relative residual {residual:.3e} (info={info})")


class IllConditioned(SolverError):
    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f"system ill-conditioned: 1-norm condition estimate {condition:.3e}")


class MaxIterationsExceeded(SolverError):
    def __init__(self, iterations: int, update_norm: float, report=None):
        self.iterations = iterations
        self.update_norm = update_norm
        self.report = report
        super().__init__(f"no convergence after {iterations} iterations (update {update_norm:.3e})")


# ----------------------------
# analysis
# ----------------------------
class AnalysisError(SubsonicFlowError):
    pass


class StagnationEncountered(AnalysisError):
    def __init__(self, point):
        self.point = tuple(map(float, point))
        super().__init__(f"|grad psi| vanishes near ({self.point[0]:.4f}, {self.point[1]:.4f})")


class LeftDomain(AnalysisError):
    def __init__(self, point):
        self.point = tuple(map(float, point))
        super().__init__(f"trace left the domain at ({self.point[0]:.4f}, {self.point[1]:.4f})")


class InsufficientRadii(AnalysisError):
    pass


# ----------------------------
# cli / config
# ----------------------------
class ConfigError(SubsonicFlowError):
    pass


class ParseError(ConfigError):
    pass


class ConstraintViolation(ConfigError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# ----------------------------
# 警告
# ----------------------------
class SonicProximity(UserWarning):
    """chi 貼近 chi_max，仍接受"""


class NormWarning(UserWarning):
    """取樣範數超過理論上界"""


class SlowContraction(UserWarning):
    """外層迭代收斂比例 > 0.9"""
