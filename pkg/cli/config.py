"""
Run configuration: a JSON file with one object per section.

    {
      "mode": "verify",
      "seed": 0,
      "gas":        {"gamma": 1.4, "p0": 1.0, "rho0": 1.0, "m_star": 0.5, "m0": 0.1, "eps": 0.001},
      "weights":    {"alpha": 0.8, "beta": 0.4, "delta": 0.1, "D0": 2.0},
      "profile":    {"minus": {...}, "arc": {...}, "plus": {...}},
      "farfield":   {"m_inf": {...}, "rho_inf": {...}, "strict_paper": false},
      "truncation": {"R": 8.0, "H": 8.0},
      "grid":       {"nx": 129, "nz": 65, "grading": 1.5},
      "solver":     {...}, "study": {...}, "mms": {...}, "verify": {...}
    }

Every section may be omitted (defaults are the canonical bump run). Unknown
keys are rejected and every violated constraint is reported at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from common.errors import ConstraintViolation, ParseError
from solver.fixed_point import SolverConfig

MODES = ("solve", "verify", "truncation-study", "mms")
LINEAR_SOLVERS = ("auto", "direct", "gmres")
SCHEMES = ("linearized", "picard")
FORMS = ("nondivergence", "divergence")


def _flat():
    return {"family": "flat"}


def _bump():
    return {"family": "poly", "coefficients": [0.1, 0.0, -0.1]}


def _constant():
    return {"family": "constant"}


@dataclass(frozen=True)
class GasConfig:
    gamma: float = 1.4
    p0: float = 1.0
    rho0: float = 1.0
    m_star: float = 0.5
    m0: float = 0.1
    eps: float = 1e-3


@dataclass(frozen=True)
class WeightConfig:
    alpha: float = 0.8
    beta: float = 0.4
    delta: float = 0.1
    D0: float = 2.0


@dataclass(frozen=True)
class ProfileConfig:
    minus: dict = field(default_factory=_flat)
    arc: dict = field(default_factory=_bump)
    plus: dict = field(default_factory=_flat)
    allow_flat_corners: bool = False
    on_norm_violation: str = "raise"

    def pieces(self) -> dict:
        return {"minus": self.minus, "arc": self.arc, "plus": self.plus}


@dataclass(frozen=True)
class FarFieldConfig:
    m_inf: dict = field(default_factory=_constant)
    rho_inf: dict = field(default_factory=_constant)
    strict_paper: bool = False


@dataclass(frozen=True)
class TruncationConfig:
    R: float = 8.0
    H: float = 8.0


@dataclass(frozen=True)
class GridConfig:
    nx: int = 129
    nz: int = 65
    grading: float = 1.5


@dataclass(frozen=True)
class SolverSection:
    tol_outer: float | None = None
    tol_pde: float | None = None
    omega: float = 1.0
    k_max: int = 60
    quad_points: int = 5
    linear_solver: str = "auto"
    scheme: str = "linearized"
    form: str = "nondivergence"
    check_condition: bool = True


@dataclass(frozen=True)
class StudyConfig:
    R_list: tuple = (8.0, 16.0, 32.0)


@dataclass(frozen=True)
class MMSConfig:
    levels: tuple = (33, 65, 129)
    bottom: dict = field(default_factory=_flat)
    grading: float = 1.0
    a11: float = 1.39
    a12: float = 0.1
    a22: float = 1.2
    b1: float = 0.1
    b2: float = 0.0
    b0: float = -0.5
    order_low: float = 1.8
    order_high: float = 2.2


@dataclass(frozen=True)
class VerifyConfig:
    seeds: int = 10
    corner_exclusion: float = 0.5
    uniqueness_radius: float = 1.0
    corner_radius: float = 0.5
    n_random: int = 4096
    refine: bool = False


@dataclass(frozen=True)
class RunConfig:
    gas: GasConfig = field(default_factory=GasConfig)
    weights: WeightConfig = field(default_factory=WeightConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    farfield: FarFieldConfig = field(default_factory=FarFieldConfig)
    truncation: TruncationConfig = field(default_factory=TruncationConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverSection = field(default_factory=SolverSection)
    study: StudyConfig = field(default_factory=StudyConfig)
    mms: MMSConfig = field(default_factory=MMSConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    mode: str = "solve"
    out: str | None = None
    seed: int = 0

    def solver_config(self, progress: bool = True) -> SolverConfig:
        s = self.solver
        return SolverConfig(
            nx=self.grid.nx,
            nz=self.grid.nz,
            grading=self.grid.grading,
            tol_outer=s.tol_outer,
            tol_pde=s.tol_pde,
            omega=s.omega,
            k_max=s.k_max,
            quad_points=s.quad_points,
            linear_solver=s.linear_solver,
            scheme=s.scheme,
            form=s.form,
            progress=progress,
            check_condition=s.check_condition,
        )

    def with_overrides(self, mode=None, seed=None, strict_paper=None, out=None) -> "RunConfig":
        """命令列參數覆寫設定檔"""
        cfg = self
        if mode is not None:
            cfg = replace(cfg, mode=mode)
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if strict_paper:
            cfg = replace(cfg, farfield=replace(cfg.farfield, strict_paper=True))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        return cfg


SECTIONS = {
    "gas": GasConfig,
    "weights": WeightConfig,
    "profile": ProfileConfig,
    "farfield": FarFieldConfig,
    "truncation": TruncationConfig,
    "grid": GridConfig,
    "solver": SolverSection,
    "study": StudyConfig,
    "mms": MMSConfig,
    "verify": VerifyConfig,
}


# ----------------------------
# 型別檢查
# ----------------------------
def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_value(where: str, name: str, value, default, problems: list):
    """依預設值的型別檢查 JSON 值，回傳轉換後的值"""
    if default is None:
        if value is None:
            return None
        if not _is_number(value):
            problems.append(f"{where}.{name}: expected a number or null, got {value!r}")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            problems.append(f"{where}.{name}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if not (isinstance(value, int) and not isinstance(value, bool)):
            problems.append(f"{where}.{name}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if not _is_number(value):
            problems.append(f"{where}.{name}: expected a number, got {value!r}")
            return value
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            problems.append(f"{where}.{name}: expected a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            problems.append(f"{where}.{name}: expected a list of numbers, got {value!r}")
            return value
        return tuple(value)
    if isinstance(default, dict):
        if not isinstance(value, dict):
            problems.append(f"{where}.{name}: expected an object, got {value!r}")
        return value
    return value


def _section(cls, where: str, data, problems: list):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        problems.append(f"{where}: expected an object")
        return cls()
    defaults = cls()
    known = {f.name for f in fields(cls)}
    for key in sorted(set(data) - known):
        problems.append(f"{where}: unknown key {key!r}")
    values = {}
    for f in fields(cls):
        if f.name in data:
            before = len(problems)
            value = _check_value(where, f.name, data[f.name], getattr(defaults, f.name), problems)
            # 型別錯誤時保留預設值，讓交叉檢查照常進行
            if len(problems) == before:
                values[f.name] = value
    return replace(defaults, **values)


# ----------------------------
# 交叉檢查
# ----------------------------
def _constraints(cfg: RunConfig) -> list:
    out = []
    g, w, t = cfg.gas, cfg.weights, cfg.truncation

    if cfg.mode not in MODES:
        out.append(f"mode {cfg.mode!r} not in {MODES}")
    if not g.gamma > 1.0:
        out.append(f"gamma = {g.gamma} must exceed 1")
    if not (g.p0 > 0.0 and g.rho0 > 0.0):
        out.append("p0 and rho0 must be positive")
    elif g.gamma > 1.0:
        c0 = math.sqrt(g.gamma * g.p0 / g.rho0)
        if not g.m0 / g.rho0 < c0:
            out.append(f"background not subsonic: m0/rho0 = {g.m0 / g.rho0:.6g} >= c0 = {c0:.6g}")
        if not g.m_star / g.rho0 < math.sqrt(g.p0 / g.rho0):
            out.append(f"m_star/rho0 = {g.m_star / g.rho0:.6g} must be below sqrt(p0/rho0)")
    if not 0.0 < g.m0 <= g.m_star:
        out.append(f"need 0 < m0 <= m_star (m0 = {g.m0}, m_star = {g.m_star})")
    if not 0.0 < g.eps < 0.5:
        out.append(f"eps = {g.eps} must lie in (0, 1/2)")
    if not 0.0 < w.beta < w.alpha < 1.0:
        out.append(f"need 0 < beta < alpha < 1 (alpha = {w.alpha}, beta = {w.beta})")
    if not 0.0 < w.delta < math.pi / 2.0:
        out.append(f"delta = {w.delta} must lie in (0, pi/2)")
    if not w.D0 > 0.0:
        out.append(f"D0 = {w.D0} must be positive")

    limit = w.D0 + 1.0
    if not t.R > limit:
        out.append(f"R = {t.R} must exceed D0 + 1 = {limit:g}")
    if not t.H > limit:
        out.append(f"H = {t.H} must exceed D0 + 1 = {limit:g}")

    for key in ("minus", "arc", "plus"):
        piece = getattr(cfg.profile, key)
        if "family" not in piece:
            out.append(f"profile.{key}: missing 'family'")
    if cfg.profile.on_norm_violation not in ("raise", "warn"):
        out.append("profile.on_norm_violation must be 'raise' or 'warn'")
    for key in ("m_inf", "rho_inf"):
        piece = getattr(cfg.farfield, key)
        if piece.get("family", "constant") not in ("constant", "exp-decay", "algebraic-decay"):
            out.append(f"farfield.{key}: unknown family {piece.get('family')!r}")

    for name, n in (("grid.nx", cfg.grid.nx), ("grid.nz", cfg.grid.nz)):
        if n < 9 or n % 2 == 0:
            out.append(f"{name} = {n} must be odd and >= 9")
    if not cfg.grid.grading >= 1.0:
        out.append(f"grid.grading = {cfg.grid.grading} must be >= 1")

    s = cfg.solver
    if not 0.0 < s.omega <= 1.0:
        out.append(f"solver.omega = {s.omega} must lie in (0, 1]")
    if s.k_max < 1:
        out.append("solver.k_max must be >= 1")
    if s.quad_points < 1:
        out.append("solver.quad_points must be >= 1")
    for name, tol in (("tol_outer", s.tol_outer), ("tol_pde", s.tol_pde)):
        if tol is not None and not tol > 0.0:
            out.append(f"solver.{name} must be positive")
    if s.linear_solver not in LINEAR_SOLVERS:
        out.append(f"solver.linear_solver {s.linear_solver!r} not in {LINEAR_SOLVERS}")
    if s.scheme not in SCHEMES:
        out.append(f"solver.scheme {s.scheme!r} not in {SCHEMES}")
    if s.form not in FORMS:
        out.append(f"solver.form {s.form!r} not in {FORMS}")

    rl = cfg.study.R_list
    if len(rl) < 2 or any(b <= a for a, b in zip(rl, rl[1:])):
        out.append(f"study.R_list must hold at least two increasing radii: {list(rl)}")
    elif not rl[0] > limit:
        out.append(f"study.R_list[0] = {rl[0]} must exceed D0 + 1 = {limit:g}")
    else:
        for R in rl:
            n = (cfg.grid.nx - 1) * R / rl[0]
            if abs(n - round(n)) > 1e-9 or int(round(n)) % 2:
                out.append(f"study.R_list: R = {R} does not keep the grid spacing of R = {rl[0]} with nx = {cfg.grid.nx}")

    lv = cfg.mms.levels
    if len(lv) < 2 or any(b <= a for a, b in zip(lv, lv[1:])) or any(int(n) != n or n < 9 or int(n) % 2 == 0 for n in lv):
        out.append(f"mms.levels must be increasing odd integers >= 9: {list(lv)}")
    if not cfg.mms.order_low < cfg.mms.order_high:
        out.append("mms.order_low must be below mms.order_high")

    v = cfg.verify
    if v.seeds < 1:
        out.append("verify.seeds must be >= 1")
    for name in ("corner_exclusion", "uniqueness_radius", "corner_radius"):
        if not getattr(v, name) >= 0.0:
            out.append(f"verify.{name} must be non-negative")
    if v.n_random < 0:
        out.append("verify.n_random must be non-negative")
    return out


def parse_config(data) -> RunConfig:
    """dict -> RunConfig；所有錯誤一次回報"""
    if not isinstance(data, dict):
        raise ParseError("configuration must be a JSON object")
    problems = []
    known = set(SECTIONS) | {"mode", "out", "seed"}
    for key in sorted(set(data) - known):
        problems.append(f"unknown key {key!r}")

    sections = {name: _section(cls, name, data.get(name), problems) for name, cls in SECTIONS.items()}
    top = {}
    for key, default in (("mode", "solve"), ("seed", 0), ("out", "")):
        if data.get(key) is None:
            continue
        before = len(problems)
        value = _check_value("config", key, data[key], default, problems)
        if len(problems) == before:
            top[key] = value

    cfg = RunConfig(**sections, **top)
    problems += _constraints(cfg)
    if problems:
        raise ConstraintViolation(problems)
    return cfg


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from e
    return parse_config(data)


def validate(cfg: RunConfig) -> RunConfig:
    """覆寫後再檢查一次"""
    problems = _constraints(cfg)
    if problems:
        raise ConstraintViolation(problems)
    return cfg
